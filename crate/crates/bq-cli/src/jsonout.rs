//! Minimal JSON emission with a fixed numeric contract: every float is
//! written with 17 significant digits, enough to round-trip f64 exactly.

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else {
        // Reports only ever contain finite metrics; anything else becomes
        // null rather than invalid JSON.
        "null".to_string()
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Ordered key/value object builder.
#[derive(Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn float(mut self, key: &str, v: f64) -> Self {
        self.fields.push((key.to_string(), fmt_f64(v)));
        self
    }

    pub fn int(mut self, key: &str, v: u64) -> Self {
        self.fields.push((key.to_string(), v.to_string()));
        self
    }

    pub fn string(mut self, key: &str, v: &str) -> Self {
        self.fields.push((key.to_string(), format!("\"{}\"", escape(v))));
        self
    }

    pub fn raw(mut self, key: &str, v: String) -> Self {
        self.fields.push((key.to_string(), v));
        self
    }

    pub fn finish(self) -> String {
        let body: Vec<String> = self
            .fields
            .into_iter()
            .map(|(k, v)| format!("\"{}\":{}", escape(&k), v))
            .collect();
        format!("{{{}}}", body.join(","))
    }
}

pub fn array(items: Vec<String>) -> String {
    format!("[{}]", items.join(","))
}
