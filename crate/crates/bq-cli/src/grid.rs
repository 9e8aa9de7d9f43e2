//! Sweep grid parsing: a value, a comma list, or an inclusive `start:end:step`
//! range.

pub fn parse_f64_list(spec: &str) -> Result<Vec<f64>, String> {
    parse_list(spec, |s| s.parse::<f64>().map_err(|e| e.to_string()))
}

pub fn parse_u32_list(spec: &str) -> Result<Vec<u32>, String> {
    // Ranges like 1:25:4 are meaningful for K too; go through f64 and check
    // integrality afterwards.
    let vals = parse_f64_list(spec)?;
    vals.into_iter()
        .map(|v| {
            if v.fract() == 0.0 && (1.0..=u32::MAX as f64).contains(&v) {
                Ok(v as u32)
            } else {
                Err(format!("{v} is not a positive integer"))
            }
        })
        .collect()
}

fn parse_list(spec: &str, parse: impl Fn(&str) -> Result<f64, String>) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty value list".to_string());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be start:end:step, got {spec}"));
        }
        let start = parse(parts[0].trim())?;
        let end = parse(parts[1].trim())?;
        let step = parse(parts[2].trim())?;
        if !(step > 0.0) {
            return Err(format!("range step must be positive, got {step}"));
        }
        if end < start {
            return Err(format!("empty range {spec}"));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| start + i as f64 * step).collect());
    }
    spec.split(',')
        .map(|part| parse(part.trim()))
        .collect()
}
