//! Binary model files.
//!
//! `BQM1` holds a chain of full-precision layers; `BQQ1` holds the quantized
//! chain. Both are little-endian:
//!
//! ```text
//! BQM1 := "BQM1" u32 layer_count
//!         layer*: u32 rows, u32 cols, u8 activation, rows·cols f64 (row-major)
//! BQQ1 := "BQQ1" u32 layer_count
//!         layer*: u32 rows, u32 cols, u8 activation,
//!                 u8 wbit, u32 group_size,
//!                 rows·cols u8  Q  (row-major),
//!                 rows·cols f64 S, rows·cols f64 Z
//! ```
//!
//! Activation tags: 0 = none, 1 = ReLU.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matlin::DenseMatrix;
use crate::pipeline::{Activation, LayerSpec, QuantizedLayer};
use crate::quantgrid::{IntMatrix, QuantGrid};

pub const MODEL_MAGIC: &[u8; 4] = b"BQM1";
pub const QUANTIZED_MAGIC: &[u8; 4] = b"BQQ1";

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64_slice<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)?;
    Ok(buf[0])
}

fn read_f64_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

fn layer_dims<R: Read>(r: &mut R) -> Result<(usize, usize, Activation)> {
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    let activation = Activation::from_tag(read_u8(r)?)
        .map_err(|e| Error::Format(e.to_string()))?;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("degenerate layer shape {rows}x{cols}")));
    }
    Ok((rows, cols, activation))
}

pub fn write_model<W: Write>(w: &mut W, layers: &[LayerSpec]) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    write_u32(w, layers.len() as u32)?;
    for layer in layers {
        write_u32(w, layer.weight.rows() as u32)?;
        write_u32(w, layer.weight.cols() as u32)?;
        w.write_all(&[layer.activation.tag()])?;
        write_f64_slice(w, layer.weight.data())?;
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<Vec<LayerSpec>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"BQM1\"")));
    }
    let count = read_u32(r)? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let (rows, cols, activation) = layer_dims(r)?;
        let data = read_f64_vec(r, rows * cols)?;
        let weight = DenseMatrix::new(rows, cols, data)
            .map_err(|e| Error::Format(format!("layer {i}: {e}")))?;
        layers.push(LayerSpec::new(weight, activation));
    }
    Ok(layers)
}

pub fn write_quantized<W: Write>(w: &mut W, layers: &[QuantizedLayer]) -> Result<()> {
    w.write_all(QUANTIZED_MAGIC)?;
    write_u32(w, layers.len() as u32)?;
    for layer in layers {
        let q = &layer.q;
        write_u32(w, q.rows() as u32)?;
        write_u32(w, q.cols() as u32)?;
        w.write_all(&[layer.activation.tag()])?;
        w.write_all(&[layer.grid.wbit()])?;
        write_u32(w, layer.grid.group_size() as u32)?;
        let mut bytes = Vec::with_capacity(q.data().len());
        for &v in q.data() {
            if !(0..=255).contains(&v) {
                return Err(Error::Format(format!("integer {v} does not fit in a byte")));
            }
            bytes.push(v as u8);
        }
        w.write_all(&bytes)?;
        write_f64_slice(w, layer.grid.scales().data())?;
        write_f64_slice(w, layer.grid.zero_points().data())?;
    }
    Ok(())
}

pub fn read_quantized<R: Read>(r: &mut R) -> Result<Vec<QuantizedLayer>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != QUANTIZED_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected \"BQQ1\"")));
    }
    let count = read_u32(r)? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let (rows, cols, activation) = layer_dims(r)?;
        let wbit = read_u8(r)?;
        let group_size = read_u32(r)? as usize;
        let mut q_bytes = vec![0u8; rows * cols];
        r.read_exact(&mut q_bytes)?;
        let box_hi = (1i64 << wbit.min(8)) - 1;
        let q_data: Vec<i64> = q_bytes.iter().map(|&b| b as i64).collect();
        if let Some(&bad) = q_data.iter().find(|&&v| v > box_hi) {
            return Err(Error::Format(format!(
                "layer {i}: integer {bad} outside the {wbit}-bit box"
            )));
        }
        let s = read_f64_vec(r, rows * cols)?;
        let z = read_f64_vec(r, rows * cols)?;
        let grid = QuantGrid::new(
            wbit,
            group_size,
            DenseMatrix::new(rows, cols, s).map_err(|e| Error::Format(format!("layer {i} scales: {e}")))?,
            DenseMatrix::new(rows, cols, z).map_err(|e| Error::Format(format!("layer {i} zero-points: {e}")))?,
        )
        .map_err(|e| Error::Format(format!("layer {i}: {e}")))?;
        let q = IntMatrix::new(rows, cols, q_data)
            .map_err(|e| Error::Format(format!("layer {i}: {e}")))?;
        layers.push(QuantizedLayer { q, grid, activation });
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_layer() -> impl Strategy<Value = LayerSpec> {
        ((1usize..5, 1usize..5), proptest::bool::ANY).prop_flat_map(|((m, n), relu)| {
            proptest::collection::vec(-10.0f64..10.0, m * n).prop_map(move |data| {
                LayerSpec::new(
                    DenseMatrix::new(m, n, data).unwrap(),
                    if relu { Activation::Relu } else { Activation::None },
                )
            })
        })
    }

    proptest! {
        #[test]
        fn model_round_trip(layers in proptest::collection::vec(arb_layer(), 0..4)) {
            let mut buf = Vec::new();
            write_model(&mut buf, &layers).unwrap();
            let back = read_model(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), layers.len());
            for (a, b) in layers.iter().zip(&back) {
                prop_assert_eq!(a.weight.data(), b.weight.data());
                prop_assert_eq!(a.activation, b.activation);
            }
        }
    }

    #[test]
    fn quantized_round_trip() {
        use crate::objective::JtaConfig;
        use crate::pipeline::{quantize_chain, synthetic_calibration};

        let layers = vec![
            LayerSpec::new(synthetic_calibration(4, 4, 1), Activation::Relu),
            LayerSpec::new(synthetic_calibration(4, 3, 2), Activation::None),
        ];
        let x = synthetic_calibration(8, 4, 3);
        let cfg = JtaConfig { seed: 5, ..JtaConfig::for_wbit(3) };
        let chain = quantize_chain(&layers, &x, &cfg).unwrap();

        let mut buf = Vec::new();
        write_quantized(&mut buf, &chain.layers).unwrap();
        let back = read_quantized(&mut buf.as_slice()).unwrap();
        assert_eq!(back.len(), chain.layers.len());
        for (a, b) in chain.layers.iter().zip(&back) {
            assert_eq!(a.q, b.q);
            assert_eq!(a.grid, b.grid);
            assert_eq!(a.activation, b.activation);
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let buf = b"NOPE\x00\x00\x00\x00".to_vec();
        assert!(matches!(read_model(&mut buf.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_quantized(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_file_is_an_io_error() {
        let layers = vec![LayerSpec::new(DenseMatrix::zeros(2, 2), Activation::None)];
        let mut buf = Vec::new();
        write_model(&mut buf, &layers).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_model(&mut buf.as_slice()), Err(Error::Io(_))));
    }

    #[test]
    fn bad_activation_tag_is_rejected() {
        let mut buf = Vec::new();
        buf.extend_from_slice(MODEL_MAGIC);
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.push(9);
        buf.extend_from_slice(&1.0f64.to_le_bytes());
        assert!(matches!(read_model(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
