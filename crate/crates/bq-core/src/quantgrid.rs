//! Scale/zero-point calibration, the integer box, and dequantization
//! `Ŵ = S ⊙ (Q − Z)`.
//!
//! Grids are asymmetric min-max: per group, the scale comes from the value
//! range and the zero-point from the minimum. Groups partition the rows of a
//! column (input-dimension grouping), so the scale may vary along a column.

use crate::error::{Error, Result};
use crate::matlin::DenseMatrix;

/// Rounds with ties away from zero; the single rounding convention shared by
/// calibration, the decoders, and the oracle.
#[inline]
pub fn round_ties_away(x: f64) -> f64 {
    x.round()
}

/// `clamp(round(x), {0..box_hi})` as an integer.
#[inline]
pub fn clamp_round(x: f64, box_hi: i64) -> i64 {
    let r = round_ties_away(x);
    if r <= 0.0 {
        0
    } else if r >= box_hi as f64 {
        box_hi
    } else {
        r as i64
    }
}

/// Per-element quantization grid: positive scales `S`, real zero-points `Z`,
/// constant within each row group of a column.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantGrid {
    wbit: u8,
    group_size: usize,
    s: DenseMatrix,
    z: DenseMatrix,
}

impl QuantGrid {
    pub fn new(wbit: u8, group_size: usize, s: DenseMatrix, z: DenseMatrix) -> Result<Self> {
        validate_wbit(wbit)?;
        validate_group_size(group_size, s.rows())?;
        if s.rows() != z.rows() || s.cols() != z.cols() {
            return Err(Error::DimensionMismatch(format!(
                "scale {}x{} vs zero-point {}x{}",
                s.rows(),
                s.cols(),
                z.rows(),
                z.cols()
            )));
        }
        if s.data().iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParameter("all scales must be > 0".into()));
        }
        Ok(Self { wbit, group_size, s, z })
    }

    pub fn wbit(&self) -> u8 {
        self.wbit
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    /// Highest admissible integer, `2^wbit − 1`.
    pub fn box_hi(&self) -> i64 {
        (1i64 << self.wbit) - 1
    }

    pub fn scales(&self) -> &DenseMatrix {
        &self.s
    }

    pub fn zero_points(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn rows(&self) -> usize {
        self.s.rows()
    }

    pub fn cols(&self) -> usize {
        self.s.cols()
    }

    pub fn scale_column(&self, j: usize) -> Vec<f64> {
        self.s.column(j)
    }

    pub fn zero_point_column(&self, j: usize) -> Vec<f64> {
        self.z.column(j)
    }
}

/// Integer matrix whose entries live in the owning grid's box.
#[derive(Debug, Clone, PartialEq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[i64]) {
        for (i, &v) in col.iter().enumerate() {
            self.set(i, j, v);
        }
    }
}

fn validate_wbit(wbit: u8) -> Result<()> {
    if !(2..=8).contains(&wbit) {
        return Err(Error::InvalidParameter(format!(
            "wbit must be in [2, 8], got {wbit}"
        )));
    }
    Ok(())
}

fn validate_group_size(group_size: usize, rows: usize) -> Result<()> {
    if group_size == 0 {
        return Ok(());
    }
    if group_size > rows || rows % group_size != 0 {
        return Err(Error::InvalidGroupSize { group_size, rows });
    }
    Ok(())
}

/// Asymmetric min-max calibration per row group of each column:
/// `s = (max − min) / (2^wbit − 1)`, `z = clamp(round(−min/s), box)`.
///
/// A constant group has no range; it gets `s = max(|w|, 1)` and the box
/// midpoint as zero-point, which makes the constant value itself a grid point
/// (`q = z + round(w/s)` stays inside the box for wbit ≥ 2).
pub fn calibrate_minmax(w: &DenseMatrix, wbit: u8, group_size: usize) -> Result<QuantGrid> {
    validate_wbit(wbit)?;
    validate_group_size(group_size, w.rows())?;
    let (m, n) = (w.rows(), w.cols());
    let g = if group_size == 0 { m } else { group_size };
    let levels = ((1i64 << wbit) - 1) as f64;
    let midpoint = (1i64 << (wbit - 1)) as f64;

    let mut s = DenseMatrix::zeros(m, n);
    let mut z = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let mut i0 = 0;
        while i0 < m {
            let group: Vec<f64> = (i0..i0 + g).map(|i| w.get(i, j)).collect();
            let lo = group.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = group.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (sg, zg) = if hi > lo {
                let sg = (hi - lo) / levels;
                let zg = clamp_round(-lo / sg, (1i64 << wbit) - 1) as f64;
                (sg, zg)
            } else {
                (lo.abs().max(1.0), midpoint)
            };
            for i in i0..i0 + g {
                s.set(i, j, sg);
                z.set(i, j, zg);
            }
            i0 += g;
        }
    }
    QuantGrid::new(wbit, group_size, s, z)
}

/// Dequantization `Ŵ[i,j] = S[i,j] · (Q[i,j] − Z[i,j])`.
pub fn dequantize(q: &IntMatrix, grid: &QuantGrid) -> Result<DenseMatrix> {
    if q.rows() != grid.rows() || q.cols() != grid.cols() {
        return Err(Error::DimensionMismatch(format!(
            "Q {}x{} vs grid {}x{}",
            q.rows(),
            q.cols(),
            grid.rows(),
            grid.cols()
        )));
    }
    let box_hi = grid.box_hi();
    let mut out = DenseMatrix::zeros(q.rows(), q.cols());
    for i in 0..q.rows() {
        for j in 0..q.cols() {
            let v = q.get(i, j);
            if v < 0 || v > box_hi {
                return Err(Error::OutOfBox { value: v, box_hi });
            }
            out.set(i, j, grid.scales().get(i, j) * (v as f64 - grid.zero_points().get(i, j)));
        }
    }
    Ok(out)
}

/// Round-to-nearest grid point: `clamp(round(w/s + z), box)`.
pub fn nearest_grid_point(w: f64, s: f64, z: f64, wbit: u8) -> i64 {
    debug_assert!(s > 0.0);
    let box_hi = (1i64 << wbit) - 1;
    clamp_round(w / s + z, box_hi)
}

/// Round-to-nearest quantization of a full matrix on a calibrated grid; the
/// reference baseline against which the decoders are judged.
pub fn rtn_quantize(w: &DenseMatrix, grid: &QuantGrid) -> Result<IntMatrix> {
    if w.rows() != grid.rows() || w.cols() != grid.cols() {
        return Err(Error::DimensionMismatch(format!(
            "W {}x{} vs grid {}x{}",
            w.rows(),
            w.cols(),
            grid.rows(),
            grid.cols()
        )));
    }
    let mut q = IntMatrix::zeros(w.rows(), w.cols());
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            q.set(
                i,
                j,
                nearest_grid_point(
                    w.get(i, j),
                    grid.scales().get(i, j),
                    grid.zero_points().get(i, j),
                    grid.wbit(),
                ),
            );
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_aligned_column_gets_unit_scale() {
        let col: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let w = DenseMatrix::new(16, 1, col).unwrap();
        let grid = calibrate_minmax(&w, 4, 0).unwrap();
        assert_eq!(grid.scales().get(0, 0), 1.0);
        assert_eq!(grid.zero_points().get(0, 0), 0.0);
    }

    #[test]
    fn two_point_column_rounds_endpoints_to_box_edges() {
        let w = DenseMatrix::new(2, 1, vec![-1.0, 1.0]).unwrap();
        let grid = calibrate_minmax(&w, 2, 0).unwrap();
        let s = grid.scales().get(0, 0);
        let z = grid.zero_points().get(0, 0);
        assert!((s - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(z, 2.0); // round(1.5) ties away from zero

        // Endpoints land on box edges and re-quantize to the same point.
        for (wv, expect_q) in [(-1.0, 0), (1.0, 3)] {
            let q1 = clamp_round(round_ties_away(wv / s) + z, grid.box_hi());
            assert_eq!(q1, expect_q);
            let what = s * (q1 as f64 - z);
            let q2 = clamp_round(round_ties_away(what / s) + z, grid.box_hi());
            assert_eq!(q1, q2);
            assert!((what - wv).abs() <= s / 2.0 + 1e-12);
        }
    }

    #[test]
    fn constant_group_is_exactly_representable() {
        let w = DenseMatrix::new(3, 1, vec![5.0, 5.0, 5.0]).unwrap();
        let grid = calibrate_minmax(&w, 3, 0).unwrap();
        let s_floor = 5.0_f64.max(1.0);
        assert_eq!(grid.scales().get(0, 0), s_floor);
        assert_eq!(grid.zero_points().get(0, 0), 4.0);
        let q = nearest_grid_point(5.0, s_floor, 4.0, 3);
        let what = s_floor * (q as f64 - 4.0);
        assert!((what - 5.0).abs() <= s_floor * 4.0);
        assert_eq!(what, 5.0);
    }

    #[test]
    fn constant_zero_and_negative_groups() {
        let w = DenseMatrix::new(2, 2, vec![0.0, -3.0, 0.0, -3.0]).unwrap();
        let grid = calibrate_minmax(&w, 2, 0).unwrap();
        for (j, value) in [(0usize, 0.0), (1usize, -3.0)] {
            let s = grid.scales().get(0, j);
            let z = grid.zero_points().get(0, j);
            let q = nearest_grid_point(value, s, z, 2);
            assert_eq!(s * (q as f64 - z), value);
        }
    }

    #[test]
    fn nearest_grid_point_tie_and_clamp_rules() {
        assert_eq!(nearest_grid_point(0.0, 1.0, 0.0, 3), 0);
        assert_eq!(nearest_grid_point(2.5, 1.0, 0.0, 3), 3); // tie away from zero
        assert_eq!(nearest_grid_point(-1.0, 1.0, 0.0, 3), 0); // clamped
        assert_eq!(nearest_grid_point(99.0, 1.0, 0.0, 3), 7); // clamped high
    }

    #[test]
    fn dequantize_identity_grid_and_zero_case() {
        let s = DenseMatrix::new(2, 2, vec![1.0; 4]).unwrap();
        let z = DenseMatrix::zeros(2, 2);
        let grid = QuantGrid::new(2, 0, s, z).unwrap();
        let q = IntMatrix::new(2, 2, vec![0, 1, 2, 3]).unwrap();
        let what = dequantize(&q, &grid).unwrap();
        assert_eq!(what.data(), &[0.0, 1.0, 2.0, 3.0]);

        let s = DenseMatrix::new(2, 1, vec![0.5, 0.5]).unwrap();
        let z = DenseMatrix::new(2, 1, vec![2.0, 2.0]).unwrap();
        let grid = QuantGrid::new(2, 0, s, z).unwrap();
        let q = IntMatrix::new(2, 1, vec![2, 2]).unwrap();
        assert_eq!(dequantize(&q, &grid).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn dequantize_rejects_out_of_box() {
        let s = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let z = DenseMatrix::zeros(1, 1);
        let grid = QuantGrid::new(2, 0, s, z).unwrap();
        let q = IntMatrix::new(1, 1, vec![4]).unwrap();
        assert!(matches!(
            dequantize(&q, &grid),
            Err(Error::OutOfBox { value: 4, box_hi: 3 })
        ));
    }

    #[test]
    fn grid_aligned_round_trip_is_identity() {
        // Entries on the calibrated grid of integers 0..2^wbit−1 round-trip exactly.
        let wbit = 3;
        let m = 8;
        let col: Vec<f64> = (0..m).map(|v| v as f64).collect();
        let w = DenseMatrix::new(m, 1, col).unwrap();
        let grid = calibrate_minmax(&w, wbit, 0).unwrap();
        let q = rtn_quantize(&w, &grid).unwrap();
        let what = dequantize(&q, &grid).unwrap();
        assert_eq!(what.data(), w.data());
    }

    #[test]
    fn group_structure_is_respected() {
        let data: Vec<f64> = (0..8).map(|v| (v as f64) * 0.7 - 2.0).collect();
        let w = DenseMatrix::new(8, 1, data).unwrap();
        let grid = calibrate_minmax(&w, 4, 4).unwrap();
        for i in 0..8 {
            let base = (i / 4) * 4;
            assert_eq!(grid.scales().get(i, 0), grid.scales().get(base, 0));
            assert_eq!(grid.zero_points().get(i, 0), grid.zero_points().get(base, 0));
        }
        // Two groups of a ramp column have different ranges => different offsets.
        assert_ne!(grid.zero_points().get(0, 0), grid.zero_points().get(4, 0));
    }

    #[test]
    fn invalid_group_size_is_rejected() {
        let w = DenseMatrix::zeros(6, 1);
        assert!(matches!(
            calibrate_minmax(&w, 4, 4),
            Err(Error::InvalidGroupSize { group_size: 4, rows: 6 })
        ));
        assert!(calibrate_minmax(&w, 4, 12).is_err());
        assert!(calibrate_minmax(&w, 1, 0).is_err()); // wbit out of range
        assert!(calibrate_minmax(&w, 9, 0).is_err());
    }

    #[test]
    fn nearest_grid_point_error_bound_inside_box() {
        let (s, z, wbit) = (0.37, 1.0, 3);
        let mut w = -0.3;
        while w < 2.0 {
            let q = nearest_grid_point(w, s, z, wbit);
            let t = w / s + z;
            if (0.0..=7.0).contains(&t) {
                let what = s * (q as f64 - z);
                assert!((what - w).abs() <= s / 2.0 + 1e-12, "w={w}");
            }
            w += 0.0137;
        }
    }
}
