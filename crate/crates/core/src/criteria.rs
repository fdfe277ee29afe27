//! Schmidt-number certification from trace norms of the correlation matrix.

use serde::Serialize;

use crate::bloch::{BipartiteState, BlochDecomposition};
use crate::error::{Error, Result};
use crate::qla::C64;

/// Margins within this distance of zero count as ties and are not detections.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SchmidtVerdict {
    pub trace_norm_value: f64,
    pub bound: f64,
    pub k_tested: usize,
    /// Schmidt number is certified to exceed `k_tested`.
    pub detected: bool,
    pub margin: f64,
}

impl SchmidtVerdict {
    fn new(value: f64, bound: f64, k: usize) -> Self {
        let margin = value - bound;
        Self {
            trace_norm_value: value,
            bound,
            k_tested: k,
            detected: margin > TIE_TOL,
            margin,
        }
    }
}

fn check_k(d1: usize, d2: usize, k: usize) -> Result<()> {
    if d1 < 2 || d2 < d1 {
        return Err(Error::InvalidDimension(format!(
            "expected 2 <= d1 <= d2, got ({d1}, {d2})"
        )));
    }
    if k < 1 || k > d1 {
        return Err(Error::OutOfRange(format!("k = {k} not in 1..={d1}")));
    }
    Ok(())
}

/// Largest trace norm of `T` attainable with Schmidt number at most `k`:
/// `sqrt((d1-1)(d2-1)) + sqrt(d1 d2) (k-1)`.
pub fn schmidt_bound(d1: usize, d2: usize, k: usize) -> Result<f64> {
    check_k(d1, d2, k)?;
    Ok(unchecked_bound(d1, d2, k, 0.0, 0.0))
}

fn unchecked_bound(d1: usize, d2: usize, k: usize, x: f64, y: f64) -> f64 {
    let (d1, d2) = (d1 as f64, d2 as f64);
    ((d1 - 1.0 + x * x) * (d2 - 1.0 + y * y)).sqrt() + (d1 * d2).sqrt() * (k as f64 - 1.0)
}

pub fn detect_schmidt(b: &BlochDecomposition, k: usize) -> Result<SchmidtVerdict> {
    let bound = schmidt_bound(b.d1, b.d2, k)?;
    Ok(SchmidtVerdict::new(b.t.trace_norm()?, bound, k))
}

/// Criterion on `D_x C D_y` with `C = [[1, beta^T], [alpha, T]]` and
/// `D_x = diag(x, 1, ..., 1)`.
pub fn detect_generalized(s: &BipartiteState, k: usize, x: f64, y: f64) -> Result<SchmidtVerdict> {
    check_k(s.d1(), s.d2(), k)?;
    if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "scales (x, y) = ({x}, {y}) must be finite and >= 0"
        )));
    }
    let b = BlochDecomposition::of(s)?;
    let mut c = b.augmented();
    for col in 0..c.cols() {
        c[(0, col)] *= C64::new(x, 0.0);
    }
    for row in 0..c.rows() {
        c[(row, 0)] *= C64::new(y, 0.0);
    }
    let bound = unchecked_bound(s.d1(), s.d2(), k, x, y);
    Ok(SchmidtVerdict::new(c.trace_norm()?, bound, k))
}
