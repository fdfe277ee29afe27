//! Orthogonal moments of the correlation matrix and their normalized forms.
//!
//! With `n_i = d_i - 1` the normalized coordinates are
//! `R2 = Tr(T T^T) / (n1 n2)` and `R4 = [2 Tr((T T^T)^2) + Tr(T T^T)^2] / (3 n1^2 n2^2)`,
//! so that every pure product state sits at `(1, 1)`.

use serde::Serialize;

use crate::bloch::BlochDecomposition;
use crate::error::{Error, Result};
use crate::qla::CMat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentPoint {
    pub d1: usize,
    pub d2: usize,
    pub s2: f64,
    pub s4: f64,
    pub r2t: f64,
    pub r4t: f64,
}

/// `(Tr(T T^T), Tr((T T^T)^2))`.
fn gram_traces(t: &CMat) -> (f64, f64) {
    let g = t.matmul(&t.dagger());
    (g.trace().re, g.frobenius_sq())
}

fn local_dims(t: &CMat) -> Result<(usize, usize)> {
    let side = |n: usize| {
        let d = ((n + 1) as f64).sqrt().round() as usize;
        (d >= 2 && d * d == n + 1).then_some(d)
    };
    match (side(t.rows()), side(t.cols())) {
        (Some(d1), Some(d2)) => Ok((d1, d2)),
        _ => Err(Error::InvalidDimension(format!(
            "{}x{} is not a (d1^2-1)x(d2^2-1) correlation matrix",
            t.rows(),
            t.cols()
        ))),
    }
}

fn s2_parts(tr2: f64, d1: f64, d2: f64) -> f64 {
    tr2 / ((d1 * d1 - 1.0) * (d2 * d2 - 1.0))
}

fn s4_parts(tr2: f64, tr4: f64, d1: f64, d2: f64) -> f64 {
    3.0 * (2.0 * tr4 + tr2 * tr2) / ((d1.powi(4) - 1.0) * (d2.powi(4) - 1.0))
}

/// Second orthogonal moment `Tr(T T^T) / ((d1^2-1)(d2^2-1))`.
#[allow(non_snake_case)]
pub fn s2_from_T(t: &CMat) -> Result<f64> {
    let (d1, d2) = local_dims(t)?;
    Ok(s2_parts(gram_traces(t).0, d1 as f64, d2 as f64))
}

/// Fourth orthogonal moment `3 [2 Tr((T T^T)^2) + Tr(T T^T)^2] / ((d1^4-1)(d2^4-1))`.
#[allow(non_snake_case)]
pub fn s4_from_T(t: &CMat) -> Result<f64> {
    let (d1, d2) = local_dims(t)?;
    let (tr2, tr4) = gram_traces(t);
    Ok(s4_parts(tr2, tr4, d1 as f64, d2 as f64))
}

/// Prefactor taking `S^(2)` to `R2`.
pub fn r2_factor(d1: usize, d2: usize) -> f64 {
    ((d1 + 1) * (d2 + 1)) as f64
}

/// Prefactor taking `S^(4)` to `R4`.
pub fn r4_factor(d1: usize, d2: usize) -> f64 {
    let (a, b) = (d1 as f64, d2 as f64);
    (a + 1.0) * (b + 1.0) * (a * a + 1.0) * (b * b + 1.0) / (9.0 * (a - 1.0) * (b - 1.0))
}

pub fn normalized_point(b: &BlochDecomposition) -> MomentPoint {
    let (tr2, tr4) = gram_traces(&b.t);
    let (d1, d2) = (b.d1 as f64, b.d2 as f64);
    let n = (d1 - 1.0) * (d2 - 1.0);
    MomentPoint {
        d1: b.d1,
        d2: b.d2,
        s2: s2_parts(tr2, d1, d2),
        s4: s4_parts(tr2, tr4, d1, d2),
        r2t: tr2 / n,
        r4t: (2.0 * tr4 + tr2 * tr2) / (3.0 * n * n),
    }
}

/// `S^(t)` of a single qudit with the given purity. Odd `t` vanish; for even `t`
/// the gamma-function ratio is expanded as a finite product of half-integers.
pub fn orthogonal_moment_single(purity: f64, d: usize, t: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d = {d} < 2")));
    }
    let df = d as f64;
    let tol = 1e-12;
    if !(purity >= 1.0 / df - tol && purity <= 1.0 + tol) {
        return Err(Error::OutOfRange(format!(
            "purity {purity} outside [1/{d}, 1]"
        )));
    }
    if t % 2 == 1 {
        return Ok(0.0);
    }
    let alpha_sq = (df * purity - 1.0).max(0.0);
    let h = (df * df - 1.0) / 2.0;
    // |alpha|^t Gamma(h) Gamma((t+1)/2) / (sqrt(pi) Gamma(h + t/2))
    //   = prod_{j<t/2} alpha^2 (j + 1/2) / (h + j)
    let value = (0..t / 2)
        .map(|j| alpha_sq * (j as f64 + 0.5) / (h + j as f64))
        .product();
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::BipartiteState;
    use crate::qla::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(s: &BipartiteState) -> MomentPoint {
        normalized_point(&BlochDecomposition::of(s).unwrap())
    }

    #[test]
    fn raw_moment_examples() {
        let zero = CMat::zeros(8, 8);
        assert_eq!(s2_from_T(&zero).unwrap(), 0.0);
        assert_eq!(s4_from_T(&zero).unwrap(), 0.0);
        let t3 = BlochDecomposition::of(&BipartiteState::phi_plus(3).unwrap())
            .unwrap()
            .t;
        assert!((s2_from_T(&t3).unwrap() - 0.125).abs() < 1e-12);
        let t00 = BlochDecomposition::of(&BipartiteState::product_zero(2, 2).unwrap())
            .unwrap()
            .t;
        assert!((s2_from_T(&t00).unwrap() - 1.0 / 9.0).abs() < 1e-12);
        assert!((s4_from_T(&t00).unwrap() - 9.0 / 225.0).abs() < 1e-12);
        let t2 = BlochDecomposition::of(&BipartiteState::phi_plus(2).unwrap())
            .unwrap()
            .t;
        assert!((s4_from_T(&t2).unwrap() - 0.2).abs() < 1e-12);
        assert!(s2_from_T(&CMat::zeros(4, 4)).is_err());
    }

    #[test]
    fn anchors() {
        for (d1, d2) in [(2, 2), (2, 3), (3, 3), (3, 4)] {
            let p = point(&BipartiteState::product_zero(d1, d2).unwrap());
            assert!((p.r2t - 1.0).abs() < 1e-12 && (p.r4t - 1.0).abs() < 1e-12);
        }
        for d in 2..=4 {
            let p = point(&BipartiteState::phi_plus(d).unwrap());
            let df = d as f64;
            assert!((p.r2t - (df + 1.0) / (df - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn prefactors_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (d1, d2) in [(2, 2), (2, 3), (3, 3)] {
            let n = d1 * d2;
            let v: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let nv = crate::qla::norm(&v);
            let v: Vec<C64> = v.into_iter().map(|z| z / nv).collect();
            let s = BipartiteState::pure(d1, d2, &v).unwrap();
            let p = point(&s);
            assert!((p.r2t - r2_factor(d1, d2) * p.s2).abs() < 1e-12);
            assert!((p.r4t - r4_factor(d1, d2) * p.s4).abs() < 1e-12);
        }
    }

    #[test]
    fn white_noise_scales_moments() {
        let bell = BipartiteState::phi_plus(3).unwrap();
        let mixed = BipartiteState::maximally_mixed(3, 3).unwrap();
        let p0 = point(&bell);
        for p in [0.1, 0.4, 0.9] {
            let s = BipartiteState::mixture(&[(1.0 - p, &bell), (p, &mixed)]).unwrap();
            let q = point(&s);
            assert!((q.r2t - (1.0f64 - p).powi(2) * p0.r2t).abs() < 1e-12);
            assert!((q.r4t - (1.0f64 - p).powi(4) * p0.r4t).abs() < 1e-12);
        }
    }

    #[test]
    fn single_qudit_closed_form() {
        assert_eq!(orthogonal_moment_single(1.0, 2, 3).unwrap(), 0.0);
        assert!((orthogonal_moment_single(1.0, 2, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(orthogonal_moment_single(0.5, 2, 4).unwrap(), 0.0);
        // pure qubit: uniform on the sphere, <z^4> = 1/5
        assert!((orthogonal_moment_single(1.0, 2, 4).unwrap() - 0.2).abs() < 1e-15);
        let v = orthogonal_moment_single(1.0, 10, 10).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(orthogonal_moment_single(0.2, 3, 2).is_err());
        assert!(orthogonal_moment_single(1.1, 3, 2).is_err());
    }

    #[test]
    fn single_qudit_matches_log_gamma_oracle() {
        // Stirling-series log-gamma, independent of the product expansion
        fn ln_gamma(mut x: f64) -> f64 {
            let mut shift = 0.0;
            while x < 10.0 {
                shift -= x.ln();
                x += 1.0;
            }
            let inv = 1.0 / x;
            let series =
                inv / 12.0 - inv.powi(3) / 360.0 + inv.powi(5) / 1260.0 - inv.powi(7) / 1680.0;
            shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
        }
        for d in 2..=10usize {
            for t in (2..=10).step_by(2) {
                let purity = 0.7f64.max(1.0 / d as f64);
                let a2 = d as f64 * purity - 1.0;
                let h = ((d * d - 1) as f64) / 2.0;
                let tf = t as f64;
                let oracle = (tf / 2.0 * a2.ln() + ln_gamma(h) + ln_gamma((tf + 1.0) / 2.0)
                    - 0.5 * std::f64::consts::PI.ln()
                    - ln_gamma(h + tf / 2.0))
                .exp();
                let got = orthogonal_moment_single(purity, d, t).unwrap();
                assert!((got / oracle - 1.0).abs() < 1e-10, "d={d} t={t}");
            }
        }
    }
}
