//! Boundaries of the `(R2, R4)` moment landscape.
//!
//! In normalized singular values `s_i = sigma_i / sqrt((d1-1)(d2-1))` the
//! coordinates read `x = R2 = sum s^2` and `R4 = (2 sum s^4 + x^2) / 3`.
//! States of Schmidt number at most `k` obey `sum s <= B_k` (the trace-norm
//! criterion) and the purity cap on `x`; the lower boundary is the minimum of
//! `sum s^4` under those constraints, the upper boundary is `x^2`.

use serde::Serialize;

use crate::criteria::schmidt_bound;
use crate::error::{Error, Result};
use crate::moments::MomentPoint;
use crate::par::Exec;

const DOMAIN_TOL: f64 = 1e-12;
/// Slack used when testing membership of a point in a region.
pub const REGION_TOL: f64 = 1e-9;

fn check_dims(d1: usize, d2: usize, k: usize) -> Result<()> {
    // schmidt_bound validates 2 <= d1 <= d2 and 1 <= k <= d1
    schmidt_bound(d1, d2, k).map(|_| ())
}

/// Normalized trace-norm budget `B_k = bound_k / sqrt((d1-1)(d2-1))`.
pub fn trace_budget(d1: usize, d2: usize, k: usize) -> Result<f64> {
    let b = schmidt_bound(d1, d2, k)?;
    Ok(b / (((d1 - 1) * (d2 - 1)) as f64).sqrt())
}

/// Largest `R2` compatible with the purity of a Schmidt-number-`k` state,
/// `1 + (k-1)/k (d1+d2)/((d1-1)(d2-1))`.
pub fn purity_cap(d1: usize, d2: usize, k: usize) -> Result<f64> {
    check_dims(d1, d2, k)?;
    let kf = k as f64;
    Ok(1.0 + (kf - 1.0) / kf * (d1 + d2) as f64 / ((d1 - 1) * (d2 - 1)) as f64)
}

/// Largest `R2` reachable by any state of Schmidt number at most `k`.
pub fn max_abscissa(d1: usize, d2: usize, k: usize) -> Result<f64> {
    let b = trace_budget(d1, d2, k)?;
    Ok(purity_cap(d1, d2, k)?.min(b * b))
}

pub fn f_ub(x: f64) -> f64 {
    x * x
}

/// Global lower boundary, traced by the isotropic states.
pub fn g_lb(x: f64, d1: usize) -> f64 {
    let n = (d1 * d1) as f64;
    (n + 1.0) / (3.0 * (n - 1.0)) * x * x
}

/// Closed-form lower boundary of the separable region.
pub fn f_lb(x: f64, d1: usize) -> Result<f64> {
    if d1 < 2 {
        return Err(Error::InvalidDimension(format!("d1 = {d1} < 2")));
    }
    if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&x) {
        return Err(Error::OutOfRange(format!("x = {x} outside [0, 1]")));
    }
    let x = x.clamp(0.0, 1.0);
    let rank = d1 * d1 - 1;
    if x <= 1.0 / rank as f64 {
        return Ok(g_lb(x, d1));
    }
    // branch [1/(N+1), 1/N), last branch closed at x = 1
    let n = ((1.0 / x).ceil() as usize).saturating_sub(1).max(1);
    let nf = n as f64;
    let v = (nf * (nf + 1.0) * x - nf).max(0.0).sqrt();
    let tail = (v - 1.0).powi(4) + (v + nf).powi(4) / nf.powi(3);
    Ok(x * x / 3.0 + 2.0 / (3.0 * (nf + 1.0).powi(4)) * tail)
}

/// `min sum u^4` subject to `sum u = 1`, `sum u^2 = y`, `u >= 0`, at most
/// `rank` non-zero entries. Stationary points carry at most two distinct
/// non-zero values, so every split `(n1, n2)` of multiplicities is solved in
/// closed form.
fn min_quartic(y: f64, rank: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for n1 in 1..=rank {
        let f1 = n1 as f64;
        if (y - 1.0 / f1).abs() <= 1e-15 {
            let v = 1.0 / (f1 * f1 * f1);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        for n2 in 1..=(rank - n1) {
            let f2 = n2 as f64;
            // n2 (n1+n2) b^2 - 2 n2 b + (1 - n1 y) = 0
            let disc = f2 * f2 - f2 * (f1 + f2) * (1.0 - f1 * y);
            if disc < -1e-13 {
                continue;
            }
            let root = disc.max(0.0).sqrt();
            for b in [(f2 + root), (f2 - root)].map(|num| num / (f2 * (f1 + f2))) {
                let a = (1.0 - f2 * b) / f1;
                if a < -1e-14 || b < -1e-14 {
                    continue;
                }
                let (a, b) = (a.max(0.0), b.max(0.0));
                let v = f1 * a.powi(4) + f2 * b.powi(4);
                best = Some(best.map_or(v, |cur: f64| cur.min(v)));
            }
        }
    }
    best
}

/// Lower boundary of the Schmidt-number-`k` region at `x = R2`.
pub fn lower_boundary_k(x: f64, d1: usize, d2: usize, k: usize) -> Result<f64> {
    let cap = purity_cap(d1, d2, k)?;
    if x.is_nan() || x < -DOMAIN_TOL || x.is_infinite() {
        return Err(Error::OutOfRange(format!("x = {x} must be >= 0")));
    }
    if x > cap * (1.0 + DOMAIN_TOL) {
        return Err(Error::Infeasible(format!(
            "x = {x} exceeds the purity cap {cap} for k = {k}"
        )));
    }
    let x = x.max(0.0);
    let budget = trace_budget(d1, d2, k)?;
    let b2 = budget * budget;
    let rank = d1 * d1 - 1;
    if x <= b2 / rank as f64 {
        // trace-norm constraint inactive: all singular values equal
        return Ok(g_lb(x, d1));
    }
    let y = (x / b2).min(1.0);
    let h = min_quartic(y, rank)
        .ok_or_else(|| Error::Infeasible(format!("no feasible spectrum at x = {x}")))?;
    Ok((2.0 * b2 * b2 * h + x * x) / 3.0)
}

/// Purity-based upper boundary `x^2`; only tight for `k = 1`.
pub fn region_upper_k(x: f64, d1: usize, d2: usize, k: usize) -> Result<f64> {
    let cap = purity_cap(d1, d2, k)?;
    if x.is_nan() || x < -DOMAIN_TOL || x > cap * (1.0 + DOMAIN_TOL) {
        return Err(Error::Infeasible(format!(
            "x = {x} outside [0, {cap}] for k = {k}"
        )));
    }
    Ok(f_ub(x.max(0.0)))
}

/// Abscissae where the lower boundary of region `k` is not smooth.
pub fn kinks(d1: usize, d2: usize, k: usize) -> Result<Vec<f64>> {
    let b = trace_budget(d1, d2, k)?;
    let cap = max_abscissa(d1, d2, k)?;
    let rank = d1 * d1 - 1;
    let mut out: Vec<f64> = (2..=rank)
        .rev()
        .map(|n| b * b / n as f64)
        .filter(|&x| x <= cap * (1.0 + DOMAIN_TOL))
        .collect();
    out.dedup();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "region", rename_all = "lowercase")]
pub enum Classification {
    /// Smallest Schmidt number whose region contains the point.
    Within {
        k: usize,
    },
    Outside,
}

pub fn classify(p: &MomentPoint) -> Classification {
    let (d1, d2) = if p.d1 <= p.d2 {
        (p.d1, p.d2)
    } else {
        (p.d2, p.d1)
    };
    for k in 1..=d1 {
        let (Ok(lo), Ok(hi)) = (
            lower_boundary_k(p.r2t, d1, d2, k),
            region_upper_k(p.r2t, d1, d2, k),
        ) else {
            continue;
        };
        if p.r4t >= lo - REGION_TOL && p.r4t <= hi + REGION_TOL {
            return Classification::Within { k };
        }
    }
    Classification::Outside
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveSample {
    pub x: f64,
    pub lower: f64,
    pub upper: f64,
    pub is_kink: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryCurves {
    pub d1: usize,
    pub d2: usize,
    pub k: usize,
    pub samples: Vec<CurveSample>,
    pub kinks: Vec<f64>,
    /// The upper curve is the exact boundary only for `k = 1`.
    pub upper_tight: bool,
}

#[derive(Serialize)]
struct CsvRow {
    x: f64,
    lower: f64,
    upper: f64,
    k: usize,
    d1: usize,
    d2: usize,
    is_kink: u8,
}

#[derive(Serialize)]
pub struct CurveMetadata {
    pub d1: usize,
    pub d2: usize,
    pub k: usize,
    pub x_max: f64,
    pub kinks: Vec<f64>,
    pub upper_tight: bool,
    pub upper_note: &'static str,
}

impl BoundaryCurves {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wtr.serialize(CsvRow {
                x: s.x,
                lower: s.lower,
                upper: s.upper,
                k: self.k,
                d1: self.d1,
                d2: self.d2,
                is_kink: s.is_kink as u8,
            })?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn metadata(&self) -> CurveMetadata {
        CurveMetadata {
            d1: self.d1,
            d2: self.d2,
            k: self.k,
            x_max: self.samples.last().map_or(0.0, |s| s.x),
            kinks: self.kinks.clone(),
            upper_tight: self.upper_tight,
            upper_note: if self.upper_tight {
                "exact boundary"
            } else {
                "purity bound, not known to be attained"
            },
        }
    }
}

pub fn emit_curves(d1: usize, d2: usize, k: usize, n_samples: usize) -> Result<BoundaryCurves> {
    emit_curves_with(d1, d2, k, n_samples, Exec::default())
}

/// Uniform grid on `[0, x_max]` merged with the exact kink abscissae.
pub fn emit_curves_with(
    d1: usize,
    d2: usize,
    k: usize,
    n_samples: usize,
    exec: Exec,
) -> Result<BoundaryCurves> {
    if n_samples < 2 {
        return Err(Error::OutOfRange(format!("n_samples = {n_samples} < 2")));
    }
    let x_max = max_abscissa(d1, d2, k)?;
    let kink_xs = kinks(d1, d2, k)?;
    let mut grid: Vec<(f64, bool)> = (0..n_samples)
        .map(|i| (x_max * i as f64 / (n_samples - 1) as f64, false))
        .collect();
    grid.extend(kink_xs.iter().map(|&x| (x, true)));
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    grid.dedup_by(|later, earlier| {
        let same = (later.0 - earlier.0).abs() <= 1e-12 * x_max.max(1.0);
        if same {
            earlier.1 |= later.1;
        }
        same
    });
    let samples = exec
        .map_slice(&grid, |&(x, is_kink)| -> Result<CurveSample> {
            Ok(CurveSample {
                x,
                lower: lower_boundary_k(x, d1, d2, k)?,
                upper: region_upper_k(x, d1, d2, k)?,
                is_kink,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryCurves {
        d1,
        d2,
        k,
        samples,
        kinks: kink_xs,
        upper_tight: k == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{BipartiteState, BlochDecomposition};
    use crate::moments::normalized_point;
    use crate::qla::{kron_vec, C64};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn f_lb_anchor_values() {
        for d in 2..=6 {
            let rank = d * d - 1;
            for n in 2..=rank {
                let x = 1.0 / n as f64;
                let nf = n as f64;
                assert!((f_lb(x, d).unwrap() - (nf + 2.0) / (3.0 * nf.powi(3))).abs() < 1e-10);
            }
            assert!((f_lb(1.0, d).unwrap() - 1.0).abs() < 1e-12);
            let x0 = 1.0 / rank as f64;
            assert!((f_lb(x0, d).unwrap() - g_lb(x0, d)).abs() < 1e-14);
        }
        assert!(f_lb(1.5, 3).is_err());
        assert!(f_lb(-0.1, 3).is_err());
        assert!((g_lb(1.0, 3) - 5.0 / 12.0).abs() < 1e-15);
        assert_eq!(f_ub(0.5), 0.25);
    }

    #[test]
    fn f_lb_continuous_and_monotone() {
        for d in 2..=6 {
            for x in kinks(d, d, 1).unwrap() {
                let eps = 1e-12;
                let left = f_lb(x - eps, d).unwrap();
                let right = f_lb(x + eps, d).unwrap();
                assert!((left - right).abs() < 1e-9, "d={d} x={x}");
            }
            let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
            let ys: Vec<f64> = xs.iter().map(|&x| f_lb(x, d).unwrap()).collect();
            assert!(ys.windows(2).all(|w| w[1] >= w[0]));
            assert!(xs
                .iter()
                .zip(&ys)
                .all(|(&x, &y)| y >= g_lb(x, d) - 1e-15 && y <= f_ub(x)));
        }
    }

    #[test]
    fn f_lb_not_convex_past_a_kink() {
        // the boundary bends downward just right of x = 1/3 for qubits
        let h = 1e-4;
        let x = 0.35;
        let second = f_lb(x - h, 2).unwrap() - 2.0 * f_lb(x, 2).unwrap() + f_lb(x + h, 2).unwrap();
        assert!(second < 0.0);
    }

    #[test]
    fn random_spectra_never_undercut_f_lb() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=4 {
            let rank = d * d - 1;
            for _ in 0..2000 {
                let mut s: Vec<f64> = (0..rank).map(|_| rng.random::<f64>().powi(3)).collect();
                let total: f64 = s.iter().sum();
                let budget = rng.random_range(0.2..1.0);
                s.iter_mut().for_each(|v| *v *= budget / total);
                let x: f64 = s.iter().map(|v| v * v).sum();
                let r4 = (2.0 * s.iter().map(|v| v.powi(4)).sum::<f64>() + x * x) / 3.0;
                assert!(r4 >= f_lb(x, d).unwrap() - 1e-12);
            }
        }
    }

    #[test]
    fn k1_kinks() {
        let k = kinks(3, 3, 1).unwrap();
        assert_eq!(k.len(), 7);
        for (x, n) in k.iter().zip((2..=8).rev()) {
            assert!((x - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn lower_boundary_reduces_to_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..=4 {
            for _ in 0..200 {
                let x: f64 = rng.random_range(0.0..1.0);
                let a = lower_boundary_k(x, d, d, 1).unwrap();
                assert!((a - f_lb(x, d).unwrap()).abs() < 1e-9, "d={d} x={x}");
            }
        }
        assert_eq!(lower_boundary_k(0.0, 3, 3, 2).unwrap(), 0.0);
        // k = d: only the global bound remains
        for x in [0.05, 0.5, 1.5, 2.0] {
            assert!((lower_boundary_k(x, 3, 3, 3).unwrap() - g_lb(x, 3)).abs() < 1e-12);
        }
        assert!(lower_boundary_k(1.1, 3, 3, 1).is_err());
        assert!(lower_boundary_k(0.5, 3, 3, 4).is_err());
    }

    #[test]
    fn purity_caps() {
        assert!((purity_cap(3, 3, 2).unwrap() - 1.75).abs() < 1e-15);
        assert_eq!(purity_cap(3, 3, 1).unwrap(), 1.0);
        assert!((region_upper_k(1.75, 3, 3, 2).unwrap() - 1.75f64.powi(2)).abs() < 1e-12);
        assert!(region_upper_k(1.8, 3, 3, 2).is_err());
        let cap = purity_cap(3, 3, 3).unwrap();
        assert!((region_upper_k(cap, 3, 3, 3).unwrap() - cap * cap).abs() < 1e-12);
    }

    #[test]
    fn regions_are_nested() {
        for d in 2..=4 {
            for k in 1..d {
                let cap = max_abscissa(d, d, k).unwrap();
                for i in 0..=50 {
                    let x = cap * i as f64 / 50.0;
                    let lo_k = lower_boundary_k(x, d, d, k).unwrap();
                    let lo_next = lower_boundary_k(x, d, d, k + 1).unwrap();
                    assert!(lo_next <= lo_k + 1e-12);
                    assert!(lo_next >= g_lb(x, d) - 1e-12);
                }
            }
        }
    }

    fn isotropic(d: usize, p: f64) -> BipartiteState {
        let bell = BipartiteState::phi_plus(d).unwrap();
        let mixed = BipartiteState::maximally_mixed(d, d).unwrap();
        BipartiteState::mixture(&[(1.0 - p, &bell), (p, &mixed)]).unwrap()
    }

    #[test]
    fn classification_examples() {
        let product = normalized_point(
            &BlochDecomposition::of(&BipartiteState::product_zero(3, 3).unwrap()).unwrap(),
        );
        assert_eq!(classify(&product), Classification::Within { k: 1 });
        let bell = normalized_point(&BlochDecomposition::of(&isotropic(3, 0.0)).unwrap());
        assert_eq!(classify(&bell), Classification::Within { k: 3 });
        let kink = MomentPoint {
            d1: 3,
            d2: 3,
            s2: 0.0,
            s4: 0.0,
            r2t: 0.125,
            r4t: f_lb(0.125, 3).unwrap(),
        };
        assert_eq!(classify(&kink), Classification::Within { k: 1 });
        let below = MomentPoint { r4t: 0.0, ..kink };
        assert_eq!(classify(&below), Classification::Outside);
    }

    #[test]
    fn isotropic_states_trace_global_bound() {
        for d in [2, 3] {
            for i in 0..50 {
                let p = i as f64 / 49.0;
                let pt = normalized_point(&BlochDecomposition::of(&isotropic(d, p)).unwrap());
                assert!((pt.r4t - g_lb(pt.r2t, d)).abs() < 1e-9);
            }
        }
    }

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let nv = crate::qla::norm(&v);
        v.into_iter().map(|z| z / nv).collect()
    }

    #[test]
    fn random_separable_states_stay_in_region_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for d in [2, 3] {
            for _ in 0..250 {
                let terms = rng.random_range(1..=6);
                let mut weights: Vec<f64> =
                    (0..terms).map(|_| rng.random_range(0.01..1.0)).collect();
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                let states: Vec<BipartiteState> = (0..terms)
                    .map(|_| {
                        let psi = kron_vec(&random_unit(&mut rng, d), &random_unit(&mut rng, d));
                        BipartiteState::pure(d, d, &psi).unwrap()
                    })
                    .collect();
                let parts: Vec<(f64, &BipartiteState)> =
                    weights.iter().copied().zip(states.iter()).collect();
                let s = BipartiteState::mixture(&parts).unwrap();
                let pt = normalized_point(&BlochDecomposition::of(&s).unwrap());
                let lo = f_lb(pt.r2t, d).unwrap();
                assert!(pt.r4t >= lo - 1e-9 && pt.r4t <= f_ub(pt.r2t) + 1e-9);
            }
        }
    }

    #[test]
    fn curves() {
        let c = emit_curves(3, 3, 1, 11).unwrap();
        assert_eq!(c.kinks.len(), 7);
        assert_eq!(c.samples.iter().filter(|s| s.is_kink).count(), 7);
        assert!(c.samples.windows(2).all(|w| w[0].x < w[1].x));
        assert!(c.samples.iter().all(|s| s.lower <= s.upper + 1e-15));
        assert!(c.upper_tight);
        let c3 = emit_curves(3, 3, 3, 2).unwrap();
        assert!(!c3.upper_tight);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,lower,upper,k,d1,d2,is_kink\n"));
        assert!(emit_curves(3, 3, 1, 1).is_err());
        assert_eq!(
            emit_curves_with(4, 4, 2, 40, Exec::Sequential)
                .unwrap()
                .samples,
            emit_curves_with(4, 4, 2, 40, Exec::Parallel)
                .unwrap()
                .samples
        );
    }

    proptest! {
        #[test]
        fn lower_below_upper(d in 2usize..=5, kfrac in 0.0f64..1.0, t in 0.0f64..=1.0) {
            let k = 1 + ((d as f64 * kfrac) as usize).min(d - 1);
            let x = t * max_abscissa(d, d, k).unwrap();
            let lo = lower_boundary_k(x, d, d, k).unwrap();
            let hi = region_upper_k(x, d, d, k).unwrap();
            prop_assert!(lo <= hi + 1e-12);
            prop_assert!(lo >= g_lb(x, d) - 1e-12);
        }
    }
}
