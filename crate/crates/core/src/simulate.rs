//! Finite-shot randomized-measurement simulation.
//!
//! One *setting* draws local Haar unitaries `U_A (x) U_B`, measures both parties
//! in the eigenbasis of the diagonal observable and records `K` outcome products
//! `a_i a_j`. Per setting the squared and fourth-power expectation are estimated
//! by U-statistics over distinct shots, then averaged over `M` settings and
//! rescaled to `(R2, R4)`.
//!
//! Every repetition owns a ChaCha8 stream derived from the master seed and a
//! fixed task index, so results do not depend on the thread count.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bloch::BipartiteState;
use crate::error::{Error, Result};
use crate::landscape::{lower_boundary_k, max_abscissa, purity_cap, trace_budget};
use crate::moments::{r2_factor, r4_factor};
use crate::observables::{spectrum_rank4, ObservableSpectrum};
use crate::par::Exec;
use crate::qla::{CMat, C64};

/// `(1-p)|phi+><phi+| + p 1/d^2`.
pub fn isotropic_state(d: usize, p: f64) -> Result<BipartiteState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} outside [0, 1]")));
    }
    let bell = BipartiteState::phi_plus(d)?;
    let mixed = BipartiteState::maximally_mixed(d, d)?;
    BipartiteState::mixture(&[(1.0 - p, &bell), (p, &mixed)])
}

/// `R2` of the isotropic state, `(1-p)^2 (d+1)/(d-1)`.
pub fn isotropic_r2(d: usize, p: f64) -> f64 {
    (1.0 - p).powi(2) * (d + 1) as f64 / (d - 1) as f64
}

/// Noise level at which the isotropic state reaches `R2 = x`.
pub fn isotropic_p_at(d: usize, x: f64) -> f64 {
    1.0 - (x * (d - 1) as f64 / (d + 1) as f64).sqrt()
}

/// Haar-random unitary: Gram-Schmidt on a Ginibre matrix, which is its QR
/// decomposition with a positive diagonal in `R`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    for j in 0..d {
        // two passes keep the columns orthogonal to machine precision
        for _ in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let proj = crate::qla::inner(&done[i], &rest[0]);
                for (x, q) in rest[0].iter_mut().zip(&done[i]) {
                    *x -= proj * q;
                }
            }
        }
        let n = crate::qla::norm(&cols[j]);
        cols[j].iter_mut().for_each(|x| *x /= n);
    }
    CMat::from_fn(d, d, |r, c| cols[c][r])
}

/// Joint outcome distribution of measuring both parties in the computational
/// basis after the rotation `U_A (x) U_B`.
fn outcome_probabilities(s: &BipartiteState, ua: &CMat, ub: &CMat) -> Result<Vec<f64>> {
    let w = ua.kron(ub);
    let x = w.matmul(s.rho());
    let n = w.rows();
    let probs: Vec<f64> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| x[(r, c)] * w[(r, c)].conj())
                .sum::<C64>()
                .re
                .max(0.0)
        })
        .collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotPhysical(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    Ok(probs)
}

fn check_observable(s: &BipartiteState, a: &ObservableSpectrum) -> Result<()> {
    if s.d1() != a.d || s.d2() != a.d {
        return Err(Error::DimensionMismatch {
            expected: s.d1().max(s.d2()),
            found: a.d,
        });
    }
    Ok(())
}

/// `K` outcome products for fixed local unitaries.
pub fn sample_with_unitaries<R: Rng + ?Sized>(
    s: &BipartiteState,
    a: &ObservableSpectrum,
    ua: &CMat,
    ub: &CMat,
    k: usize,
    rng: &mut R,
) -> Result<Vec<C64>> {
    check_observable(s, a)?;
    if k == 0 {
        return Err(Error::OutOfRange("K must be >= 1".into()));
    }
    let probs = outcome_probabilities(s, ua, ub)?;
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::NotPhysical(format!("outcome distribution: {e}")))?;
    let d = a.d;
    Ok((0..k)
        .map(|_| {
            let idx = dist.sample(rng);
            a.eigenvalues[idx / d] * a.eigenvalues[idx % d]
        })
        .collect())
}

/// One random setting: fresh Haar unitaries on both sides, then `K` shots.
pub fn sample_setting<R: Rng + ?Sized>(
    s: &BipartiteState,
    a: &ObservableSpectrum,
    k: usize,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let ua = haar_unitary(s.d1(), rng);
    let ub = haar_unitary(s.d2(), rng);
    sample_with_unitaries(s, a, &ua, &ub, k, rng)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Estimator {
    /// Averages over products of distinct shots; unbiased.
    #[default]
    UStatistic,
    /// `(sample mean)^t`; biased at small `K`.
    PlugIn,
}

/// Estimates of `E[z]^2` and `E[z]^4` from one setting's shots.
pub fn setting_powers(z: &[C64], estimator: Estimator) -> Result<(C64, C64)> {
    let k = z.len();
    match estimator {
        Estimator::PlugIn => {
            if k == 0 {
                return Err(Error::OutOfRange("no shots".into()));
            }
            let mean = z.iter().sum::<C64>() / k as f64;
            Ok((mean.powi(2), mean.powi(4)))
        }
        Estimator::UStatistic => {
            if k < 4 {
                return Err(Error::OutOfRange(format!("K = {k} < 4 shots")));
            }
            let mut p = [C64::new(0.0, 0.0); 4];
            for &x in z {
                let mut xp = x;
                for pi in p.iter_mut() {
                    *pi += xp;
                    xp *= x;
                }
            }
            let [p1, p2, p3, p4] = p;
            let kf = k as f64;
            let e2 = (p1 * p1 - p2) / 2.0;
            let e4 =
                (p1.powi(4) - 6.0 * p1 * p1 * p2 + 3.0 * p2 * p2 + 8.0 * p1 * p3 - 6.0 * p4) / 24.0;
            let pairs = kf * (kf - 1.0) / 2.0;
            let quads = pairs * (kf - 2.0) * (kf - 3.0) / 12.0;
            Ok((e2 / pairs, e4 / quads))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub r2: C64,
    pub r4: C64,
}

/// Normalized `(R2, R4)` from `M` settings of `K` shots.
pub fn estimate_moments<R: Rng + ?Sized>(
    s: &BipartiteState,
    a: &ObservableSpectrum,
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<MomentEstimate> {
    estimate_moments_with(s, a, m, k, Estimator::UStatistic, rng)
}

pub fn estimate_moments_with<R: Rng + ?Sized>(
    s: &BipartiteState,
    a: &ObservableSpectrum,
    m: usize,
    k: usize,
    estimator: Estimator,
    rng: &mut R,
) -> Result<MomentEstimate> {
    if m == 0 {
        return Err(Error::OutOfRange("M must be >= 1".into()));
    }
    if estimator == Estimator::UStatistic && k < 4 {
        return Err(Error::OutOfRange(format!("K = {k} < 4 shots")));
    }
    let mut sum2 = C64::new(0.0, 0.0);
    let mut sum4 = C64::new(0.0, 0.0);
    for _ in 0..m {
        let z = sample_setting(s, a, k, rng)?;
        let (e2, e4) = setting_powers(&z, estimator)?;
        sum2 += e2;
        sum4 += e4;
    }
    let (d1, d2) = (s.d1(), s.d2());
    Ok(MomentEstimate {
        r2: sum2 / m as f64 * r2_factor(d1, d2),
        r4: sum4 / m as f64 * r4_factor(d1, d2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriterionStatistic {
    /// `lower_boundary_k(r2) - r4`; `None` where `r2` exceeds the purity cap.
    pub value: Option<f64>,
    /// `r2` alone excludes Schmidt number `<= k`.
    pub r2_only: bool,
}

impl CriterionStatistic {
    pub fn detects(&self) -> bool {
        self.r2_only || self.value.is_some_and(|v| v > 0.0)
    }
}

/// Signed distance below the lower boundary of the Schmidt-number-`k` region.
pub fn criterion_statistic(r2: f64, r4: f64, d: usize, k: usize) -> Result<CriterionStatistic> {
    let x_max = max_abscissa(d, d, k)?;
    let cap = purity_cap(d, d, k)?;
    let r2_only = r2 > x_max * (1.0 + 1e-12);
    let value = if r2 > cap * (1.0 + 1e-12) {
        None
    } else {
        Some(lower_boundary_k(r2.max(0.0), d, d, k)? - r4)
    };
    Ok(CriterionStatistic { value, r2_only })
}

/// Noise interval on the isotropic line where the two-moment criterion is
/// needed and can succeed: below `p_min` `R2` alone refutes `k`, above `p_max`
/// the state sits on the global lower boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsotropicWindow {
    pub d: usize,
    pub k: usize,
    pub p_min: f64,
    pub p_max: f64,
}

pub fn isotropic_window(d: usize, k: usize) -> Result<IsotropicWindow> {
    let b = trace_budget(d, d, k)?;
    let p_min = isotropic_p_at(d, max_abscissa(d, d, k)?).max(0.0);
    let p_max = isotropic_p_at(d, b * b / (d * d - 1) as f64).max(0.0);
    Ok(IsotropicWindow { d, k, p_min, p_max })
}

fn one_or_many<'de, D, T>(de: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn default_ms() -> Vec<usize> {
    vec![10, 30, 100, 300, 1000]
}

fn default_k() -> usize {
    100
}

fn default_reps() -> usize {
    100
}

fn default_k_target() -> Vec<usize> {
    vec![1]
}

/// Grid of simulation runs; every list field also accepts a scalar.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub d: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub p: Vec<f64>,
    #[serde(rename = "M", default = "default_ms", deserialize_with = "one_or_many")]
    pub m: Vec<usize>,
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_k_target", deserialize_with = "one_or_many")]
    pub k_target: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::OutOfRange(msg));
        if self.d.is_empty() || self.p.is_empty() || self.m.is_empty() || self.k_target.is_empty() {
            return bad("d, p, M and k_target must be non-empty".into());
        }
        if let Some(&d) = self.d.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(format!("d = {d} < 2")));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("p = {p} outside [0, 1]"));
        }
        if self.m.contains(&0) {
            return bad("M must be >= 1".into());
        }
        if self.k < 4 {
            return bad(format!("K = {} < 4", self.k));
        }
        if self.reps < 2 {
            return bad(format!("reps = {} < 2", self.reps));
        }
        for &d in &self.d {
            if let Some(k) = self.k_target.iter().find(|&&k| k == 0 || k >= d) {
                return bad(format!("k_target = {k} not in 1..{d}"));
            }
        }
        Ok(())
    }
}

/// One grid point `(d, p, k, M)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationResult {
    pub d: usize,
    pub p: f64,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k_shots: usize,
    pub reps: usize,
    pub r2_mean: f64,
    pub r2_std: f64,
    pub r4_mean: f64,
    pub r4_std: f64,
    /// `None` when some repetition fell outside the boundary's domain.
    pub stat_mean: Option<f64>,
    pub stat_std: Option<f64>,
    /// Extrapolated settings for a 3 sigma violation, shared by all `M` of a `(d, p, k)`.
    pub m_star: Option<u64>,
    pub total: Option<u64>,
}

/// Fit of the criterion's spread against `M` for one `(d, p, k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetFit {
    pub d: usize,
    pub p: f64,
    pub k: usize,
    /// `c` in `std = c / sqrt(M)`.
    pub c: Option<f64>,
    /// Free log-log slope of `std` against `M`.
    pub exponent: Option<f64>,
    /// `M`-weighted mean of the statistic over the fitted points.
    pub stat_mean: Option<f64>,
    pub m_star: Option<u64>,
    pub total: Option<u64>,
    /// Fraction of repetitions in which `R2` alone refuted `k`.
    pub r2_only_fraction: f64,
    pub window: IsotropicWindow,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetStudy {
    pub rows: Vec<SimulationResult>,
    pub fits: Vec<BudgetFit>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Stream for repetition `rep` at `M`-index `mi` of grid point `gi`.
fn task_rng(seed: u64, gi: usize, mi: usize, rep: usize, n_m: usize, reps: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((gi * n_m + mi) * reps + rep) as u64);
    rng
}

struct RepOutcome {
    r2: f64,
    r4: f64,
    stat: CriterionStatistic,
}

pub fn run_budget_study(cfg: &SimulationConfig, exec: Exec) -> Result<BudgetStudy> {
    cfg.validate()?;
    let mut grid = Vec::new();
    for &d in &cfg.d {
        for &p in &cfg.p {
            for &k in &cfg.k_target {
                grid.push((d, p, k));
            }
        }
    }
    let n_m = cfg.m.len();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (gi, &(d, p, k)) in grid.iter().enumerate() {
        let state = isotropic_state(d, p)?;
        let obs = spectrum_rank4(d)?;
        let tasks: Vec<(usize, usize)> = (0..n_m)
            .flat_map(|mi| (0..cfg.reps).map(move |rep| (mi, rep)))
            .collect();
        let outcomes = exec
            .map_slice(&tasks, |&(mi, rep)| -> Result<RepOutcome> {
                let mut rng = task_rng(cfg.seed, gi, mi, rep, n_m, cfg.reps);
                let est = estimate_moments(&state, &obs, cfg.m[mi], cfg.k, &mut rng)?;
                let stat = criterion_statistic(est.r2.re, est.r4.re, d, k)?;
                Ok(RepOutcome {
                    r2: est.r2.re,
                    r4: est.r4.re,
                    stat,
                })
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

        let mut point_rows = Vec::with_capacity(n_m);
        for (mi, chunk) in outcomes.chunks(cfg.reps).enumerate() {
            let r2: Vec<f64> = chunk.iter().map(|o| o.r2).collect();
            let r4: Vec<f64> = chunk.iter().map(|o| o.r4).collect();
            let stats: Option<Vec<f64>> = chunk.iter().map(|o| o.stat.value).collect();
            let (r2_mean, r2_std) = mean_std(&r2);
            let (r4_mean, r4_std) = mean_std(&r4);
            let (stat_mean, stat_std) = match stats {
                Some(s) => {
                    let (m, sd) = mean_std(&s);
                    (Some(m), Some(sd))
                }
                None => (None, None),
            };
            point_rows.push(SimulationResult {
                d,
                p,
                k,
                m: cfg.m[mi],
                k_shots: cfg.k,
                reps: cfg.reps,
                r2_mean,
                r2_std,
                r4_mean,
                r4_std,
                stat_mean,
                stat_std,
                m_star: None,
                total: None,
            });
        }
        let r2_only =
            outcomes.iter().filter(|o| o.stat.r2_only).count() as f64 / outcomes.len() as f64;
        let fit = fit_budget(d, p, k, cfg.k, &point_rows, r2_only)?;
        for row in &mut point_rows {
            row.m_star = fit.m_star;
            row.total = fit.total;
        }
        rows.extend(point_rows);
        fits.push(fit);
    }
    Ok(BudgetStudy { rows, fits })
}

/// `std = c / sqrt(M)` by least squares in log-log over the `M` values where
/// every repetition produced a statistic, then `m_star = ceil((3 c / mean)^2)`.
fn fit_budget(
    d: usize,
    p: f64,
    k: usize,
    shots: usize,
    rows: &[SimulationResult],
    r2_only_fraction: f64,
) -> Result<BudgetFit> {
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| match (r.stat_mean, r.stat_std) {
            (Some(m), Some(s)) if s > 0.0 => Some((r.m as f64, m, s)),
            _ => None,
        })
        .collect();
    let window = isotropic_window(d, k)?;
    let mut fit = BudgetFit {
        d,
        p,
        k,
        c: None,
        exponent: None,
        stat_mean: None,
        m_star: None,
        total: None,
        r2_only_fraction,
        window,
    };
    if pts.is_empty() {
        return Ok(fit);
    }
    let n = pts.len() as f64;
    let log_c = pts
        .iter()
        .map(|(m, _, s)| s.ln() + 0.5 * m.ln())
        .sum::<f64>()
        / n;
    let c = log_c.exp();
    fit.c = Some(c);
    if pts.len() >= 2 {
        let lx: Vec<f64> = pts.iter().map(|(m, _, _)| m.ln()).collect();
        let ly: Vec<f64> = pts.iter().map(|(_, _, s)| s.ln()).collect();
        let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        fit.exponent = (sxx > 0.0).then(|| sxy / sxx);
    }
    let weight: f64 = pts.iter().map(|(m, _, _)| m).sum();
    let mean = pts.iter().map(|(m, mean, _)| m * mean).sum::<f64>() / weight;
    fit.stat_mean = Some(mean);
    if mean > 0.0 {
        let m_star = (3.0 * c / mean).powi(2).ceil().max(1.0);
        if m_star.is_finite() && m_star < u64::MAX as f64 / shots as f64 {
            fit.m_star = Some(m_star as u64);
            fit.total = Some(m_star as u64 * shots as u64);
        }
    }
    Ok(fit)
}

impl BudgetStudy {
    /// CSV with header `d,p,k,M,K,reps,r2_mean,r2_std,r4_mean,r4_std,stat_mean,stat_std,m_star,total`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
