//! Separable states on the kinks of the separable lower boundary.
//!
//! A symmetric mixture `sum_i w_i |psi_i psi_i><psi_i psi_i|` has a Gramian
//! (hence positive semidefinite) correlation matrix. For equiangular vectors with
//! overlap `1/sqrt(d)`, or for full mutually unbiased bases, that matrix is
//! proportional to a projector, which puts the state on a kink.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::bloch::{correlation_spectrum, BipartiteState, BlochDecomposition};
use crate::error::{Error, Result};
use crate::qla::{inner, kron_vec, norm, CMat, C64};

const OVERLAP_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;
/// Tolerance for the matrix identities in verification reports.
pub const IDENTITY_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug)]
pub struct EquiangularSet {
    pub d: usize,
    pub vectors: Vec<Vec<C64>>,
    pub overlap: f64,
}

impl EquiangularSet {
    pub fn new(d: usize, vectors: Vec<Vec<C64>>, overlap: f64) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::OutOfRange("empty equiangular set".into()));
        }
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            if (norm(v) - 1.0).abs() > NORM_TOL {
                return Err(Error::NotPhysical(format!("vector norm {}", norm(v))));
            }
        }
        for (i, u) in vectors.iter().enumerate() {
            for v in &vectors[i + 1..] {
                let o = inner(u, v).norm();
                if (o - overlap).abs() > OVERLAP_TOL {
                    return Err(Error::NotPhysical(format!(
                        "overlap {o} differs from {overlap}"
                    )));
                }
            }
        }
        Ok(Self {
            d,
            vectors,
            overlap,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The first `n` vectors, still equiangular.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::OutOfRange(format!(
                "prefix size {n} not in 1..={}",
                self.len()
            )));
        }
        Ok(Self {
            d: self.d,
            vectors: self.vectors[..n].to_vec(),
            overlap: self.overlap,
        })
    }
}

#[derive(Clone, Debug)]
pub struct MubFamily {
    pub d: usize,
    pub bases: Vec<Vec<Vec<C64>>>,
}

impl MubFamily {
    pub fn new(d: usize, bases: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        let target = 1.0 / (d as f64).sqrt();
        for basis in &bases {
            if basis.len() != d || basis.iter().any(|v| v.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: basis.len(),
                });
            }
            for (i, u) in basis.iter().enumerate() {
                for (j, v) in basis.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    if (inner(u, v) - c(expect, 0.0)).norm() > ORTHO_TOL {
                        return Err(Error::NotPhysical("basis is not orthonormal".into()));
                    }
                }
            }
        }
        for (k, bk) in bases.iter().enumerate() {
            for bl in &bases[k + 1..] {
                for u in bk {
                    for v in bl {
                        if (inner(u, v).norm() - target).abs() > OVERLAP_TOL {
                            return Err(Error::NotPhysical("bases are not unbiased".into()));
                        }
                    }
                }
            }
        }
        Ok(Self { d, bases })
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// One vector from each basis: an equiangular set with overlap `1/sqrt(d)`.
    pub fn transversal(&self) -> Result<EquiangularSet> {
        let vectors = self.bases.iter().map(|b| b[0].clone()).collect();
        EquiangularSet::new(self.d, vectors, 1.0 / (self.d as f64).sqrt())
    }
}

pub fn qubit_trio() -> EquiangularSet {
    let h = 1.0 / SQRT_2;
    let vectors = vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(h, 0.0), c(h, 0.0)],
        vec![c(h, 0.0), c(0.0, h)],
    ];
    EquiangularSet::new(2, vectors, h).expect("qubit trio is equiangular")
}

/// SIC-POVM vectors: the Bloch tetrahedron for `d = 2`, the Hesse SIC for `d = 3`.
pub fn sic_fiducial_set(d: usize) -> Result<EquiangularSet> {
    let overlap = 1.0 / ((d + 1) as f64).sqrt();
    match d {
        2 => {
            let mut vectors = vec![vec![c(1.0, 0.0), c(0.0, 0.0)]];
            // polar angle with cos(theta) = -1/3
            let theta = (-1.0f64 / 3.0).acos();
            for j in 0..3 {
                let phi = 2.0 * PI * j as f64 / 3.0;
                vectors.push(vec![
                    c((theta / 2.0).cos(), 0.0),
                    C64::from_polar((theta / 2.0).sin(), phi),
                ]);
            }
            EquiangularSet::new(2, vectors, overlap)
        }
        3 => {
            let fiducial = [0.0, 1.0 / SQRT_2, -1.0 / SQRT_2];
            let mut vectors = Vec::with_capacity(9);
            for a in 0..3 {
                for b in 0..3 {
                    // X^a Z^b |f>
                    let mut v = vec![c(0.0, 0.0); 3];
                    for (j, &f) in fiducial.iter().enumerate() {
                        let phase = C64::from_polar(1.0, 2.0 * PI * (b * j) as f64 / 3.0);
                        v[(j + a) % 3] = phase * f;
                    }
                    vectors.push(v);
                }
            }
            EquiangularSet::new(3, vectors, overlap)
        }
        _ => Err(Error::Unsupported(format!("SIC fiducial for d = {d}"))),
    }
}

/// A SIC of dimension `d - 1` embedded in dimension `d`; overlap `1/sqrt(d)`.
pub fn pad_sic(d: usize) -> Result<EquiangularSet> {
    if !(3..=4).contains(&d) {
        return Err(Error::Unsupported(format!("padded SIC for d = {d}")));
    }
    let sic = sic_fiducial_set(d - 1)?;
    let vectors = sic
        .vectors
        .into_iter()
        .map(|mut v| {
            v.push(c(0.0, 0.0));
            v
        })
        .collect();
    EquiangularSet::new(d, vectors, 1.0 / (d as f64).sqrt())
}

fn is_prime(n: usize) -> bool {
    n >= 2
        && (2..)
            .take_while(|k| k * k <= n)
            .all(|k| !n.is_multiple_of(k))
}

fn computational_basis(d: usize) -> Vec<Vec<C64>> {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

/// Exponents `e` of the entries `i^e / 2` of the four non-computational bases in `d = 4`.
const MUB4_EXPONENTS: [[[u8; 4]; 4]; 4] = [
    [[0, 0, 0, 0], [0, 2, 0, 2], [0, 0, 2, 2], [0, 2, 2, 0]],
    [[0, 3, 3, 2], [0, 3, 1, 0], [0, 1, 3, 0], [0, 1, 1, 2]],
    [[0, 2, 3, 3], [0, 0, 3, 1], [0, 0, 1, 3], [0, 2, 1, 1]],
    [[0, 3, 2, 3], [0, 3, 0, 1], [0, 1, 0, 3], [0, 1, 2, 1]],
];

/// Complete set of `d + 1` MUBs for prime `d` (quadratic phases) and for `d = 4`
/// (constant table).
pub fn mub_prime(d: usize) -> Result<MubFamily> {
    let mut bases = vec![computational_basis(d)];
    if d == 2 {
        let h = 1.0 / SQRT_2;
        bases.push(vec![
            vec![c(h, 0.0), c(h, 0.0)],
            vec![c(h, 0.0), c(-h, 0.0)],
        ]);
        bases.push(vec![
            vec![c(h, 0.0), c(0.0, h)],
            vec![c(h, 0.0), c(0.0, -h)],
        ]);
    } else if d == 4 {
        let units = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for basis in MUB4_EXPONENTS {
            bases.push(
                basis
                    .iter()
                    .map(|v| v.iter().map(|&e| units[e as usize] * 0.5).collect())
                    .collect(),
            );
        }
    } else if is_prime(d) {
        let scale = 1.0 / (d as f64).sqrt();
        for b in 0..d {
            bases.push(
                (0..d)
                    .map(|a| {
                        (0..d)
                            .map(|j| {
                                let k = (b * j * j + a * j) % d;
                                C64::from_polar(scale, 2.0 * PI * k as f64 / d as f64)
                            })
                            .collect()
                    })
                    .collect(),
            );
        }
    } else {
        return Err(Error::Unsupported(format!(
            "complete MUBs only for prime d or d = 4, got {d}"
        )));
    }
    MubFamily::new(d, bases)
}

/// Largest MUB family shipped for `d`: complete for primes and 4, three
/// product bases for `d = 6`.
pub fn mub_family(d: usize) -> Result<MubFamily> {
    if d != 6 {
        return mub_prime(d);
    }
    let (two, three) = (mub_prime(2)?, mub_prime(3)?);
    let bases = (0..3)
        .map(|l| {
            let mut basis = Vec::with_capacity(6);
            for u in &two.bases[l] {
                for v in &three.bases[l] {
                    basis.push(kron_vec(u, v));
                }
            }
            basis
        })
        .collect();
    MubFamily::new(6, bases)
}

/// `sum_i w_i |psi_i psi_i><psi_i psi_i|`.
fn symmetric_mixture(d: usize, parts: &[(f64, &[C64])]) -> Result<BipartiteState> {
    let mut rho = CMat::zeros(d * d, d * d);
    for &(w, psi) in parts {
        rho = &rho + &CMat::projector(&kron_vec(psi, psi)).scale_real(w);
    }
    BipartiteState::new(d, d, rho)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub residual: f64,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(identity: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self {
            identity: identity.into(),
            residual,
            pass: residual <= tol,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub state: BipartiteState,
    pub checks: Vec<IdentityCheck>,
}

impl Construction {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn square_correlation(state: &BipartiteState) -> Result<CMat> {
    Ok(BlochDecomposition::of(state)?.t)
}

fn gram_checks(t: &CMat, d: usize) -> Result<Vec<IdentityCheck>> {
    let trace = t.trace().re;
    let min_eig = t.hermitian_eig()?.values[0];
    Ok(vec![
        IdentityCheck::new("Tr T = d-1", (trace - (d - 1) as f64).abs(), IDENTITY_TOL),
        IdentityCheck::new("T >= 0", (-min_eig).max(0.0), IDENTITY_TOL),
    ])
}

/// `(1/N) sum_i |psi_i psi_i><psi_i psi_i|` for an equiangular set with overlap `1/sqrt(d)`.
pub fn equiangular_state(set: &EquiangularSet) -> Result<Construction> {
    let d = set.d;
    if (set.overlap - 1.0 / (d as f64).sqrt()).abs() > OVERLAP_TOL && set.len() > 1 {
        return Err(Error::OutOfRange(format!(
            "overlap {} is not 1/sqrt({d})",
            set.overlap
        )));
    }
    let n = set.len() as f64;
    let parts: Vec<(f64, &[C64])> = set
        .vectors
        .iter()
        .map(|v| (1.0 / n, v.as_slice()))
        .collect();
    let state = symmetric_mixture(d, &parts)?;
    let t = square_correlation(&state)?;
    let factor = (d - 1) as f64 / n;
    let mut checks = vec![IdentityCheck::new(
        format!("T^2 = ({}/{})T", d - 1, set.len()),
        t.matmul(&t).max_abs_diff(&t.scale_real(factor)),
        IDENTITY_TOL,
    )];
    checks.extend(gram_checks(&t, d)?);
    Ok(Construction { state, checks })
}

/// Interpolation between the kinks `1/(N+1)` and `1/N`, using the last vector
/// of an `(N+1)`-element set as the extra vector.
pub fn equiangular_family(set: &EquiangularSet, p: f64) -> Result<Construction> {
    let d = set.d;
    if set.len() < 2 {
        return Err(Error::OutOfRange("need at least two vectors".into()));
    }
    if (set.overlap - 1.0 / (d as f64).sqrt()).abs() > OVERLAP_TOL {
        return Err(Error::OutOfRange(format!(
            "overlap {} is not 1/sqrt({d})",
            set.overlap
        )));
    }
    let n = set.len() - 1;
    let nf = n as f64;
    if !(p >= nf / (nf + 1.0) - 1e-12 && p <= 1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!(
            "p = {p} outside [{n}/{}, 1]",
            n + 1
        )));
    }
    let (head, last) = set.vectors.split_at(n);
    let mut parts: Vec<(f64, &[C64])> = head.iter().map(|v| (p / nf, v.as_slice())).collect();
    parts.push((1.0 - p, last[0].as_slice()));
    let state = symmetric_mixture(d, &parts)?;
    let t = square_correlation(&state)?;

    let df = (d - 1) as f64;
    let m = df * p / nf;
    let l = df * (1.0 - p);
    let mut expected = vec![m; n];
    expected.push(l);
    expected.sort_by(|a, b| b.total_cmp(a));
    expected.resize(d * d - 1, 0.0);
    let sigmas = correlation_spectrum(&BlochDecomposition::of(&state)?)?.sigmas;
    let spec_residual = sigmas
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut checks = vec![IdentityCheck::new(
        "spectrum = (m x N, l, 0...)",
        spec_residual,
        1e-8,
    )];
    checks.extend(gram_checks(&t, d)?);
    Ok(Construction { state, checks })
}

/// `(1/(m d)) sum_l sum_k |psi_k^l psi_k^l><...|` over the first `m_use` bases.
pub fn mub_state(mubs: &MubFamily, m_use: usize) -> Result<Construction> {
    if m_use == 0 || m_use > mubs.len() {
        return Err(Error::OutOfRange(format!(
            "m = {m_use} not in 1..={}",
            mubs.len()
        )));
    }
    let d = mubs.d;
    let w = 1.0 / (m_use * d) as f64;
    let parts: Vec<(f64, &[C64])> = mubs.bases[..m_use]
        .iter()
        .flatten()
        .map(|v| (w, v.as_slice()))
        .collect();
    let state = symmetric_mixture(d, &parts)?;
    let t = square_correlation(&state)?;
    let mut checks = vec![IdentityCheck::new(
        format!("T^2 = T/{m_use}"),
        t.matmul(&t).max_abs_diff(&t.scale_real(1.0 / m_use as f64)),
        IDENTITY_TOL,
    )];
    checks.extend(gram_checks(&t, d)?);
    Ok(Construction { state, checks })
}

#[derive(Clone, Debug, Serialize)]
pub struct KinkStatus {
    pub n: usize,
    pub x: f64,
    /// Construction reaching this kink, if any.
    pub source: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KinkCoverage {
    pub d: usize,
    pub kinks: Vec<KinkStatus>,
}

impl KinkCoverage {
    pub fn covered(&self) -> Vec<usize> {
        self.kinks
            .iter()
            .filter(|k| k.source.is_some())
            .map(|k| k.n)
            .collect()
    }

    pub fn missing(&self) -> Vec<usize> {
        self.kinks
            .iter()
            .filter(|k| k.source.is_none())
            .map(|k| k.n)
            .collect()
    }
}

/// Largest shipped equiangular set with overlap `1/sqrt(d)` and its name.
fn largest_equiangular(d: usize) -> Result<(EquiangularSet, &'static str)> {
    let mut best = if d == 2 {
        (qubit_trio(), "qubit trio")
    } else {
        (mub_family(d)?.transversal()?, "MUB transversal")
    };
    if let Ok(padded) = pad_sic(d) {
        if padded.len() > best.0.len() {
            best = (padded, "padded SIC");
        }
    }
    Ok(best)
}

/// Which kinks `R2 = 1/N`, `N = 1..d^2-1`, are reached by the shipped constructions.
pub fn kink_coverage(d: usize) -> Result<KinkCoverage> {
    if !(2..=6).contains(&d) {
        return Err(Error::Unsupported(format!("kink coverage for d = {d}")));
    }
    let mut kinks: Vec<KinkStatus> = (1..d * d)
        .map(|n| KinkStatus {
            n,
            x: 1.0 / n as f64,
            source: None,
        })
        .collect();
    kinks[0].source = Some("product state".into());
    let (set, name) = largest_equiangular(d)?;
    for n in 2..=set.len() {
        kinks[n - 1]
            .source
            .get_or_insert_with(|| format!("{name} prefix of {n}"));
    }
    let mubs = mub_family(d)?;
    for m in 1..=mubs.len() {
        let n = m * (d - 1);
        kinks[n - 1]
            .source
            .get_or_insert_with(|| format!("{m} MUBs"));
    }
    Ok(KinkCoverage { d, kinks })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceCheck {
    pub k: usize,
    pub expected: f64,
    pub value: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceConstraintReport {
    pub d: usize,
    pub m: usize,
    pub checks: Vec<TraceCheck>,
}

impl TraceConstraintReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks the necessary conditions `Tr(T^k) = (d-1)/m^(k-1)`, `k = 1..k_max`.
pub fn mub_trace_constraints(
    t: &CMat,
    d: usize,
    m: usize,
    k_max: usize,
) -> Result<TraceConstraintReport> {
    if !t.is_square() {
        return Err(Error::OutOfRange(format!("T is {}x{}", t.rows(), t.cols())));
    }
    if t.max_abs_diff(&t.transpose()) > 1e-9 {
        return Err(Error::NotPhysical("T is not symmetric".into()));
    }
    if m == 0 || d < 2 {
        return Err(Error::OutOfRange(format!(
            "need m >= 1 and d >= 2, got m = {m}, d = {d}"
        )));
    }
    let mut power = t.clone();
    let mut checks = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        if k > 1 {
            power = power.matmul(t);
        }
        let value = power.trace().re;
        let expected = (d - 1) as f64 / (m as f64).powi(k as i32 - 1);
        let residual = (value - expected).abs();
        checks.push(TraceCheck {
            k,
            expected,
            value,
            residual,
            pass: residual <= 1e-8 * expected.max(1.0),
        });
    }
    Ok(TraceConstraintReport { d, m, checks })
}
