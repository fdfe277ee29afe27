//! Hermitian operator bases and the generalized Bloch decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{CMat, C64};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const IMAG_TOL: f64 = 1e-8;

/// Orthogonal hermitian basis `{l_0 = 1, l_1, ..., l_{d^2-1}}` with
/// `Tr(l_i l_j) = d delta_ij`.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    d: usize,
    elems: Vec<CMat>,
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn elems(&self) -> &[CMat] {
        &self.elems
    }

    /// The traceless elements `l_1..l_{d^2-1}`.
    pub fn traceless(&self) -> &[CMat] {
        &self.elems[1..]
    }

    /// Matrix of `Tr(l_i l_j^dagger)`.
    pub fn gram(&self) -> CMat {
        let n = self.elems.len();
        CMat::from_fn(n, n, |i, j| hs_inner(&self.elems[j], &self.elems[i]))
    }
}

/// `Tr(a^dagger b)`.
fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// Generalized Gell-Mann matrices rescaled to `Tr(l_i l_j) = d delta_ij`.
///
/// Order: identity, symmetric pairs `(j, k)` with `j < k` in lexicographic
/// order, antisymmetric pairs in the same order, then the `d - 1` diagonal
/// matrices.
pub fn gell_mann_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("local dimension {d} < 2")));
    }
    let scale = (d as f64 / 2.0).sqrt();
    let one = C64::new(scale, 0.0);
    let i_unit = C64::new(0.0, scale);
    let mut elems = Vec::with_capacity(d * d);
    elems.push(CMat::identity(d));
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMat::zeros(d, d);
            m[(j, k)] = one;
            m[(k, j)] = one;
            elems.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMat::zeros(d, d);
            m[(j, k)] = -i_unit;
            m[(k, j)] = i_unit;
            elems.push(m);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * scale;
        let mut diag = vec![0.0; d];
        diag[..l].iter_mut().for_each(|x| *x = norm);
        diag[l] = -(l as f64) * norm;
        elems.push(CMat::diag_real(&diag));
    }
    Ok(OperatorBasis { d, elems })
}

/// Density matrix of a `d1 x d2` system with `d1 <= d2`.
#[derive(Clone, Debug)]
pub struct BipartiteState {
    d1: usize,
    d2: usize,
    rho: CMat,
    swapped: bool,
}

impl BipartiteState {
    /// Validates hermiticity, unit trace and positivity. If `d1 > d2` the
    /// subsystems are exchanged and [`swapped`](Self::swapped) reports it.
    pub fn new(d1: usize, d2: usize, rho: CMat) -> Result<Self> {
        Self::check_dims(d1, d2, &rho)?;
        let herm_dev = (&rho - &rho.dagger())
            .data()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_dev > HERMITIAN_TOL {
            return Err(Error::NotPhysical(format!(
                "density matrix not hermitian (deviation {herm_dev:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotPhysical(format!("trace is {tr}, expected 1")));
        }
        let min_eig = rho.hermitian_eig()?.values[0];
        if min_eig < -PSD_TOL {
            return Err(Error::NotPhysical(format!(
                "smallest eigenvalue {min_eig:e} is negative"
            )));
        }
        Ok(Self::assemble(d1, d2, rho))
    }

    fn check_dims(d1: usize, d2: usize, rho: &CMat) -> Result<()> {
        if d1 < 2 || d2 < 2 {
            return Err(Error::InvalidDimension(format!(
                "local dimensions ({d1}, {d2}) must both be >= 2"
            )));
        }
        if rho.rows() != d1 * d2 || rho.cols() != d1 * d2 {
            return Err(Error::DimensionMismatch {
                expected: d1 * d2,
                found: rho.rows().max(rho.cols()),
            });
        }
        Ok(())
    }

    fn assemble(d1: usize, d2: usize, rho: CMat) -> Self {
        if d1 > d2 {
            let swapped = CMat::from_fn(d1 * d2, d1 * d2, |r, c| {
                let (b, a) = (r / d1, r % d1);
                let (b2, a2) = (c / d1, c % d1);
                rho[(a * d2 + b, a2 * d2 + b2)]
            });
            Self {
                d1: d2,
                d2: d1,
                rho: swapped,
                swapped: true,
            }
        } else {
            Self {
                d1,
                d2,
                rho,
                swapped: false,
            }
        }
    }

    /// Pure state `|psi><psi|` for a normalized vector on `C^d1 (x) C^d2`.
    pub fn pure(d1: usize, d2: usize, psi: &[C64]) -> Result<Self> {
        let n = crate::qla::norm(psi);
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotPhysical(format!("state vector has norm {n}")));
        }
        Self::new(d1, d2, CMat::projector(psi))
    }

    pub fn maximally_mixed(d1: usize, d2: usize) -> Result<Self> {
        let n = d1 * d2;
        Self::new(d1, d2, CMat::identity(n).scale_real(1.0 / n as f64))
    }

    /// `|psi_a> (x) |psi_b>`.
    pub fn product(psi_a: &[C64], psi_b: &[C64]) -> Result<Self> {
        Self::pure(
            psi_a.len(),
            psi_b.len(),
            &crate::qla::kron_vec(psi_a, psi_b),
        )
    }

    /// `|00>`.
    pub fn product_zero(d1: usize, d2: usize) -> Result<Self> {
        let mut a = vec![C64::new(0.0, 0.0); d1];
        let mut b = vec![C64::new(0.0, 0.0); d2];
        a[0] = C64::new(1.0, 0.0);
        b[0] = C64::new(1.0, 0.0);
        Self::product(&a, &b)
    }

    /// `|phi+> = sum_i |ii> / sqrt(d)`.
    pub fn phi_plus(d: usize) -> Result<Self> {
        let mut psi = vec![C64::new(0.0, 0.0); d * d];
        let amp = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            psi[i * d + i] = C64::new(amp, 0.0);
        }
        Self::pure(d, d, &psi)
    }

    /// Convex combination `sum_i w_i rho_i`; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &BipartiteState)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::OutOfRange("empty mixture".into()))?;
        let (d1, d2) = (first.d1, first.d2);
        let mut rho = CMat::zeros(d1 * d2, d1 * d2);
        for (w, s) in parts {
            if s.d1 != d1 || s.d2 != d2 {
                return Err(Error::DimensionMismatch {
                    expected: d1 * d2,
                    found: s.d1 * s.d2,
                });
            }
            if *w < 0.0 {
                return Err(Error::OutOfRange(format!("negative mixture weight {w}")));
            }
            rho = &rho + &s.rho.scale_real(*w);
        }
        Self::new(d1, d2, rho)
    }

    /// `(U_A (x) U_B) rho (U_A (x) U_B)^dagger`.
    pub fn local_unitary(&self, ua: &CMat, ub: &CMat) -> Result<Self> {
        for (u, d) in [(ua, self.d1), (ub, self.d2)] {
            if u.rows() != d || u.cols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: u.rows().max(u.cols()),
                });
            }
        }
        let g = ua.kron(ub);
        let rho = g.matmul(&self.rho).matmul(&g.dagger());
        // re-hermitise round-off
        let rho = (&rho + &rho.dagger()).scale_real(0.5);
        Self::new(self.d1, self.d2, rho)
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    /// True when the input had `d1 > d2` and was transposed to `d1 <= d2`.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn reduced_a(&self) -> CMat {
        let (d1, d2) = (self.d1, self.d2);
        CMat::from_fn(d1, d1, |a, a2| {
            (0..d2).map(|b| self.rho[(a * d2 + b, a2 * d2 + b)]).sum()
        })
    }

    pub fn reduced_b(&self) -> CMat {
        let (d1, d2) = (self.d1, self.d2);
        CMat::from_fn(d2, d2, |b, b2| {
            (0..d1).map(|a| self.rho[(a * d2 + b, a * d2 + b2)]).sum()
        })
    }

    pub fn purity(&self) -> f64 {
        self.rho.frobenius_sq()
    }

    pub fn to_json(&self) -> StateJson {
        let n = self.d1 * self.d2;
        StateJson {
            d1: self.d1,
            d2: self.d2,
            rho_re: (0..n)
                .map(|r| (0..n).map(|c| self.rho[(r, c)].re).collect())
                .collect(),
            rho_im: (0..n)
                .map(|r| (0..n).map(|c| self.rho[(r, c)].im).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let n = json.d1 * json.d2;
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !rows_ok(&json.rho_re) || !rows_ok(&json.rho_im) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: json.rho_re.len(),
            });
        }
        let rho = CMat::from_fn(n, n, |r, c| C64::new(json.rho_re[r][c], json.rho_im[r][c]));
        Self::new(json.d1, json.d2, rho)
    }
}

/// On-disk state format: row-major real and imaginary parts of `rho`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub d1: usize,
    pub d2: usize,
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
}

/// Local Bloch vectors and correlation matrix of a bipartite state.
#[derive(Clone, Debug)]
pub struct BlochDecomposition {
    pub d1: usize,
    pub d2: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `(d1^2-1) x (d2^2-1)`, real entries (imaginary parts are zero).
    pub t: CMat,
}

impl BlochDecomposition {
    /// Decomposition in the Gell-Mann bases.
    pub fn of(state: &BipartiteState) -> Result<Self> {
        let ba = gell_mann_basis(state.d1())?;
        let bb = gell_mann_basis(state.d2())?;
        decompose(state, &ba, &bb)
    }

    /// `Tr(T T^T)`.
    pub fn t_frobenius_sq(&self) -> f64 {
        self.t.frobenius_sq()
    }

    /// Augmented matrix `C = [[1, beta^T], [alpha, T]]`.
    pub fn augmented(&self) -> CMat {
        let (n1, n2) = (self.alpha.len() + 1, self.beta.len() + 1);
        CMat::from_fn(n1, n2, |r, c| match (r, c) {
            (0, 0) => C64::new(1.0, 0.0),
            (0, c) => C64::new(self.beta[c - 1], 0.0),
            (r, 0) => C64::new(self.alpha[r - 1], 0.0),
            (r, c) => self.t[(r - 1, c - 1)],
        })
    }
}

/// `alpha_i = Tr(rho l_i (x) 1)`, `beta_j = Tr(rho 1 (x) l~_j)`, `T_ij = Tr(rho l_i (x) l~_j)`.
pub fn decompose(
    s: &BipartiteState,
    ba: &OperatorBasis,
    bb: &OperatorBasis,
) -> Result<BlochDecomposition> {
    let (d1, d2) = (s.d1(), s.d2());
    if ba.dim() != d1 {
        return Err(Error::DimensionMismatch {
            expected: d1,
            found: ba.dim(),
        });
    }
    if bb.dim() != d2 {
        return Err(Error::DimensionMismatch {
            expected: d2,
            found: bb.dim(),
        });
    }
    let rho = s.rho();
    let n1 = d1 * d1;
    let n2 = d2 * d2;
    // coeff[i][j] = Tr(rho (l_i (x) l~_j)), contracted one factor at a time
    let mut coeff = vec![vec![C64::new(0.0, 0.0); n2]; n1];
    let mut max_imag: f64 = 0.0;
    for (i, la) in ba.elems().iter().enumerate() {
        // X_{b', b} = sum_{a, a'} rho_{(a b),(a' b')} la_{a' a}
        let x = CMat::from_fn(d2, d2, |bp, b| {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..d1 {
                for ap in 0..d1 {
                    let l = la[(ap, a)];
                    if l.re != 0.0 || l.im != 0.0 {
                        acc += rho[(a * d2 + b, ap * d2 + bp)] * l;
                    }
                }
            }
            acc
        });
        for (j, lb) in bb.elems().iter().enumerate() {
            // Tr over B: sum_{b, b'} X_{b', b} lb_{b' b}
            let v: C64 = x.data().iter().zip(lb.data()).map(|(p, q)| p * q).sum();
            max_imag = max_imag.max(v.im.abs());
            coeff[i][j] = v;
        }
    }
    if max_imag > IMAG_TOL {
        return Err(Error::ImaginaryPart(max_imag));
    }
    let alpha = (1..n1).map(|i| coeff[i][0].re).collect();
    let beta = (1..n2).map(|j| coeff[0][j].re).collect();
    let t = CMat::from_fn(n1 - 1, n2 - 1, |i, j| C64::new(coeff[i + 1][j + 1].re, 0.0));
    Ok(BlochDecomposition {
        d1,
        d2,
        alpha,
        beta,
        t,
    })
}

/// Assemble `rho` from Bloch data. Fails if the result is not positive semidefinite.
pub fn reconstruct(
    b: &BlochDecomposition,
    ba: &OperatorBasis,
    bb: &OperatorBasis,
) -> Result<BipartiteState> {
    let (d1, d2) = (ba.dim(), bb.dim());
    let (n1, n2) = (d1 * d1 - 1, d2 * d2 - 1);
    if b.alpha.len() != n1 || b.t.rows() != n1 {
        return Err(Error::DimensionMismatch {
            expected: n1,
            found: b.t.rows().max(b.alpha.len()),
        });
    }
    if b.beta.len() != n2 || b.t.cols() != n2 {
        return Err(Error::DimensionMismatch {
            expected: n2,
            found: b.t.cols().max(b.beta.len()),
        });
    }
    let c = b.augmented();
    let mut rho = CMat::zeros(d1 * d2, d1 * d2);
    for (i, la) in ba.elems().iter().enumerate() {
        let mut right = CMat::zeros(d2, d2);
        for (j, lb) in bb.elems().iter().enumerate() {
            let w = c[(i, j)];
            if w.re != 0.0 || w.im != 0.0 {
                right = &right + &lb.scale(w);
            }
        }
        rho = &rho + &la.kron(&right);
    }
    let rho = rho.scale_real(1.0 / (d1 * d2) as f64);
    BipartiteState::new(d1, d2, rho)
}

/// Singular values of `T`, descending, length `min(d1,d2)^2 - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSpectrum {
    pub sigmas: Vec<f64>,
}

impl CorrelationSpectrum {
    pub fn power_sum(&self, p: i32) -> f64 {
        self.sigmas.iter().map(|s| s.powi(p)).sum()
    }
}

pub fn correlation_spectrum(b: &BlochDecomposition) -> Result<CorrelationSpectrum> {
    let len = b.d1.min(b.d2).pow(2) - 1;
    let mut sigmas = b.t.svd_values()?;
    sigmas.resize(len, 0.0);
    Ok(CorrelationSpectrum { sigmas })
}
