//! Small dense complex linear algebra.
//!
//! Everything here is sized for matrices up to roughly 100x100 (the correlation
//! matrix of a ten-level system), so storage is a flat row-major `Vec` and the
//! eigen/singular value routines are cyclic Jacobi sweeps.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Default absolute tolerance for predicate helpers.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;
const MAX_ROOT_DEGREE: usize = 16;
const MAX_ROOT_ITERS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QlaError {
    #[error("entries length {len} does not match shape {rows}x{cols}")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("{routine} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("polynomial must be monic with degree <= {MAX_ROOT_DEGREE}: {0}")]
    BadPolynomial(String),
}

pub type Result<T> = std::result::Result<T, QlaError>;

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMat {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(QlaError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, re: &[f64]) -> Result<Self> {
        Self::new(rows, cols, re.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `u v^dagger`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    /// Projector `|psi><psi|`.
    pub fn projector(psi: &[C64]) -> Self {
        Self::outer(psi, psi)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &CMat) -> CMat {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = CMat::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMat {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Sum of squared moduli of all entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_deviation() <= tol
    }

    fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    /// Hermitian with smallest eigenvalue above `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol.max(DEFAULT_TOL)) {
            return false;
        }
        match self.hermitian_eig() {
            Ok(eig) => eig.values.first().is_none_or(|&v| v > -tol),
            Err(_) => false,
        }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self
                .dagger()
                .matmul(self)
                .max_abs_diff(&CMat::identity(self.cols))
                <= tol
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.
    ///
    /// Eigenvalues are ascending; eigenvector `i` is column `i` of `vectors`.
    pub fn hermitian_eig(&self) -> Result<HermitianEig> {
        if !self.is_square() {
            return Err(QlaError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if !self.is_finite() {
            return Err(QlaError::NonFinite);
        }
        let scale = self.frobenius_sq().sqrt().max(f64::MIN_POSITIVE);
        let dev = self.hermitian_deviation();
        if dev > 1e-8 * scale.max(1.0) {
            return Err(QlaError::NotHermitian(dev));
        }
        let n = self.rows;
        // symmetrise so the rotations act on an exactly hermitian matrix
        let mut h = CMat::from_fn(n, n, |r, c| 0.5 * (self[(r, c)] + self[(c, r)].conj()));
        let mut v = CMat::identity(n);
        let threshold = 1e-30 * scale * scale;

        let mut converged = n < 2;
        let mut off = 0.0;
        for _ in 0..MAX_SWEEPS {
            off = off_diagonal_sq(&h);
            if off <= threshold {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let c = h[(p, q)];
                    if c.norm() <= 1e-300 {
                        continue;
                    }
                    let rot = Rotation::hermitian_2x2(h[(p, p)].re, h[(q, q)].re, c);
                    rot.apply_right(&mut h, p, q);
                    rot.apply_left_dagger(&mut h, p, q);
                    rot.apply_right(&mut v, p, q);
                    // clean up the annihilated pair and keep the diagonal real
                    h[(p, q)] = C64::new(0.0, 0.0);
                    h[(q, p)] = C64::new(0.0, 0.0);
                    h[(p, p)].im = 0.0;
                    h[(q, q)].im = 0.0;
                }
            }
        }
        if !converged {
            return Err(QlaError::NoConvergence {
                routine: "hermitian_eig",
                iterations: MAX_SWEEPS,
                residual: off.sqrt(),
            });
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| h[(a, a)].re.total_cmp(&h[(b, b)].re));
        let values = order.iter().map(|&i| h[(i, i)].re).collect();
        let vectors = CMat::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(HermitianEig { values, vectors })
    }

    /// Singular values, descending, by one-sided Jacobi.
    pub fn svd_values(&self) -> Result<Vec<f64>> {
        if !self.is_finite() {
            return Err(QlaError::NonFinite);
        }
        // work on the orientation with at least as many rows as columns
        let mut a = if self.rows >= self.cols {
            self.clone()
        } else {
            self.dagger()
        };
        let n = a.cols;
        let m = a.rows;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut converged = n < 2;
        let mut worst = 0.0;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            worst = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = C64::new(0.0, 0.0);
                    for k in 0..m {
                        let x = a.data[k * n + p];
                        let y = a.data[k * n + q];
                        alpha += x.norm_sqr();
                        beta += y.norm_sqr();
                        gamma += x.conj() * y;
                    }
                    let g = gamma.norm();
                    if g == 0.0 {
                        continue;
                    }
                    let rel = g / (alpha * beta).sqrt();
                    worst = worst.max(rel);
                    if rel <= 1e-15 {
                        continue;
                    }
                    rotated = true;
                    Rotation::hermitian_2x2(alpha, beta, gamma).apply_right(&mut a, p, q);
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(QlaError::NoConvergence {
                routine: "svd_values",
                iterations: MAX_SWEEPS,
                residual: worst,
            });
        }
        let mut sv: Vec<f64> = (0..n)
            .map(|c| {
                (0..m)
                    .map(|r| a.data[r * n + c].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        Ok(sv)
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.svd_values()?.iter().sum())
    }

    /// Integer matrix power of a square matrix.
    pub fn pow(&self, k: u32) -> CMat {
        assert!(self.is_square());
        let mut out = CMat::identity(self.rows);
        for _ in 0..k {
            out = out.matmul(self);
        }
        out
    }
}

fn off_diagonal_sq(h: &CMat) -> f64 {
    let mut s = 0.0;
    for r in 0..h.rows {
        for c in 0..h.cols {
            if r != c {
                s += h[(r, c)].norm_sqr();
            }
        }
    }
    s
}

/// Unitary 2x2 block `[[pp, pq], [qp, qq]]` acting on indices `(p, q)`.
struct Rotation {
    pp: C64,
    pq: C64,
    qp: C64,
    qq: C64,
}

impl Rotation {
    /// Rotation `J` such that `J^dagger [[a, c], [c*, b]] J` is diagonal.
    fn hermitian_2x2(a: f64, b: f64, c: C64) -> Self {
        let g = c.norm();
        let phase = if g > 0.0 {
            c.conj() / g
        } else {
            C64::new(1.0, 0.0)
        };
        let theta = 0.5 * (2.0 * g).atan2(a - b);
        let (s, co) = theta.sin_cos();
        Rotation {
            pp: C64::new(co, 0.0),
            pq: C64::new(-s, 0.0),
            qp: phase * s,
            qq: phase * co,
        }
    }

    /// `m <- m J` on columns p, q.
    fn apply_right(&self, m: &mut CMat, p: usize, q: usize) {
        let cols = m.cols;
        for r in 0..m.rows {
            let x = m.data[r * cols + p];
            let y = m.data[r * cols + q];
            m.data[r * cols + p] = x * self.pp + y * self.qp;
            m.data[r * cols + q] = x * self.pq + y * self.qq;
        }
    }

    /// `m <- J^dagger m` on rows p, q.
    fn apply_left_dagger(&self, m: &mut CMat, p: usize, q: usize) {
        let cols = m.cols;
        for c in 0..cols {
            let x = m.data[p * cols + c];
            let y = m.data[q * cols + c];
            m.data[p * cols + c] = self.pp.conj() * x + self.qp.conj() * y;
            m.data[q * cols + c] = self.pq.conj() * x + self.qq.conj() * y;
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

/// Result of [`CMat::hermitian_eig`].
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEig {
    /// `V diag(values) V^dagger`.
    pub fn reconstruct(&self) -> CMat {
        let v = &self.vectors;
        let n = v.rows();
        CMat::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| v[(r, k)] * self.values[k] * v[(c, k)].conj())
                .sum()
        })
    }
}

/// `<u|v>`, antilinear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(u: &[C64]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product of two vectors.
pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter()
        .flat_map(|a| v.iter().map(move |b| a * b))
        .collect()
}

/// Monic real polynomial together with its complex roots.
#[derive(Clone, Debug)]
pub struct PolyRoots {
    /// Ascending degree, last entry is 1.
    pub coefficients: Vec<f64>,
    pub roots: Vec<C64>,
}

impl PolyRoots {
    pub fn eval(&self, z: C64) -> C64 {
        horner(&self.coefficients, z)
    }

    /// Largest `|p(root)|` over all roots.
    pub fn max_residual(&self) -> f64 {
        self.roots
            .iter()
            .map(|&z| self.eval(z).norm())
            .fold(0.0, f64::max)
    }
}

fn horner(coeffs: &[f64], z: C64) -> C64 {
    coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn horner_with_derivative(coeffs: &[f64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of a monic real polynomial (ascending coefficients) by
/// Aberth–Ehrlich simultaneous iteration.
pub fn poly_roots(coeffs: &[f64]) -> Result<PolyRoots> {
    let Some(&lead) = coeffs.last() else {
        return Err(QlaError::BadPolynomial("empty coefficient list".into()));
    };
    if lead != 1.0 {
        return Err(QlaError::BadPolynomial(format!(
            "leading coefficient is {lead}, expected 1"
        )));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(QlaError::NonFinite);
    }
    let degree = coeffs.len() - 1;
    if degree > MAX_ROOT_DEGREE {
        return Err(QlaError::BadPolynomial(format!("degree {degree}")));
    }
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let tol = 1e-9 * scale;
    if degree == 0 {
        return Ok(PolyRoots {
            coefficients: coeffs.to_vec(),
            roots: Vec::new(),
        });
    }

    // start on a circle inside the Cauchy bound, rotated off the real axis
    let radius = 1.0 + coeffs[..degree].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let start_r = radius
        .min(2.0 * (coeffs[0].abs().max(1e-3)).powf(1.0 / degree as f64))
        .max(0.5);
    let mut z: Vec<C64> = (0..degree)
        .map(|k| {
            C64::from_polar(
                start_r,
                2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4,
            )
        })
        .collect();

    for _ in 0..MAX_ROOT_ITERS {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let (p, dp) = horner_with_derivative(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| {
                    let diff = z[i] - z[j];
                    if diff.norm() == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            } else {
                // nudge a root that landed on a critical point
                z[i] += C64::new(1e-3, 1e-3);
                max_step = f64::INFINITY;
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }

    // Newton polish for simple roots
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner_with_derivative(coeffs, *zi);
            if dp.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let next = *zi - p / dp;
            if horner(coeffs, next).norm() < p.norm() {
                *zi = next;
            } else {
                break;
            }
        }
    }

    let out = PolyRoots {
        coefficients: coeffs.to_vec(),
        roots: z,
    };
    let residual = out.max_residual();
    if residual >= tol {
        return Err(QlaError::NoConvergence {
            routine: "poly_roots",
            iterations: MAX_ROOT_ITERS,
            residual,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let a = random_mat(rng, n, n);
        (&a + &a.dagger()).scale_real(0.5)
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        // eigenvectors of a random hermitian matrix form a unitary
        random_hermitian(rng, n).hermitian_eig().unwrap().vectors
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let sv = CMat::identity(3).svd_values().unwrap();
        assert_eq!(sv.len(), 3);
        for s in sv {
            assert!((s - 1.0).abs() < 1e-14);
        }
        let sv = CMat::diag_real(&[3.0, -4.0]).svd_values().unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_matches_eigenvalues_of_gram_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_mat(&mut rng, 5, 7);
        let sv = m.svd_values().unwrap();
        assert_eq!(sv.len(), 5);
        let gram = m.matmul(&m.dagger());
        let mut ev: Vec<f64> = gram
            .hermitian_eig()
            .unwrap()
            .values
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        ev.reverse();
        for (a, b) in sv.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let frob: f64 = sv.iter().map(|s| s * s).sum();
        assert!((frob - m.frobenius_sq()).abs() < 1e-10 * m.frobenius_sq());
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut m = CMat::identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(m.svd_values(), Err(QlaError::NonFinite));
        assert!(m.trace_norm().is_err());
    }

    #[test]
    fn trace_norm_examples() {
        let t = CMat::diag_real(&[1.0, -2.0, 3.0]).trace_norm().unwrap();
        assert!((t - 6.0).abs() < 1e-13);

        let u = [c(0.6, 0.0), c(0.0, 0.8)];
        let v = [
            c(1.0 / 2f64.sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.0, -1.0 / 2f64.sqrt()),
        ];
        assert!((CMat::outer(&u, &v).trace_norm().unwrap() - 1.0).abs() < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 4);
        let expect: f64 = h
            .hermitian_eig()
            .unwrap()
            .values
            .iter()
            .map(|v| v.abs())
            .sum();
        assert!((h.trace_norm().unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn eig_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 9, 16] {
            let h = random_hermitian(&mut rng, n);
            let eig = h.hermitian_eig().unwrap();
            let err = (&eig.reconstruct() - &h).frobenius_sq().sqrt();
            assert!(err < 1e-10 * h.frobenius_sq().sqrt(), "n={n} err={err}");
            assert!(eig.vectors.is_unitary(1e-10));
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMat::new(
            2,
            2,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(m.hermitian_eig(), Err(QlaError::NotHermitian(_))));
    }

    #[test]
    fn kron_trace_factorises() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_mat(&mut rng, 3, 3);
            let b = random_mat(&mut rng, 4, 4);
            let lhs = a.kron(&b).trace();
            let rhs = a.trace() * b.trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn svd_invariant_under_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = random_mat(&mut rng, 4, 6);
        let u = random_unitary(&mut rng, 4);
        let v = random_unitary(&mut rng, 6);
        let a = m.svd_values().unwrap();
        let b = u.matmul(&m).matmul(&v).svd_values().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn predicates_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = random_unitary(&mut rng, 5);
        assert!(u.is_unitary(1e-10));
        for s in u.svd_values().unwrap() {
            assert!((s - 1.0).abs() < 1e-10);
        }
        let h = random_hermitian(&mut rng, 4);
        assert!(h.is_hermitian(1e-12));
        let psd = h.matmul(&h);
        assert!(psd.is_psd(1e-9));
        assert!(!CMat::diag_real(&[1.0, -0.1]).is_psd(1e-9));
    }

    #[test]
    fn roots_of_simple_polynomials() {
        let r = poly_roots(&[-1.0, 0.0, 1.0]).unwrap();
        let mut re: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-12 && (re[1] - 1.0).abs() < 1e-12);

        let r = poly_roots(&[0.0, -1.5, 0.0, 1.0]).unwrap();
        let mut re: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let s = 1.5f64.sqrt();
        assert!((re[0] + s).abs() < 1e-12 && re[1].abs() < 1e-12 && (re[2] - s).abs() < 1e-12);

        let r = poly_roots(&[1.0, 0.0, 1.0]).unwrap();
        let mut im: Vec<f64> = r.roots.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + 1.0).abs() < 1e-12 && (im[1] - 1.0).abs() < 1e-12);
        assert!(r.roots.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn roots_reject_non_monic() {
        assert!(matches!(
            poly_roots(&[1.0, 2.0]),
            Err(QlaError::BadPolynomial(_))
        ));
        assert!(matches!(
            poly_roots(&[1.0; 18]),
            Err(QlaError::BadPolynomial(_))
        ));
    }

    #[test]
    fn roots_of_random_polynomials_meet_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for degree in 1..=16 {
            let mut coeffs: Vec<f64> = (0..degree).map(|_| rng.random_range(-3.0..3.0)).collect();
            coeffs.push(1.0);
            let r = poly_roots(&coeffs).unwrap();
            assert_eq!(r.roots.len(), degree);
            let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            assert!(r.max_residual() < 1e-9 * scale);
        }
    }
}
