//! Diagonal observables whose Haar-random moments reproduce the orthogonal
//! (Bloch-sphere) moments.
//!
//! The twirl of `A^(x)t` over the unitary group only involves identity and
//! products of transpositions; matching it against the orthogonal moments fixes
//! the coefficients [`a_coeff`], and contracting with the full cycle gives the
//! power traces [`power_trace`] `= Tr(A^t)`. The spectrum follows from the power
//! sums through Newton's identities.

use std::sync::OnceLock;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::qla::{poly_roots, C64};

/// Largest half-polygon order supported by [`gluing_counts`].
pub const MAX_GLUING_ORDER: usize = 8;
/// Largest dimension for which [`spectrum_full`] is built.
pub const MAX_FULL_DIM: usize = 10;

/// `counts[g]` = number of side pairings of a `2n`-gon giving a genus-`g` surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GluingTable {
    pub n: usize,
    pub counts: Vec<u64>,
}

impl GluingTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Brute-force count over all `(2n-1)!!` fixed-point-free pairings of the
/// `2n` sides, splitting the work on the partner of side 0.
pub fn gluing_counts(n: usize) -> Result<GluingTable> {
    gluing_counts_with(n, Exec::default())
}

pub fn gluing_counts_with(n: usize, exec: Exec) -> Result<GluingTable> {
    if !(1..=MAX_GLUING_ORDER).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "gluing order n = {n} not in 1..={MAX_GLUING_ORDER}"
        )));
    }
    let sides = 2 * n;
    let partials = exec.map_range(sides - 1, |j| {
        let mut pairing = vec![usize::MAX; sides];
        pairing[0] = j + 1;
        pairing[j + 1] = 0;
        let mut counts = vec![0u64; n / 2 + 1];
        enumerate_pairings(&mut pairing, n, &mut counts);
        counts
    });
    let mut counts = vec![0u64; n / 2 + 1];
    for part in partials {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    Ok(GluingTable { n, counts })
}

fn enumerate_pairings(pairing: &mut [usize], n: usize, counts: &mut [u64]) {
    let Some(first) = pairing.iter().position(|&p| p == usize::MAX) else {
        let vertices = vertex_count(pairing);
        // Euler characteristic V - n + 1 = 2 - 2g
        let genus = (n + 1 - vertices) / 2;
        counts[genus] += 1;
        return;
    };
    for other in (first + 1)..pairing.len() {
        if pairing[other] == usize::MAX {
            pairing[first] = other;
            pairing[other] = first;
            enumerate_pairings(pairing, n, counts);
            pairing[first] = usize::MAX;
            pairing[other] = usize::MAX;
        }
    }
}

/// Cycles of `rotation . pairing`, i.e. the vertices of the glued surface.
fn vertex_count(pairing: &[usize]) -> usize {
    let len = pairing.len();
    let mut seen = vec![false; len];
    let mut cycles = 0;
    for start in 0..len {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = (pairing[i] + 1) % len;
        }
    }
    cycles
}

fn cached_gluing(n: usize) -> Result<&'static GluingTable> {
    static TABLES: [OnceLock<GluingTable>; MAX_GLUING_ORDER + 1] =
        [const { OnceLock::new() }; MAX_GLUING_ORDER + 1];
    let slot = TABLES
        .get(n)
        .ok_or_else(|| Error::OutOfRange(format!("gluing order n = {n}")))?;
    if let Some(t) = slot.get() {
        return Ok(t);
    }
    let table = gluing_counts(n)?;
    Ok(slot.get_or_init(|| table))
}

/// `n!!` with `(-1)!! = 0!! = 1`.
fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Twirl coefficient of a permutation with `k` disjoint transpositions:
/// `(-1)^(t/2-k) d^k (d^2-3)!! (t-2k-1)!! / (d^2-3+t)!!`.
pub fn a_coeff(t: usize, k: usize, d: usize) -> Result<f64> {
    if t < 2 || !t.is_multiple_of(2) {
        return Err(Error::OutOfRange(format!("t = {t} must be even and >= 2")));
    }
    if k > t / 2 {
        return Err(Error::OutOfRange(format!(
            "k = {k} exceeds t/2 = {}",
            t / 2
        )));
    }
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d = {d} < 2")));
    }
    let d2 = (d * d) as f64;
    // (d^2-3)!!/(d^2-3+t)!! = 1 / prod_{j=1}^{t/2} (d^2-3+2j)
    let ratio: f64 = (1..=t / 2)
        .map(|j| 1.0 / (d2 - 3.0 + 2.0 * j as f64))
        .product();
    let sign = if (t / 2 - k).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Ok(sign * (d as f64).powi(k as i32) * double_factorial(t as i64 - 2 * k as i64 - 1) * ratio)
}

/// `Tr(A^t)` required for the `t`-th unitary moment to match the orthogonal one.
/// Odd `t` gives zero.
pub fn power_trace(t: usize, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d = {d} < 2")));
    }
    if t % 2 == 1 {
        return Ok(0.0);
    }
    if t == 0 {
        return Ok(d as f64);
    }
    if t / 2 > MAX_GLUING_ORDER {
        return Err(Error::OutOfRange(format!(
            "t = {t} exceeds {}",
            2 * MAX_GLUING_ORDER
        )));
    }
    let df = d as f64;
    let mut total = a_coeff(t, 0, d)? * df;
    for k in 1..=t / 2 {
        let table = cached_gluing(k)?;
        let genus_sum: f64 = table
            .counts
            .iter()
            .enumerate()
            .map(|(g, &c)| c as f64 * df.powi(k as i32 + 1 - 2 * g as i32))
            .sum();
        total += a_coeff(t, k, d)? * binomial(t, 2 * k) * genus_sum;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableKind {
    Full,
    Rank4,
}

/// Largest moment order for which unitary and orthogonal moments are guaranteed equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchOrder {
    Upto(usize),
    All,
}

impl MatchOrder {
    pub fn covers(self, t: usize) -> bool {
        match self {
            MatchOrder::All => true,
            MatchOrder::Upto(m) => t <= m,
        }
    }
}

impl Serialize for MatchOrder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MatchOrder::Upto(m) => s.serialize_u64(*m as u64),
            MatchOrder::All => s.serialize_str("all"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ObservableSpectrum {
    pub d: usize,
    /// Descending real part, ties broken by descending imaginary part.
    pub eigenvalues: Vec<C64>,
    pub match_order: MatchOrder,
    pub kind: ObservableKind,
}

#[derive(Serialize)]
struct EigenJson {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct ObservableJson<'a> {
    d: usize,
    kind: ObservableKind,
    match_order: MatchOrder,
    eigenvalues: Vec<EigenJson>,
    #[serde(skip)]
    _marker: std::marker::PhantomData<&'a ()>,
}

impl ObservableSpectrum {
    pub fn power_sum(&self, t: i32) -> C64 {
        self.eigenvalues.iter().map(|z| z.powi(t)).sum()
    }

    pub fn is_real(&self) -> bool {
        self.eigenvalues.iter().all(|z| z.im == 0.0)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let doc = ObservableJson {
            d: self.d,
            kind: self.kind,
            match_order: self.match_order,
            eigenvalues: self
                .eigenvalues
                .iter()
                .map(|z| EigenJson { re: z.re, im: z.im })
                .collect(),
            _marker: std::marker::PhantomData,
        };
        serde_json::to_value(doc).expect("observable serializes")
    }
}

fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Elementary symmetric polynomials `e_0..e_n` from power sums `p_1..p_n`.
fn newton_elementary(power_sums: &[f64]) -> Vec<f64> {
    let n = power_sums.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * power_sums[i - 1];
        }
        e[k] = acc / k as f64;
    }
    e
}

/// Unique `d`-point spectrum whose power sums `t = 1..d` equal [`power_trace`].
pub fn spectrum_full(d: usize) -> Result<ObservableSpectrum> {
    if !(2..=MAX_FULL_DIM).contains(&d) {
        return Err(Error::InvalidDimension(format!(
            "observable dimension {d} not in 2..={MAX_FULL_DIM}"
        )));
    }
    let power_sums = (1..=d)
        .map(|t| power_trace(t, d))
        .collect::<Result<Vec<_>>>()?;
    let e = newton_elementary(&power_sums);
    // z^d - e1 z^(d-1) + e2 z^(d-2) - ..., ascending order
    let coeffs: Vec<f64> = (0..=d)
        .map(|power| {
            let k = d - power;
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * e[k]
        })
        .collect();
    let roots = poly_roots(&coeffs)?;
    let scale = roots.roots.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    let mut eigenvalues: Vec<C64> = roots
        .roots
        .iter()
        .map(|z| {
            let re = if z.re.abs() < 1e-12 * scale {
                0.0
            } else {
                z.re
            };
            let im = if z.im.abs() < 1e-10 * scale {
                0.0
            } else {
                z.im
            };
            C64::new(re, im)
        })
        .collect();
    sort_spectrum(&mut eigenvalues);
    let match_order = match d {
        2 => MatchOrder::All,
        3 => MatchOrder::Upto(4),
        _ => MatchOrder::Upto(d),
    };
    Ok(ObservableSpectrum {
        d,
        eigenvalues,
        match_order,
        kind: ObservableKind::Full,
    })
}

/// Observable `diag(+-k1, +-k2, 0, ..., 0)` matching moments up to `t = 4`,
/// `k_{1,2} = sqrt(d +- sqrt(d (8 - d - 20/(d^2+1)))) / 2`.
///
/// For `d >= 8` the inner radicand is negative and `k_{1,2}` are complex
/// conjugates; the second and fourth power sums are unaffected.
pub fn spectrum_rank4(d: usize) -> Result<ObservableSpectrum> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "observable dimension {d} < 2"
        )));
    }
    let df = d as f64;
    let radicand = df * (8.0 - df - 20.0 / (df * df + 1.0));
    let inner = C64::new(radicand, 0.0).sqrt();
    let k1 = ((C64::new(df, 0.0) + inner) / 4.0).sqrt();
    let k2 = ((C64::new(df, 0.0) - inner) / 4.0).sqrt();
    if !(k1.is_finite() && k2.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "rank-4 observable undefined for d = {d} (radicand {radicand})"
        )));
    }
    let mut eigenvalues = vec![k1, -k1];
    if k2.norm() > 1e-12 {
        eigenvalues.extend([k2, -k2]);
    }
    eigenvalues.resize(d, C64::new(0.0, 0.0));
    sort_spectrum(&mut eigenvalues);
    Ok(ObservableSpectrum {
        d,
        eigenvalues,
        match_order: if d == 2 {
            MatchOrder::All
        } else {
            MatchOrder::Upto(4)
        },
        kind: ObservableKind::Rank4,
    })
}
