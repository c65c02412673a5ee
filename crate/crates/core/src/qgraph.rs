//! Noncompact quantum graphs: resonance matrix assembly, symbolic
//! determinants as exponential sums, commensurable reduction and
//! structure classification.

use crate::complex_util::{arg0, Scaled, I};
use crate::diagram::{build_diagram, DistributionDiagram, Segment};
use crate::exppoly::{canonicalize, CanonReport, CanonTolerances, ExpPoly, ExpTerm};
use crate::linalg;
use crate::polynomial::{Polynomial, Root};
use crate::rootfind::{
    find_zeros, AnalyticFunction, ResonanceMultiset, RootError, RootOptions, SearchRect,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use thiserror::Error;

/// Largest matrix handled by [`symbolic_det`].
pub const MAX_SYMBOLIC_DIM: usize = 12;
/// Continued-fraction denominator cap for rational reconstruction.
pub const MAX_DENOMINATOR: u64 = 1_000_000;
/// Largest reduction-polynomial degree; beyond it the lengths are treated as
/// incommensurable for practical purposes.
pub const MAX_LATTICE_DEGREE: u64 = 512;
/// Radius of the neighbourhood of `k = 0` removed from zero sets.
pub const ORIGIN_PUNCTURE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QGraphError {
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("vertex {0:?} listed twice")]
    DuplicateVertex(String),
    #[error("edge {edge} has invalid length {length}")]
    BadLength { edge: usize, length: f64 },
    #[error("coupling at vertex {vertex:?} is not unitary (deviation {deviation:e})")]
    NotUnitary { vertex: String, deviation: f64 },
    #[error("coupling at vertex {vertex:?} has dimension {got}, vertex degree is {expected}")]
    CouplingDimension {
        vertex: String,
        expected: usize,
        got: usize,
    },
    #[error("k = 0 is excluded")]
    ZeroK,
    #[error("matrix dimension {0} exceeds the symbolic cap {MAX_SYMBOLIC_DIM}")]
    DimensionCap(usize),
    #[error("frequencies are not commensurable (ratio {0})")]
    Incommensurable(f64),
    #[error("reduction polynomial degree {0} exceeds {MAX_LATTICE_DEGREE}")]
    LatticeDegree(u64),
    #[error("coefficients depend on k; no constant-coefficient reduction")]
    PolynomialCoefficients,
    #[error("exponential sum has fewer than two terms")]
    SingleTerm,
    #[error("advanced segment with slope {0} in a graph determinant")]
    AdvancedSegment(f64),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// A vertex identifier as written in JSON: a string or a non-negative integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Index(u64),
    Name(String),
}

impl VertexId {
    pub fn key(&self) -> String {
        match self {
            VertexId::Index(i) => i.to_string(),
            VertexId::Name(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lead {
    pub v: VertexId,
    #[serde(default = "one")]
    pub count: usize,
}

/// A matrix entry: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Kirchhoff,
}

/// Kirchhoff everywhere, or per-vertex unitary matrices (vertices not listed
/// get Kirchhoff conditions).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Uniform(CouplingKind),
    PerVertex(BTreeMap<String, Vec<Vec<Entry>>>),
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::Uniform(CouplingKind::Kirchhoff)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub leads: Vec<Lead>,
    #[serde(default)]
    pub coupling: Coupling,
}

/// One end of an edge or lead meeting a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EndKind {
    /// `x = 0` of internal edge `j`.
    Start(usize),
    /// `x = ρ_j` of internal edge `j`.
    Finish(usize),
    Lead(usize),
}

/// Indexing of unknowns and vertex ends, derived once from a [`GraphSpec`].
#[derive(Clone, Debug)]
pub struct GraphLayout {
    lengths: Vec<f64>,
    n_leads: usize,
    /// Ends at each vertex: edges in listed order (u-end, then v-end), then leads.
    ends: Vec<Vec<EndKind>>,
    /// `None` for Kirchhoff.
    couplings: Vec<Option<Vec<Complex64>>>,
}

impl GraphSpec {
    pub fn layout(&self) -> Result<GraphLayout, QGraphError> {
        let mut index = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if index.insert(v.key(), i).is_some() {
                return Err(QGraphError::DuplicateVertex(v.key()));
            }
        }
        let find = |v: &VertexId| {
            index
                .get(&v.key())
                .copied()
                .ok_or_else(|| QGraphError::UnknownVertex(v.key()))
        };
        let mut ends = vec![Vec::new(); self.vertices.len()];
        let mut lengths = Vec::with_capacity(self.edges.len());
        for (j, e) in self.edges.iter().enumerate() {
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(QGraphError::BadLength {
                    edge: j,
                    length: e.length,
                });
            }
            lengths.push(e.length);
            ends[find(&e.u)?].push(EndKind::Start(j));
            ends[find(&e.v)?].push(EndKind::Finish(j));
        }
        let mut n_leads = 0;
        for l in &self.leads {
            let v = find(&l.v)?;
            for _ in 0..l.count {
                ends[v].push(EndKind::Lead(n_leads));
                n_leads += 1;
            }
        }
        let mut couplings = vec![None; self.vertices.len()];
        if let Coupling::PerVertex(map) = &self.coupling {
            for (key, rows) in map {
                let v = *index
                    .get(key)
                    .ok_or_else(|| QGraphError::UnknownVertex(key.clone()))?;
                let d = ends[v].len();
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(QGraphError::CouplingDimension {
                        vertex: key.clone(),
                        expected: d,
                        got: rows.len(),
                    });
                }
                let u: Vec<Complex64> = rows.iter().flatten().map(|e| e.value()).collect();
                let deviation = unitarity_defect(&u, d);
                if deviation > 1e-10 {
                    return Err(QGraphError::NotUnitary {
                        vertex: key.clone(),
                        deviation,
                    });
                }
                couplings[v] = Some(u);
            }
        }
        Ok(GraphLayout {
            lengths,
            n_leads,
            ends,
            couplings,
        })
    }
}

/// `max |(U*U − I)_{ij}|`.
fn unitarity_defect(u: &[Complex64], d: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..d {
                s += u[k * d + i].conj() * u[k * d + j];
            }
            if i == j {
                s -= 1.0;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

impl GraphLayout {
    /// `2·#edges + #leads`.
    pub fn dim(&self) -> usize {
        2 * self.lengths.len() + self.n_leads
    }

    fn col_a(&self, j: usize) -> usize {
        2 * j
    }
    fn col_b(&self, j: usize) -> usize {
        2 * j + 1
    }
    fn col_c(&self, l: usize) -> usize {
        2 * self.lengths.len() + l
    }

    /// Rows of the resonance matrix with entries in a generic ring.
    ///
    /// `value` and `deriv` give, for an end, the (column, coefficient) pairs of
    /// the boundary value and of the outgoing derivative divided by `ik`.
    fn rows<T: Clone>(&self, ring: &Ring<T>) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        for (v, ends) in self.ends.iter().enumerate() {
            let d = ends.len();
            if d == 0 {
                continue;
            }
            let value = |e: EndKind| -> Vec<(usize, T)> {
                match e {
                    EndKind::Start(j) => vec![
                        (self.col_a(j), ring.one.clone()),
                        (self.col_b(j), ring.one.clone()),
                    ],
                    EndKind::Finish(j) => vec![
                        (self.col_a(j), (ring.wave)(self.lengths[j])),
                        (self.col_b(j), (ring.wave)(-self.lengths[j])),
                    ],
                    EndKind::Lead(l) => vec![(self.col_c(l), ring.one.clone())],
                }
            };
            let deriv = |e: EndKind| -> Vec<(usize, T)> {
                match e {
                    EndKind::Start(j) => vec![
                        (self.col_a(j), ring.one.clone()),
                        (self.col_b(j), (ring.neg)(&ring.one)),
                    ],
                    EndKind::Finish(j) => vec![
                        (self.col_a(j), (ring.neg)(&(ring.wave)(self.lengths[j]))),
                        (self.col_b(j), (ring.wave)(-self.lengths[j])),
                    ],
                    EndKind::Lead(l) => vec![(self.col_c(l), ring.one.clone())],
                }
            };
            let mut push = |terms: Vec<(usize, T)>| {
                let mut row = vec![ring.zero.clone(); n];
                for (c, t) in terms {
                    row[c] = (ring.add)(&row[c], &t);
                }
                out.push(row);
            };
            match &self.couplings[v] {
                None => {
                    for i in 1..d {
                        let mut t = value(ends[0]);
                        t.extend(value(ends[i]).into_iter().map(|(c, x)| (c, (ring.neg)(&x))));
                        push(t);
                    }
                    push(ends.iter().flat_map(|&e| deriv(e)).collect());
                }
                Some(u) => {
                    // (U − I)Ψ + i(U + I)Ψ′ with Ψ′ = ik · deriv
                    for r in 0..d {
                        let mut t = Vec::new();
                        for (c, &e) in ends.iter().enumerate() {
                            let delta = if r == c { 1.0 } else { 0.0 };
                            let um = u[r * d + c] - delta;
                            let up = u[r * d + c] + delta;
                            if um != Complex64::new(0.0, 0.0) {
                                t.extend(
                                    value(e)
                                        .into_iter()
                                        .map(|(col, x)| (col, (ring.scale)(&x, um))),
                                );
                            }
                            if up != Complex64::new(0.0, 0.0) {
                                // i · ik = −k
                                t.extend(
                                    deriv(e).into_iter().map(|(col, x)| {
                                        (col, (ring.times_k)(&(ring.scale)(&x, -up)))
                                    }),
                                );
                            }
                        }
                        push(t);
                    }
                }
            }
        }
        out
    }
}

/// Minimal ring interface used to assemble the matrix numerically or symbolically.
struct Ring<T> {
    zero: T,
    one: T,
    /// `e^{iρk}`.
    wave: Box<dyn Fn(f64) -> T>,
    neg: Box<dyn Fn(&T) -> T>,
    add: Box<dyn Fn(&T, &T) -> T>,
    scale: Box<dyn Fn(&T, Complex64) -> T>,
    times_k: Box<dyn Fn(&T) -> T>,
}

fn numeric_ring(k: Complex64) -> Ring<Complex64> {
    Ring {
        zero: Complex64::new(0.0, 0.0),
        one: Complex64::new(1.0, 0.0),
        wave: Box::new(move |rho| (I * k * rho).exp()),
        neg: Box::new(|x| -x),
        add: Box::new(|a, b| a + b),
        scale: Box::new(|a, s| a * s),
        times_k: Box::new(move |a| a * k),
    }
}

fn symbolic_ring() -> Ring<ExpSum> {
    Ring {
        zero: ExpSum::zero(),
        one: ExpSum::constant(Complex64::new(1.0, 0.0)),
        wave: Box::new(|rho| ExpSum::monomial(rho, Polynomial::one())),
        neg: Box::new(|x| x.scale(Complex64::new(-1.0, 0.0))),
        add: Box::new(|a, b| a.add(b)),
        scale: Box::new(|a, s| a.scale(s)),
        times_k: Box::new(|a| a.times_k()),
    }
}

/// Resonance matrix `A(k)` in row-major order. Kirchhoff rows carry the
/// derivative divided by `ik`; unitary-coupling rows are left undivided.
pub fn assemble_a(graph: &GraphSpec, k: Complex64) -> Result<Vec<Complex64>, QGraphError> {
    if k.norm() == 0.0 {
        return Err(QGraphError::ZeroK);
    }
    Ok(graph.layout()?.numeric_matrix(k))
}

impl GraphLayout {
    pub fn numeric_matrix(&self, k: Complex64) -> Vec<Complex64> {
        self.rows(&numeric_ring(k)).into_iter().flatten().collect()
    }

    pub fn numeric_det(&self, k: Complex64) -> Complex64 {
        linalg::det(self.numeric_matrix(k), self.dim())
    }
}

/// Exponential sum `F(k) = Σ_l C_l(k) e^{i b_l k}`, canonical with strictly
/// increasing frequencies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
}

impl ExpSum {
    pub fn zero() -> Self {
        ExpSum { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0.0, Polynomial::constant(c))
    }

    /// `C(k) e^{ibk}`.
    pub fn monomial(b: f64, c: Polynomial) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        ExpSum {
            terms: vec![ExpTerm {
                frequency: b,
                poly: c,
            }],
        }
    }

    /// Canonical form of arbitrary `(b, C)` pairs.
    pub fn from_raw(raw: &[(f64, Polynomial)]) -> (Self, CanonReport) {
        let scale = raw.iter().map(|t| t.0.abs()).fold(1.0, f64::max);
        let (p, rep) = canonicalize(
            raw,
            CanonTolerances {
                freq_tol: 1e-9 * scale,
                coeff_tol: 1e-9,
            },
        );
        (
            ExpSum {
                terms: p.into_terms(),
            },
            rep,
        )
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn raw(&self) -> impl Iterator<Item = (f64, Polynomial)> + '_ {
        self.terms.iter().map(|t| (t.frequency, t.poly.clone()))
    }

    pub fn add(&self, other: &ExpSum) -> ExpSum {
        Self::sum(&[self, other])
    }

    /// Canonical sum of many exponential sums at once, so that cancellations
    /// are judged against every contribution.
    pub fn sum(parts: &[&ExpSum]) -> ExpSum {
        let raw: Vec<(f64, Polynomial)> = parts.iter().flat_map(|p| p.raw()).collect();
        Self::from_raw(&raw).0
    }

    pub fn mul(&self, other: &ExpSum) -> ExpSum {
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                raw.push((a.frequency + b.frequency, a.poly.mul(&b.poly)));
            }
        }
        Self::from_raw(&raw).0
    }

    pub fn scale(&self, s: Complex64) -> ExpSum {
        if s == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        ExpSum {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    frequency: t.frequency,
                    poly: t.poly.scale(s),
                })
                .collect(),
        }
    }

    /// `k · F(k)`.
    pub fn times_k(&self) -> ExpSum {
        ExpSum {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    frequency: t.frequency,
                    poly: t
                        .poly
                        .mul(&Polynomial::monomial(Complex64::new(1.0, 0.0), 1)),
                })
                .collect(),
        }
    }

    pub fn eval(&self, k: Complex64) -> Complex64 {
        self.eval_scaled(k).to_complex()
    }

    pub fn eval_scaled(&self, k: Complex64) -> Scaled {
        if self.terms.is_empty() {
            return Scaled::zero();
        }
        let shift = self
            .terms
            .iter()
            .map(|t| -t.frequency * k.im)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.poly.eval(k) * (I * t.frequency * k - shift).exp();
        }
        Scaled::new(acc, shift)
    }

    /// Whether every coefficient is a constant.
    pub fn has_constant_coefficients(&self) -> bool {
        self.terms.iter().all(|t| t.poly.degree() == Some(0))
    }

    /// The same function in `ζ` with `k = iζ`, shifted so the largest
    /// frequency is 0: `e^{b_min ζ} F(iζ) = Σ C_l(iζ) e^{(b_min − b_l)ζ}`.
    pub fn to_zeta_exppoly(&self) -> ExpPoly {
        let Some(b_min) = self.terms.first().map(|t| t.frequency) else {
            return ExpPoly::default();
        };
        let mut terms: Vec<ExpTerm> = self
            .terms
            .iter()
            .map(|t| ExpTerm {
                frequency: b_min - t.frequency,
                poly: t.poly.substitute_scaled(I),
            })
            .collect();
        terms.reverse();
        if let Some(last) = terms.last_mut() {
            last.frequency = 0.0;
        }
        ExpPoly::from_canonical_terms(terms)
    }
}

/// Determinant of `A(k)` over the exponential-sum ring, by Laplace expansion
/// along rows with minors memoized on their column set.
pub fn symbolic_det(graph: &GraphSpec) -> Result<ExpSum, QGraphError> {
    let layout = graph.layout()?;
    let n = layout.dim();
    if n > MAX_SYMBOLIC_DIM {
        return Err(QGraphError::DimensionCap(n));
    }
    let rows = layout.rows(&symbolic_ring());
    let mut memo: HashMap<u32, ExpSum> = HashMap::new();
    Ok(laplace(&rows, 0, (1u32 << n) - 1, &mut memo))
}

fn laplace(rows: &[Vec<ExpSum>], r: usize, cols: u32, memo: &mut HashMap<u32, ExpSum>) -> ExpSum {
    if cols == 0 {
        return ExpSum::constant(Complex64::new(1.0, 0.0));
    }
    if let Some(v) = memo.get(&cols) {
        return v.clone();
    }
    let mut parts = Vec::new();
    let mut pos = 0;
    for c in 0..rows.len() {
        if cols & (1 << c) == 0 {
            continue;
        }
        let entry = &rows[r][c];
        if !entry.is_zero() {
            let minor = laplace(rows, r + 1, cols & !(1 << c), memo);
            if !minor.is_zero() {
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                parts.push(entry.mul(&minor).scale(Complex64::new(sign, 0.0)));
            }
        }
        pos += 1;
    }
    let refs: Vec<&ExpSum> = parts.iter().collect();
    let out = ExpSum::sum(&refs);
    memo.insert(cols, out.clone());
    out
}

/// Best rational `p/q` with `q ≤ max_den` and `|x − p/q| ≤ tol·max(1,|x|)`.
pub fn rational_approx(x: f64, tol: f64, max_den: u64) -> Option<(i64, u64)> {
    let target = tol * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 as u64 > max_den {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= target {
            return Some((h1 as i64, k1 as u64));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `F(k) = C e^{i b_0 k} P(e^{iβk})` with integer exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommensurableForm {
    pub beta: f64,
    pub b0: f64,
    pub degrees: Vec<u64>,
    pub p: Polynomial,
    /// Roots with `|ξ| ≥ 1 − tol`; these generate resonance lattices.
    pub xi_roots: Vec<Root>,
    /// Roots with `|ξ| < 1 − tol`, which cannot come from a unitary problem.
    pub spurious: Vec<Root>,
}

impl CommensurableForm {
    pub fn min_modulus(&self) -> Option<f64> {
        self.xi_roots
            .iter()
            .map(|r| r.value.norm())
            .min_by(f64::total_cmp)
    }

    /// Real resonances exist exactly when some `|ξ| = 1`.
    pub fn has_embedded(&self, tol: f64) -> bool {
        self.min_modulus().is_some_and(|m| (m - 1.0).abs() <= tol)
    }

    /// Lattice points `βk = 2πt − i Ln|ξ| + Arg ξ` inside `rect`, origin excluded.
    pub fn lattice_in(&self, rect: &SearchRect) -> Vec<Root> {
        let mut out = Vec::new();
        for xi in &self.xi_roots {
            let im = -xi.value.norm().ln() / self.beta;
            if im < rect.y0() || im > rect.y1() {
                continue;
            }
            let base = arg0(xi.value);
            let t_lo = ((rect.x0() * self.beta - base) / (2.0 * PI)).floor() as i64 - 1;
            let t_hi = ((rect.x1() * self.beta - base) / (2.0 * PI)).ceil() as i64 + 1;
            for t in t_lo..=t_hi {
                let k = Complex64::new((2.0 * PI * t as f64 + base) / self.beta, im);
                if rect.contains(k) && k.norm() > ORIGIN_PUNCTURE {
                    out.push(Root {
                        value: k,
                        multiplicity: xi.multiplicity,
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            a.value
                .re
                .total_cmp(&b.value.re)
                .then(a.value.im.total_cmp(&b.value.im))
        });
        out
    }
}

/// Rewrites a constant-coefficient exponential sum as a polynomial in
/// `w = e^{iβk}` and extracts its roots.
pub fn commensurable_reduce(f: &ExpSum, tol: f64) -> Result<CommensurableForm, QGraphError> {
    if f.terms().len() < 2 {
        return Err(QGraphError::SingleTerm);
    }
    if !f.has_constant_coefficients() {
        return Err(QGraphError::PolynomialCoefficients);
    }
    let b0 = f.terms()[0].frequency;
    let deltas: Vec<f64> = f.terms()[1..].iter().map(|t| t.frequency - b0).collect();
    let unit = deltas[0];
    let mut fracs = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        let ratio = d / unit;
        let (p, q) = rational_approx(ratio, tol, MAX_DENOMINATOR)
            .ok_or(QGraphError::Incommensurable(ratio))?;
        fracs.push((p as u64, q));
    }
    let too_big = QGraphError::LatticeDegree(u64::MAX);
    let lcm = fracs
        .iter()
        .try_fold(1u64, |l, &(_, q)| (l / gcd(l, q)).checked_mul(q))
        .ok_or(too_big.clone())?;
    let nums: Vec<u64> = fracs
        .iter()
        .map(|&(p, q)| p.checked_mul(lcm / q))
        .collect::<Option<_>>()
        .ok_or(too_big)?;
    let g = nums.iter().fold(0u64, |g, &n| gcd(g, n));
    let beta = unit * g as f64 / lcm as f64;
    let mut degrees = vec![0u64];
    degrees.extend(nums.iter().map(|n| n / g));
    let top = *degrees.last().unwrap();
    if top > MAX_LATTICE_DEGREE {
        return Err(QGraphError::LatticeDegree(top));
    }
    let top = top as usize;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); top + 1];
    for (t, &d) in f.terms().iter().zip(&degrees) {
        coeffs[d as usize] += t.poly.coeff(0);
    }
    let p = Polynomial::new(coeffs);
    let (xi_roots, spurious) = p
        .roots(1e-7)
        .into_iter()
        .partition(|r| r.value.norm() >= 1.0 - 1e-7);
    Ok(CommensurableForm {
        beta,
        b0,
        degrees,
        p,
        xi_roots,
        spurious,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStructure {
    /// Largest slope, `None` when the determinant has a single term.
    pub mu_max: Option<f64>,
    /// Segments with positive slope (logarithmic strips).
    pub log_segments: Vec<Segment>,
    /// Whether a horizontal part exists.
    pub neutral: bool,
    pub diagram: DistributionDiagram,
}

/// Distribution diagram of the determinant in `ζ` (with `k = iζ`). Negative
/// slopes would put infinitely many zeros in the upper half-plane and are
/// rejected.
pub fn classify_ksh(f: &ExpSum) -> Result<GraphStructure, QGraphError> {
    if f.is_zero() {
        return Err(QGraphError::SingleTerm);
    }
    let d = f.to_zeta_exppoly();
    let diagram = build_diagram(&d).expect("nonempty");
    if let Some(s) = diagram.segments.iter().find(|s| s.mu < -1e-12) {
        return Err(QGraphError::AdvancedSegment(s.mu));
    }
    let log_segments: Vec<Segment> = diagram
        .segments
        .iter()
        .filter(|s| s.mu > 1e-12)
        .cloned()
        .collect();
    Ok(GraphStructure {
        mu_max: diagram.segments.iter().map(|s| s.mu).reduce(f64::max),
        neutral: diagram.segments.iter().any(|s| s.mu.abs() <= 1e-12),
        log_segments,
        diagram,
    })
}

/// Numeric `det A(k)` as an analytic function.
pub struct GraphDet {
    layout: GraphLayout,
}

impl GraphDet {
    pub fn new(graph: &GraphSpec) -> Result<Self, QGraphError> {
        Ok(GraphDet {
            layout: graph.layout()?,
        })
    }
}

impl AnalyticFunction for GraphDet {
    fn eval(&self, k: Complex64) -> Scaled {
        Scaled::from_complex(self.layout.numeric_det(k))
    }
}

/// Removes zeros within [`ORIGIN_PUNCTURE`] of `k = 0`.
pub fn puncture_origin(mut res: ResonanceMultiset) -> ResonanceMultiset {
    res.zeros.retain(|z| z.value.norm() > ORIGIN_PUNCTURE);
    res
}

/// Zeros of the numeric `det A(k)` in `rect`, origin removed.
pub fn graph_resonances(
    graph: &GraphSpec,
    rect: &SearchRect,
    opts: &RootOptions,
) -> Result<ResonanceMultiset, QGraphError> {
    let f = GraphDet::new(graph)?;
    Ok(puncture_origin(find_zeros(&f, rect, opts)?))
}
