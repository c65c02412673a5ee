//! Point configurations in R^3 and their metric invariants: distances,
//! diameter, m-sizes and the structural predicates used by the diagram
//! classifiers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest N accepted by the brute-force permutation searches.
pub const MAX_BRUTE_FORCE_N: usize = 9;

/// Default relative tolerance (times the diameter) for distance equalities.
pub const DEFAULT_DISTANCE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("configuration has no centers")]
    Empty,
    #[error("expected {expected} strengths, got {got}")]
    StrengthCount { expected: usize, got: usize },
    #[error("centers {0} and {1} coincide (distance {2:e})")]
    DuplicateCenters(usize, usize, f64),
    #[error("center {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("m = {m} is outside [0, {n}]")]
    OrderOutOfRange { m: usize, n: usize },
    #[error("N = {0} exceeds the brute-force cap {MAX_BRUTE_FORCE_N}")]
    TooManyCenters(usize),
}

/// N distinct interaction centers `y_j` with complex strengths `a_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    centers: Vec<[f64; 3]>,
    strengths: Vec<Complex64>,
}

impl PointConfig {
    pub fn new(centers: Vec<[f64; 3]>, strengths: Vec<Complex64>) -> Result<Self, GeometryError> {
        let cfg = PointConfig { centers, strengths };
        cfg.validate()?;
        Ok(cfg)
    }

    /// All strengths set to zero.
    pub fn with_zero_strengths(centers: Vec<[f64; 3]>) -> Result<Self, GeometryError> {
        let n = centers.len();
        Self::new(centers, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.centers.len();
        if n == 0 {
            return Err(GeometryError::Empty);
        }
        if self.strengths.len() != n {
            return Err(GeometryError::StrengthCount {
                expected: n,
                got: self.strengths.len(),
            });
        }
        for (i, y) in self.centers.iter().enumerate() {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::NonFinite(i));
            }
        }
        let scale = self
            .centers
            .iter()
            .flat_map(|y| y.iter())
            .fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(&self.centers[i], &self.centers[j]);
                if d <= 1e-12 * scale {
                    return Err(GeometryError::DuplicateCenters(i, j, d));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    pub fn strengths(&self) -> &[Complex64] {
        &self.strengths
    }

    /// True when every strength is real (self-adjoint Hamiltonian).
    pub fn is_self_adjoint(&self) -> bool {
        self.strengths.iter().all(|a| a.im == 0.0)
    }

    /// `ℓ_{i,j} = |y_i − y_j|`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(&self.centers[i], &self.centers[j])
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                d = d.max(self.distance(i, j));
            }
        }
        d
    }

    /// Smallest pairwise distance (`+∞` for a single center).
    pub fn min_separation(&self) -> f64 {
        let n = self.len();
        let mut d = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                d = d.min(self.distance(i, j));
            }
        }
        d
    }

    /// Applies `y ↦ R y + t` to every center.
    pub fn transformed(&self, rotation: &[[f64; 3]; 3], translation: [f64; 3]) -> Self {
        let centers = self
            .centers
            .iter()
            .map(|y| {
                let mut out = translation;
                for (r, o) in rotation.iter().zip(out.iter_mut()) {
                    *o += r[0] * y[0] + r[1] * y[1] + r[2] * y[2];
                }
                out
            })
            .collect();
        PointConfig {
            centers,
            strengths: self.strengths.clone(),
        }
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn distance_matrix(config: &PointConfig) -> DMatrix<f64> {
    let n = config.len();
    DMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { 0.0 } else { config.distance(i, j) },
    )
}

/// A permutation `σ` of `{0, …, N−1}` stored as its image list `σ(j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    /// Number of non-fixed points.
    pub fn moved(&self) -> usize {
        self.0.iter().enumerate().filter(|&(j, &s)| j != s).count()
    }

    /// Nontrivial cycles, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || self.0[start] == start {
                continue;
            }
            let mut cyc = Vec::new();
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                cyc.push(j);
                j = self.0[j];
            }
            out.push(cyc);
        }
        out
    }

    /// `Σ_j |y_j − y_{σ(j)}|`.
    pub fn displacement(&self, config: &PointConfig) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|&(j, &s)| j != s)
            .map(|(j, &s)| config.distance(j, s))
            .sum()
    }
}

/// Cycle notation with 1-based labels, e.g. `[1 2][3 4]`; identity prints `id`.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "id");
        }
        for cyc in cycles {
            let labels: Vec<String> = cyc.iter().map(|j| (j + 1).to_string()).collect();
            write!(f, "[{}]", labels.join(" "))?;
        }
        Ok(())
    }
}

/// Visits every permutation of `0..n` (Heap's algorithm) with its sign.
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize], i8)) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign: i8 = 1;
    visit(&p, sign);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            sign = -sign;
            visit(&p, sign);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// An m-size together with a permutation attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeValue {
    pub m: usize,
    pub value: f64,
    /// `None` for m = 1, whose size is defined as the diameter.
    pub witness: Option<Permutation>,
}

/// `Size_0, …, Size_N` of a configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeProfile {
    pub sizes: Vec<f64>,
    pub diameter: f64,
    pub witnesses: Vec<Option<Permutation>>,
}

impl SizeProfile {
    pub fn n(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn size(&self, m: usize) -> f64 {
        self.sizes[m]
    }
}

/// All m-sizes by one sweep over `S_N`.
pub fn size_profile(config: &PointConfig) -> Result<SizeProfile, GeometryError> {
    let n = config.len();
    if n > MAX_BRUTE_FORCE_N {
        return Err(GeometryError::TooManyCenters(n));
    }
    let dm = distance_matrix(config);
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    let mut wit: Vec<Option<Vec<usize>>> = vec![None; n + 1];
    for_each_permutation(n, |p, _| {
        let mut moved = 0;
        let mut sum = 0.0;
        for (j, &s) in p.iter().enumerate() {
            if s != j {
                moved += 1;
                sum += dm[(j, s)];
            }
        }
        if sum > best[moved] {
            best[moved] = sum;
            wit[moved] = Some(p.to_vec());
        }
    });
    let diameter = config.diameter();
    let mut sizes = vec![0.0; n + 1];
    let mut witnesses = vec![None; n + 1];
    for m in 0..=n {
        if m == 1 {
            sizes[1] = diameter;
        } else {
            sizes[m] = best[m];
            witnesses[m] = wit[m].take().map(Permutation);
        }
    }
    Ok(SizeProfile {
        sizes,
        diameter,
        witnesses,
    })
}

/// `Size_m`: the maximal displacement over permutations with exactly `m`
/// non-fixed points; `Size_1 := diam Y`, `Size_0 = 0`.
pub fn size_m(config: &PointConfig, m: usize) -> Result<SizeValue, GeometryError> {
    let n = config.len();
    if m > n {
        return Err(GeometryError::OrderOutOfRange { m, n });
    }
    let profile = size_profile(config)?;
    Ok(SizeValue {
        m,
        value: profile.sizes[m],
        witness: profile.witnesses[m].clone(),
    })
}

/// Every center lies within `tol·diam` of the line through a diameter pair.
pub fn is_collinear(config: &PointConfig, tol: f64) -> bool {
    let n = config.len();
    if n <= 2 {
        return true;
    }
    let (mut a, mut b, mut d) = (0, 1, -1.0);
    for i in 0..n {
        for j in i + 1..n {
            let l = config.distance(i, j);
            if l > d {
                (a, b, d) = (i, j, l);
            }
        }
    }
    let p = config.centers[a];
    let q = config.centers[b];
    let u = [(q[0] - p[0]) / d, (q[1] - p[1]) / d, (q[2] - p[2]) / d];
    config.centers.iter().all(|y| {
        let v = [y[0] - p[0], y[1] - p[1], y[2] - p[2]];
        let t = v[0] * u[0] + v[1] * u[1] + v[2] * u[2];
        let perp = [v[0] - t * u[0], v[1] - t * u[1], v[2] - t * u[2]];
        let h = (perp[0].powi(2) + perp[1].powi(2) + perp[2].powi(2)).sqrt();
        h <= tol * d
    })
}

/// Increasing and strictly concave m-sizes:
/// `Size_m − Size_{m−1} > Size_{m+1} − Size_m > 0` for `2 ≤ m ≤ N−1`.
pub fn check_a4(sizes: &SizeProfile) -> bool {
    let n = sizes.n();
    let s = &sizes.sizes;
    let tol = DEFAULT_DISTANCE_TOL * sizes.diameter;
    (2..n).all(|m| {
        let left = s[m] - s[m - 1];
        let right = s[m + 1] - s[m];
        left > right + tol && right > tol
    })
}

/// Whether four centers (in the given order) form the rhombus-like shape
/// `ℓ12 = ℓ23 = ℓ34 = ℓ41 = diam > ℓ24 ≥ ℓ13` whose top frequency cancels.
fn is_cancelling_quad(config: &PointConfig, q: [usize; 4], diam: f64, tol: f64) -> bool {
    let l = |i: usize, j: usize| config.distance(q[i], q[j]);
    let eq = |x: f64| (x - diam).abs() <= tol;
    eq(l(0, 1))
        && eq(l(1, 2))
        && eq(l(2, 3))
        && eq(l(3, 0))
        && l(1, 3) < diam - tol
        && l(1, 3) >= l(0, 2) - tol
}

fn quad_can_cancel(config: &PointConfig, quad: [usize; 4], diam: f64, tol: f64) -> bool {
    let mut found = false;
    for_each_permutation(4, |p, _| {
        if !found {
            let q = [quad[p[0]], quad[p[1]], quad[p[2]], quad[p[3]]];
            found = is_cancelling_quad(config, q, diam, tol);
        }
    });
    found
}

/// Two disjoint diameter-realizing pairs whose four centers cannot be
/// reordered into the cancelling quad shape. `false` for N < 4.
pub fn check_a6(config: &PointConfig, rel_tol: f64) -> bool {
    let n = config.len();
    if n < 4 {
        return false;
    }
    let diam = config.diameter();
    let tol = rel_tol * diam;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| (config.distance(i, j) - diam).abs() <= tol)
        .collect();
    for (x, &(a, b)) in pairs.iter().enumerate() {
        for &(c, d) in &pairs[x + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if !quad_can_cancel(config, [a, b, c, d], diam, tol) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn cfg(centers: Vec<[f64; 3]>) -> PointConfig {
        PointConfig::with_zero_strengths(centers).unwrap()
    }

    fn triangle() -> PointConfig {
        cfg(vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, 3f64.sqrt() / 2.0, 0.0],
        ])
    }

    #[test]
    fn distance_matrix_examples() {
        let two = cfg(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        let m = distance_matrix(&two);
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(1, 0)], 1.0);
        assert_eq!(m[(0, 0)], 0.0);

        let t = distance_matrix(&triangle());
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((t[(i, j)] - 1.0).abs() < 1e-15);
                }
            }
        }
        let line = cfg(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        assert_eq!(distance_matrix(&line)[(0, 2)], 2.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert_eq!(
            PointConfig::with_zero_strengths(vec![]),
            Err(GeometryError::Empty)
        );
        assert!(matches!(
            PointConfig::with_zero_strengths(vec![[0.0; 3], [0.0; 3]]),
            Err(GeometryError::DuplicateCenters(0, 1, _))
        ));
        assert!(matches!(
            PointConfig::new(vec![[0.0; 3]], vec![]),
            Err(GeometryError::StrengthCount { .. })
        ));
    }

    #[test]
    fn size_examples() {
        let two = cfg(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        assert_eq!(size_m(&two, 2).unwrap().value, 2.0);
        assert!((size_m(&triangle(), 3).unwrap().value - 3.0).abs() < 1e-14);
        let square = cfg(vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ]);
        let s4 = size_m(&square, 4).unwrap();
        assert!((s4.value - 4.0 * 2f64.sqrt()).abs() < 1e-14);
        let w = s4.witness.unwrap();
        assert_eq!(w.moved(), 4);
        assert_eq!(w.displacement(&square), s4.value);
        assert_eq!(w.to_string(), "[1 3][2 4]");
    }

    #[test]
    fn size_errors() {
        let two = cfg(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        assert_eq!(
            size_m(&two, 3),
            Err(GeometryError::OrderOutOfRange { m: 3, n: 2 })
        );
        let ten = cfg((0..10).map(|i| [i as f64, 0.0, 0.0]).collect());
        assert_eq!(size_m(&ten, 2), Err(GeometryError::TooManyCenters(10)));
        assert_eq!(size_m(&two, 0).unwrap().value, 0.0);
        assert_eq!(size_m(&two, 1).unwrap().value, 1.0);
    }

    #[test]
    fn collinearity() {
        let line = cfg(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        assert!(is_collinear(&line, 1e-9));
        assert!(!is_collinear(&triangle(), 1e-9));
        let nearly = cfg(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 1e-12, 0.0]]);
        assert!(is_collinear(&nearly, 1e-9));
    }

    #[test]
    fn a4_examples() {
        let two = cfg(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        assert!(check_a4(&size_profile(&two).unwrap()));
        assert!(!check_a4(&size_profile(&triangle()).unwrap()));
        // ℓ12 = ℓ23 = 1, ℓ13 = 1.5
        let h = (1.0f64 - 0.75f64 * 0.75).sqrt();
        let case3 = cfg(vec![[0.0; 3], [0.75, h, 0.0], [1.5, 0.0, 0.0]]);
        let prof = size_profile(&case3).unwrap();
        let expect = [0.0, 1.5, 3.0, 3.5];
        for (a, b) in prof.sizes.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{:?}", prof.sizes);
        }
        assert!(check_a4(&prof));
    }

    #[test]
    fn a6_examples() {
        let tet = cfg(vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]);
        assert!(check_a6(&tet, 1e-9));
        let quad = skew_quad();
        assert!(!check_a6(&quad, 1e-9));
        let generic = cfg(vec![
            [0.1, 0.2, 0.3],
            [1.3, -0.4, 0.2],
            [0.5, 0.9, -0.7],
            [-0.6, 0.1, 0.8],
        ]);
        assert!(!check_a6(&generic, 1e-9));
    }

    /// Four points with ℓ12 = ℓ23 = ℓ34 = ℓ41 = 1 > ℓ24 ≥ ℓ13: a skew
    /// quadrilateral obtained by folding a rhombus along its short diagonal.
    pub(crate) fn skew_quad() -> PointConfig {
        // y1, y3 on the x-axis at ±p; y2, y4 at (0, ±q cosθ, q sinθ)
        let p = 0.4;
        let q = (1.0f64 - p * p).sqrt();
        let theta = 1.05f64;
        cfg(vec![
            [p, 0.0, 0.0],
            [0.0, q * theta.cos(), q * theta.sin()],
            [-p, 0.0, 0.0],
            [0.0, -q * theta.cos(), q * theta.sin()],
        ])
    }

    #[test]
    fn skew_quad_shape() {
        let q = skew_quad();
        let d = q.diameter();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(q.distance(1, 3) < 1.0 && q.distance(1, 3) >= q.distance(0, 2));
    }

    #[test]
    fn cycle_notation() {
        assert_eq!(Permutation(vec![1, 0, 2]).to_string(), "[1 2]");
        assert_eq!(Permutation::identity(3).to_string(), "id");
        assert_eq!(Permutation(vec![1, 2, 0]).to_string(), "[1 2 3]");
    }

    #[test]
    fn heap_enumerates_all_with_signs() {
        let mut count = 0;
        let mut sum = 0i32;
        for_each_permutation(4, |p, s| {
            count += 1;
            sum += s as i32;
            // parity from cycle structure
            let perm = Permutation(p.to_vec());
            let parity: usize = perm.cycles().iter().map(|c| c.len() - 1).sum();
            assert_eq!(if parity.is_multiple_of(2) { 1 } else { -1 }, s);
        });
        assert_eq!(count, 24);
        assert_eq!(sum, 0);
    }
}
