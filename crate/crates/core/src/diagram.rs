//! Distribution diagrams: the upper concave envelope of the points
//! `(β_j, deg P_{β_j})`, the slopes `μ_n`, segment polynomials `q_n` and
//! their roots, and the asymptotic resonance chains they generate.

use crate::complex_util::{ln0, I};
use crate::exppoly::ExpPoly;
use crate::geometry::SizeProfile;
use crate::polynomial::{Polynomial, Root};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Vertical slack for deciding that a point lies on a hull line.
pub const HULL_TOL: f64 = 1e-7;
/// Clustering tolerance for roots of `q_n`.
pub const OMEGA_CLUSTER_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagramError {
    #[error("exponential polynomial has no terms")]
    Empty,
    #[error("diagram has no segments")]
    NoSegments,
    #[error(
        "r_narrow mismatch: size characterization gives {by_size}, last segment gives {diagram}"
    )]
    NarrowMismatch { by_size: usize, diagram: usize },
    #[error("size profile has N = {sizes}, diagram has N = {diagram}")]
    SizeMismatch { sizes: usize, diagram: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub beta: f64,
    pub degree: usize,
    /// Leading coefficient of `P_β`.
    pub leading: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub left: DiagramPoint,
    pub right: DiagramPoint,
    pub mu: f64,
    /// `|m_{n,ν_n} − m_{n,1}|`, the degree of `q_n`.
    pub r: usize,
    /// Indices into [`DistributionDiagram::points`] lying on the segment.
    pub incident: Vec<usize>,
    pub q: Polynomial,
    pub omegas: Vec<Root>,
}

impl Segment {
    /// Roots of `q_n` repeated according to multiplicity.
    pub fn omega_list(&self) -> Vec<Complex64> {
        self.omegas
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
            .collect()
    }

    /// Horizontal extent `β_{n,ν_n} − β_{n,1}`.
    pub fn width(&self) -> f64 {
        self.right.beta - self.left.beta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionDiagram {
    pub points: Vec<DiagramPoint>,
    pub segments: Vec<Segment>,
}

impl DistributionDiagram {
    /// Number of segments `M`.
    pub fn m(&self) -> usize {
        self.segments.len()
    }

    /// Height of the polyline at `beta`, if `beta` is within its extent.
    pub fn height_at(&self, beta: f64) -> Option<f64> {
        let tol = 1e-9 * (1.0 + self.extent());
        self.segments.iter().find_map(|s| {
            (beta >= s.left.beta - tol && beta <= s.right.beta + tol)
                .then_some(s.left.degree as f64 + s.mu * (beta - s.left.beta))
        })
    }

    fn extent(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.beta - a.beta,
            _ => 0.0,
        }
    }
}

/// Upper concave envelope of the `(β, deg)` points of `d`.
pub fn build_diagram(d: &ExpPoly) -> Result<DistributionDiagram, DiagramError> {
    if d.is_empty() {
        return Err(DiagramError::Empty);
    }
    let points: Vec<DiagramPoint> = d
        .terms()
        .iter()
        .map(|t| DiagramPoint {
            beta: t.frequency,
            degree: t.poly.degree().unwrap_or(0),
            leading: t.poly.leading().unwrap_or_default(),
        })
        .collect();

    let below = |a: &DiagramPoint, b: &DiagramPoint, p: &DiagramPoint| {
        // is b on or below the chord a → p
        let h = a.degree as f64
            + (p.degree as f64 - a.degree as f64) * (b.beta - a.beta) / (p.beta - a.beta);
        b.degree as f64 <= h + HULL_TOL
    };
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        while hull.len() >= 2
            && below(
                &points[hull[hull.len() - 2]],
                &points[hull[hull.len() - 1]],
                &points[i],
            )
        {
            hull.pop();
        }
        hull.push(i);
    }

    let segments = hull
        .windows(2)
        .map(|w| make_segment(&points, w[0], w[1]))
        .collect();
    Ok(DistributionDiagram { points, segments })
}

fn make_segment(points: &[DiagramPoint], l: usize, r: usize) -> Segment {
    let (a, b) = (points[l], points[r]);
    let mu = (b.degree as f64 - a.degree as f64) / (b.beta - a.beta);
    let incident: Vec<usize> = (l..=r)
        .filter(|&i| {
            let h = a.degree as f64 + mu * (points[i].beta - a.beta);
            (points[i].degree as f64 - h).abs() <= HULL_TOL
        })
        .collect();
    let base = a.degree.min(b.degree);
    let r_n = a.degree.abs_diff(b.degree);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); r_n + 1];
    for &i in &incident {
        coeffs[points[i].degree - base] += points[i].leading;
    }
    let q = Polynomial::new(coeffs);
    let omegas = q.roots(OMEGA_CLUSTER_TOL);
    Segment {
        left: a,
        right: b,
        mu,
        r: r_n,
        incident,
        q,
        omegas,
    }
}

/// Chain orientation in `±2πt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainSign {
    Plus,
    Minus,
}

impl ChainSign {
    pub fn value(self) -> f64 {
        match self {
            ChainSign::Plus => 1.0,
            ChainSign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            ChainSign::Plus => '+',
            ChainSign::Minus => '-',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedSequence {
    pub mu: f64,
    pub omega: Complex64,
    pub sign: ChainSign,
    /// `(t, k_t)` pairs in increasing `t`.
    pub terms: Vec<(u64, Complex64)>,
}

/// Leading-order chain
/// `k/μ = ±2πt − i Ln t ∓ π/2 − i Ln(2πμ) + i Ln ω`.
pub fn predicted_k(mu: f64, omega: Complex64, sign: ChainSign, t: u64) -> Complex64 {
    let s = sign.value();
    let t = t as f64;
    let inner =
        s * 2.0 * PI * t - I * t.ln() - s * PI / 2.0 - I * (2.0 * PI * mu).ln() + I * ln0(omega);
    mu * inner
}

pub fn predicted_resonances(
    mu: f64,
    omega: Complex64,
    sign: ChainSign,
    t_range: std::ops::RangeInclusive<u64>,
) -> PredictedSequence {
    PredictedSequence {
        mu,
        omega,
        sign,
        terms: t_range
            .filter(|&t| t > 0)
            .map(|t| (t, predicted_k(mu, omega, sign, t)))
            .collect(),
    }
}

/// A chain label: segment `n`, distinct root `j` (both 1-based) and sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainId {
    pub n: usize,
    pub j: usize,
    pub sign: ChainSign,
}

/// Every chain of every positive-slope segment, with root multiplicity.
pub fn all_predicted(
    diag: &DistributionDiagram,
    t_range: std::ops::RangeInclusive<u64>,
) -> Vec<(ChainId, usize, PredictedSequence)> {
    let mut out = Vec::new();
    for (n, seg) in diag.segments.iter().enumerate() {
        if seg.mu <= 0.0 {
            continue;
        }
        for (j, root) in seg.omegas.iter().enumerate() {
            for sign in [ChainSign::Plus, ChainSign::Minus] {
                let id = ChainId {
                    n: n + 1,
                    j: j + 1,
                    sign,
                };
                out.push((
                    id,
                    root.multiplicity,
                    predicted_resonances(seg.mu, root.value, sign, t_range.clone()),
                ));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityJump {
    pub mu: f64,
    pub height: f64,
}

/// Jumps `(β_{n,ν_n} − β_{n,1})/π = r_n/(πμ_n)` of the log-strip counting density.
pub fn density_jumps(diag: &DistributionDiagram) -> Vec<DensityJump> {
    diag.segments
        .iter()
        .filter(|s| s.mu > 0.0)
        .map(|s| DensityJump {
            mu: s.mu,
            height: s.width() / PI,
        })
        .collect()
}

/// Narrow-resonance multiplicity: the largest `m` with `Size_m = m·diam` whose
/// point `(−Size_m, N−m)` lies on the diagram, checked against `r_M`.
pub fn r_narrow(diag: &DistributionDiagram, sizes: &SizeProfile) -> Result<usize, DiagramError> {
    let last = diag.segments.last().ok_or(DiagramError::NoSegments)?;
    let n = sizes.n();
    let top = diag.points.last().map(|p| p.degree).unwrap_or(0);
    if top != n {
        return Err(DiagramError::SizeMismatch {
            sizes: n,
            diagram: top,
        });
    }
    let diam = sizes.diameter;
    let tol = 1e-8 * diam;
    let by_size = (2..=n)
        .filter(|&m| {
            (sizes.size(m) - m as f64 * diam).abs() <= tol
                && diag
                    .height_at(-sizes.size(m))
                    .is_some_and(|h| (h - (n - m) as f64).abs() <= HULL_TOL)
        })
        .max()
        .unwrap_or(0);
    if by_size != last.r {
        return Err(DiagramError::NarrowMismatch {
            by_size,
            diagram: last.r,
        });
    }
    Ok(by_size)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeTermCheck {
    pub m: usize,
    pub size: f64,
    /// Degree of `P_{−Size_m}`, `None` if that frequency is absent.
    pub degree: Option<usize>,
    pub expected_degree: usize,
}

impl SizeTermCheck {
    pub fn holds(&self) -> bool {
        self.degree == Some(self.expected_degree)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub a3: bool,
    pub a4: bool,
    pub a5: bool,
    pub detail: Vec<SizeTermCheck>,
}

/// For `m ∈ {0, 2, …, N}`: is `−Size_m` a frequency with `deg P = N − m`.
/// (A3) asks this for `m ≥ 3`, (A5) for all listed `m`.
pub fn check_a3_a5(d: &ExpPoly, sizes: &SizeProfile) -> StructureReport {
    let n = sizes.n();
    let tol = 1e-8 * sizes.diameter;
    let detail: Vec<SizeTermCheck> = (0..=n)
        .filter(|&m| m != 1)
        .map(|m| SizeTermCheck {
            m,
            size: sizes.size(m),
            degree: d.poly_at(-sizes.size(m), tol).and_then(|p| p.degree()),
            expected_degree: n - m,
        })
        .collect();
    StructureReport {
        a3: detail.iter().filter(|c| c.m >= 3).all(|c| c.holds()),
        a4: crate::geometry::check_a4(sizes),
        a5: detail.iter().all(|c| c.holds()),
        detail,
    }
}

/// Logarithmic strip `|Re(ζ + μ Ln ζ)| ≤ w` at `ζ = −ik`.
pub fn strip_membership(k: Complex64, mu: f64, w: f64) -> bool {
    strip_offset(k, mu).is_some_and(|v| v.abs() <= w)
}

/// `Re(ζ + μ Ln ζ)` at `ζ = −ik`; `None` at `ζ = 0` unless `μ = 0`.
pub fn strip_offset(k: Complex64, mu: f64) -> Option<f64> {
    let zeta = -I * k;
    if zeta.norm() == 0.0 {
        return (mu == 0.0).then_some(0.0);
    }
    Some((zeta + mu * ln0(zeta)).re)
}

/// Smallest `w` whose strip contains every given point.
pub fn fit_strip_width(points: &[Complex64], mu: f64) -> f64 {
    points
        .iter()
        .filter_map(|&k| strip_offset(k, mu))
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_util::c;
    use crate::exppoly::build_characteristic_exppoly;
    use crate::geometry::{size_profile, PointConfig};

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

    fn case3() -> PointConfig {
        let h = (1.0f64 - 0.75f64 * 0.75).sqrt();
        cfg(vec![[0.0; 3], [0.75, h, 0.0], [1.5, 0.0, 0.0]])
    }

    fn line3() -> PointConfig {
        cfg(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    }

    fn tetrahedron() -> PointConfig {
        cfg(vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ])
    }

    fn diagram_of(pc: &PointConfig) -> DistributionDiagram {
        build_diagram(&build_characteristic_exppoly(pc).unwrap()).unwrap()
    }

    #[test]
    fn two_centers() {
        let d = 1.3;
        let diag = diagram_of(&cfg(vec![[0.0; 3], [d, 0.0, 0.0]]));
        assert_eq!(diag.m(), 1);
        let s = &diag.segments[0];
        assert!((s.mu - 1.0 / d).abs() < 1e-15);
        assert_eq!(s.r, 2);
        assert!((s.q.coeff(0) + 1.0 / (d * d)).norm() < 1e-14);
        assert_eq!(s.q.coeff(1), c(0.0, 0.0));
        assert_eq!(s.q.coeff(2), c(1.0, 0.0));
        let mut w: Vec<f64> = s.omega_list().iter().map(|z| z.re).collect();
        w.sort_by(f64::total_cmp);
        assert!((w[0] + 1.0 / d).abs() < 1e-12 && (w[1] - 1.0 / d).abs() < 1e-12);
    }

    #[test]
    fn case3_triangle() {
        let diag = diagram_of(&case3());
        assert_eq!(diag.m(), 2);
        assert!((diag.segments[0].mu - 2.0).abs() < 1e-12);
        assert_eq!(diag.segments[0].r, 1);
        assert!((diag.segments[1].mu - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(diag.segments[1].r, 2);
        let jumps = density_jumps(&diag);
        assert!((jumps[0].height - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((jumps[1].height - 3.0 / PI).abs() < 1e-12);
        let total: f64 = jumps.iter().map(|j| j.height).sum();
        assert!((total - 3.5 / PI).abs() < 1e-12);
        let rep = check_a3_a5(
            &build_characteristic_exppoly(&case3()).unwrap(),
            &size_profile(&case3()).unwrap(),
        );
        assert!(rep.a3 && rep.a4 && rep.a5);
    }

    #[test]
    fn equilateral_triangle() {
        let diag = diagram_of(&triangle());
        assert_eq!(diag.m(), 1);
        let s = &diag.segments[0];
        assert!((s.mu - 1.0).abs() < 1e-12);
        assert_eq!(s.r, 3);
        assert_eq!(s.incident.len(), 3);
        // q = 2 + 3ω − ω³ = −(ω − 2)(ω + 1)²
        let expect = Polynomial::from_real(&[2.0, 3.0, 0.0, -1.0]);
        for (a, b) in s.q.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
        let double = s.omegas.iter().find(|r| r.multiplicity == 2).unwrap();
        assert!((double.value + 1.0).norm() < 1e-6);
        assert!((density_jumps(&diag)[0].height - 3.0 / PI).abs() < 1e-12);
        assert_eq!(r_narrow(&diag, &size_profile(&triangle()).unwrap()), Ok(3));
    }

    #[test]
    fn collinear_fails_a3() {
        let pc = line3();
        let d = build_characteristic_exppoly(&pc).unwrap();
        let rep = check_a3_a5(&d, &size_profile(&pc).unwrap());
        assert!(!rep.a3);
        let diag = build_diagram(&d).unwrap();
        assert_eq!(diag.m(), 1);
        assert!((diag.segments[0].mu - 0.5).abs() < 1e-12);
        assert_eq!(diag.segments[0].r, 2);
    }

    #[test]
    fn tetrahedron_narrow() {
        let pc = tetrahedron();
        let diag = diagram_of(&pc);
        let r = r_narrow(&diag, &size_profile(&pc).unwrap()).unwrap();
        assert!(r >= 3);
        assert_eq!(r, 4);
        assert!((diag.segments.last().unwrap().mu - 1.0 / pc.diameter()).abs() < 1e-12);
    }

    #[test]
    fn single_term_has_no_segments() {
        let pc = cfg(vec![[0.0; 3]]);
        let diag = diagram_of(&pc);
        assert_eq!(diag.m(), 0);
        assert!(density_jumps(&diag).is_empty());
        assert_eq!(
            r_narrow(&diag, &size_profile(&pc).unwrap()),
            Err(DiagramError::NoSegments)
        );
        assert_eq!(build_diagram(&ExpPoly::default()), Err(DiagramError::Empty));
    }

    #[test]
    fn predicted_examples() {
        let k = predicted_k(1.0, c(1.0, 0.0), ChainSign::Plus, 1);
        let expect = c(2.0 * PI - PI / 2.0, -(2.0 * PI).ln());
        assert!((k - expect).norm() < 1e-14);

        let d = 1.7;
        let t = 5u64;
        let k = predicted_k(1.0 / d, c(1.0 / d, 0.0), ChainSign::Minus, t);
        let tf = t as f64;
        let expect = -2.0 * PI * tf / d - I * tf.ln() / d + PI / (2.0 * d)
            - I * (2.0 * PI / d).ln() / d
            + I * (1.0 / d).ln() / d;
        assert!((k - expect).norm() < 1e-13);

        // negative real ω takes Arg = +π
        let k_neg = predicted_k(1.0, c(-1.0, 0.0), ChainSign::Plus, 1);
        assert!((k_neg - (expect_plus_one() - PI)).norm() < 1e-14);
    }

    fn expect_plus_one() -> Complex64 {
        c(2.0 * PI - PI / 2.0, -(2.0 * PI).ln())
    }

    #[test]
    fn strip_examples() {
        let zeta = 50.0;
        let k = I * zeta;
        let w = zeta + zeta.ln();
        assert!(strip_membership(k, 1.0, w));
        assert!(!strip_membership(k, 1.0, w - 1e-6));
        assert!(strip_membership(c(1e6, 0.0), 0.0, 0.0));
    }

    #[test]
    fn predicted_points_stay_in_their_strip() {
        let seq = predicted_resonances(1.0, c(0.5, 0.2), ChainSign::Plus, 1..=200);
        let first: Vec<Complex64> = seq.terms[..10].iter().map(|p| p.1).collect();
        let w = fit_strip_width(&first, 1.0);
        for &(_, k) in &seq.terms[9..] {
            assert!(strip_membership(k, 1.0, w + 1e-9));
        }
    }

    #[test]
    fn json_has_segment_fields() {
        let diag = diagram_of(&case3());
        let v = serde_json::to_value(&diag).unwrap();
        assert!(v["points"].is_array());
        assert!(v["segments"][0]["mu"].is_number());
        assert_eq!(v["segments"][1]["r"], 2);
        assert!(v["segments"][1]["omegas"][0]["value"].is_array());
    }
}
