//! Zeros of analytic functions in rectangles: winding numbers by phase
//! continuation, recursive subdivision and Newton refinement.

use crate::complex_util::{Scaled, I};
use crate::exppoly::ExpPoly;
use crate::polynomial::{Polynomial, Root};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

pub const MAX_DEPTH: usize = 40;
pub const MAX_NEWTON_ITERS: usize = 100;
const SPLIT_FRACTIONS: [f64; 5] = [0.5, 0.5123, 0.4829, 0.5297, 0.4659];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("function vanishes on or near the boundary of {0:?} after {1} attempts")]
    BoundaryZero(SearchRect, usize),
    #[error("winding number {0} is not close to an integer")]
    WindingNotInteger(f64),
    #[error("lost zero: expected total multiplicity {expected}, found {found}")]
    LostZero { expected: usize, found: usize },
    #[error("Newton iteration diverged, last iterate {last}")]
    Diverged { last: Complex64 },
    #[error("non-finite function value at {0}")]
    NonFinite(Complex64),
    #[error("rectangle must have positive finite half-widths")]
    InvalidRect,
}

/// Something that can be evaluated anywhere in the plane from many threads.
pub trait AnalyticFunction: Sync {
    fn eval(&self, z: Complex64) -> Scaled;

    /// `f′(z)`, if available in closed form.
    fn derivative(&self, _z: Complex64) -> Option<Scaled> {
        None
    }
}

/// Wraps a plain closure.
pub struct FnAnalytic<F> {
    f: F,
}

pub fn from_fn<F: Fn(Complex64) -> Complex64 + Sync>(f: F) -> FnAnalytic<F> {
    FnAnalytic { f }
}

impl<F: Fn(Complex64) -> Complex64 + Sync> AnalyticFunction for FnAnalytic<F> {
    fn eval(&self, z: Complex64) -> Scaled {
        Scaled::from_complex((self.f)(z))
    }
}

/// Wraps a closure and its derivative.
pub struct FnAnalyticD<F, G> {
    f: F,
    df: G,
}

pub fn from_fn_with_derivative<F, G>(f: F, df: G) -> FnAnalyticD<F, G>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    G: Fn(Complex64) -> Complex64 + Sync,
{
    FnAnalyticD { f, df }
}

impl<F, G> AnalyticFunction for FnAnalyticD<F, G>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    G: Fn(Complex64) -> Complex64 + Sync,
{
    fn eval(&self, z: Complex64) -> Scaled {
        Scaled::from_complex((self.f)(z))
    }

    fn derivative(&self, z: Complex64) -> Option<Scaled> {
        Some(Scaled::from_complex((self.df)(z)))
    }
}

impl AnalyticFunction for Polynomial {
    fn eval(&self, z: Complex64) -> Scaled {
        Scaled::from_complex(Polynomial::eval(self, z))
    }

    fn derivative(&self, z: Complex64) -> Option<Scaled> {
        Some(Scaled::from_complex(Polynomial::derivative(self).eval(z)))
    }
}

/// An exponential polynomial with its derivative, evaluated in its own variable.
pub struct ExpPolyFn {
    d: ExpPoly,
    dd: ExpPoly,
}

impl ExpPolyFn {
    pub fn new(d: &ExpPoly) -> Self {
        ExpPolyFn {
            d: d.clone(),
            dd: d.derivative(),
        }
    }
}

impl AnalyticFunction for ExpPolyFn {
    fn eval(&self, z: Complex64) -> Scaled {
        self.d.eval_scaled(z)
    }

    fn derivative(&self, z: Complex64) -> Option<Scaled> {
        Some(self.dd.eval_scaled(z))
    }
}

/// `k ↦ D(−ik)`: an exponential polynomial in `ζ` viewed in the `k`-plane.
pub struct KPlaneExpPoly {
    inner: ExpPolyFn,
}

impl KPlaneExpPoly {
    pub fn new(d: &ExpPoly) -> Self {
        KPlaneExpPoly {
            inner: ExpPolyFn::new(d),
        }
    }
}

impl AnalyticFunction for KPlaneExpPoly {
    fn eval(&self, k: Complex64) -> Scaled {
        self.inner.eval(-I * k)
    }

    fn derivative(&self, k: Complex64) -> Option<Scaled> {
        self.inner
            .derivative(-I * k)
            .map(|s| s.mul(&Scaled::from_complex(-I)))
    }
}

/// Axis-aligned rectangle `center ± (hw, hh)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRect {
    pub center: Complex64,
    pub half_widths: [f64; 2],
}

impl SearchRect {
    pub fn new(center: Complex64, hw: f64, hh: f64) -> Result<Self, RootError> {
        if !(hw > 0.0 && hh > 0.0 && hw.is_finite() && hh.is_finite())
            || !(center.re.is_finite() && center.im.is_finite())
        {
            return Err(RootError::InvalidRect);
        }
        Ok(SearchRect {
            center,
            half_widths: [hw, hh],
        })
    }

    /// `[x0, x1] × [y0, y1]`.
    pub fn from_bounds(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self, RootError> {
        Self::new(
            Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)),
            0.5 * (x1 - x0),
            0.5 * (y1 - y0),
        )
    }

    pub fn x0(&self) -> f64 {
        self.center.re - self.half_widths[0]
    }
    pub fn x1(&self) -> f64 {
        self.center.re + self.half_widths[0]
    }
    pub fn y0(&self) -> f64 {
        self.center.im - self.half_widths[1]
    }
    pub fn y1(&self) -> f64 {
        self.center.im + self.half_widths[1]
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.half_widths[0].hypot(self.half_widths[1])
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0() && z.re <= self.x1() && z.im >= self.y0() && z.im <= self.y1()
    }

    /// Same center, half-widths scaled by `factor`.
    pub fn inflated(&self, factor: f64) -> SearchRect {
        SearchRect {
            center: self.center,
            half_widths: [self.half_widths[0] * factor, self.half_widths[1] * factor],
        }
    }

    /// Counter-clockwise corners starting at the lower left.
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x0(), self.y0()),
            Complex64::new(self.x1(), self.y0()),
            Complex64::new(self.x1(), self.y1()),
            Complex64::new(self.x0(), self.y1()),
        ]
    }

    /// Four children split at relative position `frac` along both axes,
    /// in the order lower-left, lower-right, upper-left, upper-right.
    fn split(&self, frac: f64) -> [SearchRect; 4] {
        let xm = self.x0() + frac * (self.x1() - self.x0());
        let ym = self.y0() + frac * (self.y1() - self.y0());
        let r = |x0: f64, x1: f64, y0: f64, y1: f64| SearchRect {
            center: Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)),
            half_widths: [0.5 * (x1 - x0), 0.5 * (y1 - y0)],
        };
        [
            r(self.x0(), xm, self.y0(), ym),
            r(xm, self.x1(), self.y0(), ym),
            r(self.x0(), xm, ym, self.y1()),
            r(xm, self.x1(), ym, self.y1()),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootOptions {
    /// Absolute clustering and convergence tolerance.
    pub tol: f64,
    /// Minimum boundary samples per rectangle edge.
    pub min_edge_samples: usize,
    /// Initial boundary samples per unit length.
    pub samples_per_unit: f64,
    /// Half-width of the box used to confirm a cluster, relative to `max(1, |z|)`.
    pub cluster_radius: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            tol: 1e-9,
            min_edge_samples: 16,
            samples_per_unit: 4.0,
            cluster_radius: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceMultiset {
    pub zeros: Vec<Root>,
    /// The rectangle actually searched (possibly slightly inflated).
    pub region: SearchRect,
    /// Largest final Newton step relative to `max(1, |z|)`.
    pub residual_bound: f64,
}

impl ResonanceMultiset {
    pub fn total_multiplicity(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re,im,multiplicity")?;
        for z in &self.zeros {
            writeln!(w, "{},{},{}", z.value.re, z.value.im, z.multiplicity)?;
        }
        Ok(())
    }
}

fn phase_step(a: &Scaled, b: &Scaled) -> f64 {
    let r = b.mantissa * a.mantissa.conj();
    r.im.atan2(r.re)
}

fn checked_eval<F: AnalyticFunction + ?Sized>(f: &F, z: Complex64) -> Result<Scaled, RootError> {
    let v = f.eval(z);
    if !v.is_finite() {
        return Err(RootError::NonFinite(z));
    }
    Ok(v)
}

/// A boundary sample: position, value and `|f/f′|` when the derivative is known.
#[derive(Clone, Copy)]
struct Sample {
    z: Complex64,
    f: Scaled,
    reach: f64,
}

fn sample<F: AnalyticFunction + ?Sized>(f: &F, z: Complex64) -> Result<Sample, RootError> {
    let v = checked_eval(f, z)?;
    let reach = match f.derivative(z) {
        Some(d) if d.is_finite() && !d.is_zero() => (v.ln_norm() - d.ln_norm()).exp(),
        _ => f64::INFINITY,
    };
    Ok(Sample { z, f: v, reach })
}

/// Phase change along `[a, b]`. Bisects until every step is below π/2 and,
/// when `f′` is available, shorter than half of `|f/f′|` at both ends; the
/// latter catches zeros hugging the edge whose 2π swing would alias.
fn edge_phase<F: AnalyticFunction + ?Sized>(
    f: &F,
    a: Sample,
    b: Sample,
    depth: usize,
    rect: &SearchRect,
) -> Result<f64, RootError> {
    if a.f.is_zero() || b.f.is_zero() {
        return Err(RootError::BoundaryZero(*rect, 1));
    }
    let d = phase_step(&a.f, &b.f);
    if d.abs() < PI / 2.0 && (b.z - a.z).norm() <= 0.5 * a.reach.min(b.reach) {
        return Ok(d);
    }
    if depth >= MAX_DEPTH {
        return Err(RootError::BoundaryZero(*rect, 1));
    }
    let m = sample(f, 0.5 * (a.z + b.z))?;
    Ok(edge_phase(f, a, m, depth + 1, rect)? + edge_phase(f, m, b, depth + 1, rect)?)
}

/// Winding number of `f` along the boundary of `rect`, without retries.
pub fn winding_number<F: AnalyticFunction + ?Sized>(
    f: &F,
    rect: &SearchRect,
    opts: &RootOptions,
) -> Result<usize, RootError> {
    let corners = rect.corners();
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let len = (b - a).norm();
        let n = opts
            .min_edge_samples
            .max((len * opts.samples_per_unit).ceil() as usize);
        let mut prev = sample(f, a)?;
        for s in 1..=n {
            let next = sample(f, a + (b - a) * (s as f64 / n as f64))?;
            total += edge_phase(f, prev, next, 0, rect)?;
            prev = next;
        }
    }
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 0.1 || r < 0.0 {
        return Err(RootError::WindingNotInteger(w));
    }
    Ok(r as usize)
}

/// Number of zeros in `rect` with multiplicity. If the boundary passes
/// through a zero the rectangle is inflated by `1 + 1e−6·j`, `j = 1..5`.
pub fn count_zeros<F: AnalyticFunction + ?Sized>(
    f: &F,
    rect: &SearchRect,
    opts: &RootOptions,
) -> Result<usize, RootError> {
    count_with_retry(f, rect, opts).map(|(n, _)| n)
}

fn count_with_retry<F: AnalyticFunction + ?Sized>(
    f: &F,
    rect: &SearchRect,
    opts: &RootOptions,
) -> Result<(usize, SearchRect), RootError> {
    let mut last = None;
    for j in 0..=5 {
        let r = rect.inflated(1.0 + 1e-6 * j as f64);
        match winding_number(f, &r, opts) {
            Ok(n) => return Ok((n, r)),
            Err(RootError::BoundaryZero(..)) | Err(RootError::WindingNotInteger(_)) => {
                last = Some(r)
            }
            Err(e) => return Err(e),
        }
    }
    Err(RootError::BoundaryZero(last.unwrap_or(*rect), 6))
}

/// Newton step `f/f′` (secant-style central difference when no derivative).
fn newton_step<F: AnalyticFunction + ?Sized>(
    f: &F,
    z: Complex64,
    fz: &Scaled,
) -> Option<Complex64> {
    let step = match f.derivative(z) {
        Some(d) if !d.is_zero() => fz.ratio(&d),
        _ => {
            let h = 1e-7 * z.norm().max(1.0);
            let fp = f.eval(z + h);
            let fm = f.eval(z - h);
            let denom = fp.ratio(fz) - fm.ratio(fz);
            if denom.norm() == 0.0 {
                return None;
            }
            Complex64::new(2.0 * h, 0.0) / denom
        }
    };
    (step.re.is_finite() && step.im.is_finite()).then_some(step)
}

/// Newton iteration for a zero of multiplicity `m` (modified Newton `z − m f/f′`),
/// with step halving when the residual grows. Returns the zero and the last
/// relative step.
pub fn refine_multiple<F: AnalyticFunction + ?Sized>(
    f: &F,
    seed: Complex64,
    m: usize,
    tol: f64,
) -> Result<(Complex64, f64), RootError> {
    let mut z = seed;
    let mut fz = f.eval(z);
    for _ in 0..MAX_NEWTON_ITERS {
        if fz.is_zero() {
            return Ok((z, 0.0));
        }
        let Some(step) = newton_step(f, z, &fz) else {
            return Err(RootError::Diverged { last: z });
        };
        let mut step = step * m as f64;
        let mut next = z - step;
        let mut fnext = f.eval(next);
        let mut halvings = 0;
        while (!fnext.is_finite() || fnext.ln_norm() > fz.ln_norm()) && halvings < 12 {
            step *= 0.5;
            next = z - step;
            fnext = f.eval(next);
            halvings += 1;
        }
        let rel = step.norm() / z.norm().max(1.0);
        z = next;
        fz = fnext;
        if rel <= tol {
            return Ok((z, rel));
        }
    }
    Err(RootError::Diverged { last: z })
}

/// Newton refinement of a simple zero from `seed`.
pub fn refine<F: AnalyticFunction + ?Sized>(
    f: &F,
    seed: Complex64,
    tol: f64,
) -> Result<Complex64, RootError> {
    refine_multiple(f, seed, 1, tol).map(|(z, _)| z)
}

struct Found {
    value: Complex64,
    multiplicity: usize,
    residual: f64,
}

fn solve_cell<F: AnalyticFunction + ?Sized>(
    f: &F,
    cell: SearchRect,
    count: usize,
    depth: usize,
    opts: &RootOptions,
) -> Result<Vec<Found>, RootError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if cell.diameter() < opts.tol || depth >= MAX_DEPTH {
        return Ok(vec![Found {
            value: cell.center,
            multiplicity: count,
            residual: cell.diameter() / cell.center.norm().max(1.0),
        }]);
    }
    if let Ok((z, rel)) = refine_multiple(f, cell.center, count, opts.tol) {
        if cell.contains(z) && (count == 1 || cluster_confirmed(f, z, count, opts)) {
            return Ok(vec![Found {
                value: z,
                multiplicity: count,
                residual: rel,
            }]);
        }
    }

    for frac in SPLIT_FRACTIONS {
        let children = cell.split(frac);
        let counts: Result<Vec<usize>, RootError> = children
            .par_iter()
            .map(|c| winding_number(f, c, opts))
            .collect();
        let Ok(counts) = counts else { continue };
        if counts.iter().sum::<usize>() != count {
            continue;
        }
        let parts: Vec<Result<Vec<Found>, RootError>> = children
            .par_iter()
            .zip(counts.par_iter())
            .map(|(c, &n)| solve_cell(f, *c, n, depth + 1, opts))
            .collect();
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
        }
        return Ok(out);
    }
    Err(RootError::LostZero {
        expected: count,
        found: 0,
    })
}

fn cluster_confirmed<F: AnalyticFunction + ?Sized>(
    f: &F,
    z: Complex64,
    count: usize,
    opts: &RootOptions,
) -> bool {
    let r = (opts.cluster_radius * z.norm().max(1.0)).max(10.0 * opts.tol);
    (0..3).any(|j| {
        let h = r * (1.0 + 0.37 * j as f64);
        SearchRect::new(z, h, h)
            .ok()
            .and_then(|b| winding_number(f, &b, opts).ok())
            == Some(count)
    })
}

/// All zeros in `rect` with multiplicity; the total always equals the
/// winding number of the (possibly inflated) rectangle.
pub fn find_zeros<F: AnalyticFunction + ?Sized>(
    f: &F,
    rect: &SearchRect,
    opts: &RootOptions,
) -> Result<ResonanceMultiset, RootError> {
    let (count, region) = count_with_retry(f, rect, opts)?;
    let found = solve_cell(f, region, count, 0, opts)?;
    let residual_bound = found.iter().map(|z| z.residual).fold(0.0, f64::max);
    let values: Vec<Complex64> = found
        .iter()
        .flat_map(|z| std::iter::repeat_n(z.value, z.multiplicity))
        .collect();
    let mut zeros = merge_close(&found, opts.tol);
    zeros.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    let total: usize = zeros.iter().map(|z| z.multiplicity).sum();
    if total != count || values.len() != count {
        return Err(RootError::LostZero {
            expected: count,
            found: total,
        });
    }
    Ok(ResonanceMultiset {
        zeros,
        region,
        residual_bound,
    })
}

fn merge_close(found: &[Found], tol: f64) -> Vec<Root> {
    let mut out: Vec<Root> = Vec::new();
    for z in found {
        match out
            .iter_mut()
            .find(|r| (r.value - z.value).norm() <= tol * z.value.norm().max(1.0))
        {
            Some(r) => r.multiplicity += z.multiplicity,
            None => out.push(Root {
                value: z.value,
                multiplicity: z.multiplicity,
            }),
        }
    }
    out
}

/// For self-adjoint problems (real strengths, unitary vertex conditions,
/// layered media) the zero set is invariant under `k ↦ −k̄`. Given zeros
/// from a search over `Re k ≥ −δ`, keeps those near the imaginary axis once,
/// mirrors those with `Re k > tol` and drops the rest.
pub fn mirror_symmetric(res: &ResonanceMultiset, tol: f64) -> Vec<Root> {
    let mut out = Vec::new();
    for z in &res.zeros {
        if z.value.re.abs() <= tol {
            out.push(*z);
        } else if z.value.re > tol {
            out.push(*z);
            out.push(Root {
                value: -z.value.conj(),
                multiplicity: z.multiplicity,
            });
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
