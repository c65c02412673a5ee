//! Exponential polynomials `D(ζ) = Σ_j P_{β_j}(ζ) e^{β_j ζ}` in canonical form,
//! and the characteristic determinant of a point-interaction configuration.

use crate::complex_util::{Scaled, I};
use crate::geometry::{for_each_permutation, GeometryError, PointConfig, MAX_BRUTE_FORCE_N};
use crate::linalg;
use crate::polynomial::Polynomial;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Exponent beyond which `e^x` is treated as overflowing.
pub const EXP_OVERFLOW: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpPolyError {
    #[error("N = {0} exceeds the permutation-expansion cap {MAX_BRUTE_FORCE_N}")]
    TooLarge(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("exponential polynomial has no terms")]
    Empty,
    #[error("maximal frequency is {0}, expected 0")]
    NotNormalized(f64),
}

/// One exp-monomial `P(ζ) e^{βζ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub frequency: f64,
    #[serde(rename = "coeffs")]
    pub poly: Polynomial,
}

/// Canonical exponential polynomial: strictly increasing frequencies, no zero
/// polynomial parts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpPoly {
    terms: Vec<ExpTerm>,
}

/// Merge tolerances for [`canonicalize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonTolerances {
    /// Absolute frequency merge distance.
    pub freq_tol: f64,
    /// Relative coefficient drop threshold.
    pub coeff_tol: f64,
}

impl CanonTolerances {
    /// Defaults scaled to a configuration diameter.
    pub fn for_diameter(diam: f64) -> Self {
        CanonTolerances {
            freq_tol: 1e-9 * diam.max(f64::MIN_POSITIVE),
            coeff_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedDegree {
    pub frequency: f64,
    pub degree: usize,
    /// `|merged coefficient| / max |contribution|` before dropping.
    pub relative: f64,
}

/// What canonicalization removed, and what it kept only narrowly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CanonReport {
    /// Candidate frequencies whose polynomial part vanished entirely.
    pub cancelled_frequencies: Vec<f64>,
    pub dropped_degrees: Vec<DroppedDegree>,
    /// Kept coefficients within a factor 1000 of the drop threshold.
    pub borderline: Vec<DroppedDegree>,
}

impl CanonReport {
    pub fn is_cancelled(&self, frequency: f64, tol: f64) -> bool {
        self.cancelled_frequencies
            .iter()
            .any(|&f| (f - frequency).abs() <= tol)
    }
}

struct RawTerm {
    frequency: f64,
    poly: Polynomial,
    /// Per-degree magnitude of this contribution, for relative dropping.
    scales: Vec<f64>,
}

/// Merges raw exp-monomials into canonical form.
pub fn canonicalize(raw: &[(f64, Polynomial)], tol: CanonTolerances) -> (ExpPoly, CanonReport) {
    let raw = raw
        .iter()
        .map(|(f, p)| RawTerm {
            frequency: *f,
            scales: p.coeffs().iter().map(|c| c.norm()).collect(),
            poly: p.clone(),
        })
        .collect();
    canonicalize_raw(raw, tol)
}

fn canonicalize_raw(mut raw: Vec<RawTerm>, tol: CanonTolerances) -> (ExpPoly, CanonReport) {
    raw.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let mut report = CanonReport::default();
    let mut terms = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        let start = raw[i].frequency;
        let mut j = i;
        let mut sum: Vec<Complex64> = Vec::new();
        let mut scale: Vec<f64> = Vec::new();
        while j < raw.len() && raw[j].frequency - start <= tol.freq_tol {
            let t = &raw[j];
            let len = t.poly.coeffs().len().max(t.scales.len());
            if sum.len() < len {
                sum.resize(len, Complex64::new(0.0, 0.0));
                scale.resize(len, 0.0);
            }
            for (d, c) in t.poly.coeffs().iter().enumerate() {
                sum[d] += c;
            }
            for (d, s) in t.scales.iter().enumerate() {
                scale[d] = scale[d].max(*s);
            }
            j += 1;
        }
        let mut any_contribution = false;
        for d in 0..sum.len() {
            if scale[d] == 0.0 {
                sum[d] = Complex64::new(0.0, 0.0);
                continue;
            }
            any_contribution = true;
            let rel = sum[d].norm() / scale[d];
            if rel <= tol.coeff_tol {
                report.dropped_degrees.push(DroppedDegree {
                    frequency: start,
                    degree: d,
                    relative: rel,
                });
                sum[d] = Complex64::new(0.0, 0.0);
            } else if rel <= 1e3 * tol.coeff_tol {
                report.borderline.push(DroppedDegree {
                    frequency: start,
                    degree: d,
                    relative: rel,
                });
            }
        }
        let poly = Polynomial::new(sum);
        if poly.is_zero() {
            if any_contribution {
                report.cancelled_frequencies.push(start);
            }
        } else {
            terms.push(ExpTerm {
                frequency: start,
                poly,
            });
        }
        i = j;
    }
    (ExpPoly { terms }, report)
}

impl ExpPoly {
    /// Builds from terms already known to be canonical (checked in debug builds).
    pub fn from_canonical_terms(terms: Vec<ExpTerm>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].frequency < w[1].frequency));
        debug_assert!(terms.iter().all(|t| !t.poly.is_zero()));
        ExpPoly { terms }
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<ExpTerm> {
        self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.frequency).collect()
    }

    pub fn max_frequency(&self) -> Option<f64> {
        self.terms.last().map(|t| t.frequency)
    }

    pub fn min_frequency(&self) -> Option<f64> {
        self.terms.first().map(|t| t.frequency)
    }

    /// The polynomial `P_b`, if `b` is a frequency within `tol`.
    pub fn poly_at(&self, frequency: f64, tol: f64) -> Option<&Polynomial> {
        self.terms
            .iter()
            .find(|t| (t.frequency - frequency).abs() <= tol)
            .map(|t| &t.poly)
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        self.eval_scaled(zeta).to_complex()
    }

    /// Value with the largest exponential factor pulled out.
    pub fn eval_scaled(&self, zeta: Complex64) -> Scaled {
        if self.terms.is_empty() {
            return Scaled::zero();
        }
        let shift = self
            .terms
            .iter()
            .map(|t| t.frequency * zeta.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let e = (t.frequency * zeta - shift).exp();
            acc += t.poly.eval(zeta) * e;
        }
        Scaled::new(acc, shift)
    }

    /// Value plus an overflow flag; saturates at `f64::MAX` in modulus.
    pub fn eval_flagged(&self, zeta: Complex64) -> (Complex64, bool) {
        let s = self.eval_scaled(zeta);
        let overflow = self
            .terms
            .iter()
            .any(|t| (t.frequency * zeta).norm() > EXP_OVERFLOW)
            || s.ln_norm() > f64::MAX.ln();
        if s.ln_norm() > f64::MAX.ln() {
            (s.mantissa * f64::MAX, overflow)
        } else {
            (s.to_complex(), overflow)
        }
    }

    /// `(β, P) ↦ (β, βP + P′)`.
    pub fn derivative(&self) -> ExpPoly {
        let raw: Vec<(f64, Polynomial)> = self
            .terms
            .iter()
            .map(|t| {
                let p = t
                    .poly
                    .scale(Complex64::new(t.frequency, 0.0))
                    .add(&t.poly.derivative());
                (t.frequency, p)
            })
            .collect();
        let tol = CanonTolerances {
            freq_tol: 0.0,
            coeff_tol: 0.0,
        };
        canonicalize(&raw, tol).0
    }

    /// `e^{sζ} D(ζ)`.
    pub fn shifted(&self, s: f64) -> ExpPoly {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    frequency: t.frequency + s,
                    poly: t.poly.clone(),
                })
                .collect(),
        }
    }

    /// Frequency span `−β_0` of a polynomial normalized to maximal frequency 0.
    pub fn effective_size(&self) -> Result<f64, ExpPolyError> {
        let top = self.max_frequency().ok_or(ExpPolyError::Empty)?;
        if top.abs() > 1e-12 * (1.0 + self.min_frequency().unwrap().abs()) {
            return Err(ExpPolyError::NotNormalized(top));
        }
        Ok(-self.min_frequency().unwrap())
    }
}

/// The characteristic exponential polynomial plus the canonicalization log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub exppoly: ExpPoly,
    pub report: CanonReport,
    pub tolerances: CanonTolerances,
}

/// `D(ζ) = (−4π)^N det Γ(iζ)` via the permutation expansion with default tolerances.
pub fn build_characteristic_exppoly(config: &PointConfig) -> Result<ExpPoly, ExpPolyError> {
    Ok(build_characteristic(config, None)?.exppoly)
}

/// Permutation expansion
/// `D(ζ) = Σ_σ ε_σ K_1(σ) e^{α(σ)ζ} Π_{σ(j)=j} (−ζ − A_j)`, `A_j = 4π a_j`.
pub fn build_characteristic(
    config: &PointConfig,
    tol: Option<CanonTolerances>,
) -> Result<Characteristic, ExpPolyError> {
    config.validate()?;
    let n = config.len();
    if n > MAX_BRUTE_FORCE_N {
        return Err(ExpPolyError::TooLarge(n));
    }
    let tol = tol.unwrap_or_else(|| CanonTolerances::for_diameter(config.diameter()));
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| config.distance(i, j)).collect())
        .collect();

    // (fixed-point mask, α bits) → (α, Σ ε K_1, max |K_1|)
    let mut groups: HashMap<(u32, u64), (f64, f64, f64)> = HashMap::new();
    for_each_permutation(n, |p, sign| {
        let mut mask = 0u32;
        let mut alpha = 0.0;
        let mut k1 = 1.0;
        for (j, &s) in p.iter().enumerate() {
            if s == j {
                mask |= 1 << j;
            } else {
                alpha -= dist[j][s];
                k1 /= dist[j][s];
            }
        }
        let e = groups
            .entry((mask, alpha.to_bits()))
            .or_insert((alpha, 0.0, 0.0));
        e.1 += sign as f64 * k1;
        e.2 = e.2.max(k1);
    });

    let mut keys: Vec<(u32, u64)> = groups.keys().copied().collect();
    keys.sort_by(|a, b| groups[a].0.total_cmp(&groups[b].0).then(a.0.cmp(&b.0)));
    let mut fixed_polys: HashMap<u32, Polynomial> = HashMap::new();
    let strengths = config.strengths();
    let mut raw = Vec::with_capacity(keys.len());
    for key in keys {
        let (alpha, coeff, mag) = groups[&key];
        let base = fixed_polys
            .entry(key.0)
            .or_insert_with(|| {
                (0..n)
                    .filter(|j| key.0 & (1 << j) != 0)
                    .fold(Polynomial::one(), |acc, j| {
                        let a = 4.0 * PI * strengths[j];
                        acc.mul(&Polynomial::new(vec![-a, Complex64::new(-1.0, 0.0)]))
                    })
            })
            .clone();
        let scales = base.coeffs().iter().map(|c| c.norm() * mag).collect();
        raw.push(RawTerm {
            frequency: alpha,
            poly: base.scale(Complex64::new(coeff, 0.0)),
            scales,
        });
    }
    let (exppoly, report) = canonicalize_raw(raw, tol);
    Ok(Characteristic {
        exppoly,
        report,
        tolerances: tol,
    })
}

/// `Γ_{a,Y}(z)` in row-major order.
pub fn gamma_matrix(config: &PointConfig, z: Complex64) -> Vec<Complex64> {
    let n = config.len();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = if i == j {
                config.strengths()[i] - I * z / (4.0 * PI)
            } else {
                let l = config.distance(i, j);
                -(I * z * l).exp() / (4.0 * PI * l)
            };
        }
    }
    m
}

/// Numeric `det Γ_{a,Y}(z)` by LU with partial pivoting.
pub fn det_gamma(config: &PointConfig, z: Complex64) -> Complex64 {
    linalg::det(gamma_matrix(config, z), config.len())
}
