//! Dense complex polynomials, lowest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A polynomial `Σ c_d x^d`. The zero polynomial has an empty coefficient list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

/// A root together with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl Polynomial {
    /// Builds a polynomial, trimming exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// `c x^d`.
    pub fn monomial(c: Complex64, d: usize) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); d + 1];
        v[d] = c;
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    pub fn coeff(&self, d: usize) -> Complex64 {
        self.coeffs.get(d).copied().unwrap_or_default()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(d, &c)| c * d as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|d| self.coeff(d) + other.coeff(d)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `p(s · x)`.
    pub fn substitute_scaled(&self, s: Complex64) -> Self {
        let mut pow = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &c in &self.coeffs {
            out.push(c * pow);
            pow *= s;
        }
        Self::new(out)
    }

    /// Largest coefficient modulus (0 for the zero polynomial).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Roots via companion-matrix eigenvalues, one Newton polish step each,
    /// then clustering within `cluster_tol` (relative to `max(1, |root|)`).
    pub fn roots(&self, cluster_tol: f64) -> Vec<Root> {
        let Some(deg) = self.degree() else {
            return Vec::new();
        };
        if deg == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[deg];
        let raw: Vec<Complex64> = if deg == 1 {
            vec![-self.coeffs[0] / lead]
        } else {
            let mut m = DMatrix::<Complex64>::zeros(deg, deg);
            for i in 1..deg {
                m[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            for i in 0..deg {
                m[(i, deg - 1)] = -self.coeffs[i] / lead;
            }
            let ev = m
                .clone()
                .eigenvalues()
                .expect("complex Schur form is triangular");
            ev.iter().copied().collect()
        };
        cluster_roots(&raw, cluster_tol)
            .into_iter()
            .map(|r| {
                if r.multiplicity == 1 {
                    Root {
                        value: self.newton_polish(r.value),
                        multiplicity: 1,
                    }
                } else {
                    r
                }
            })
            .collect()
    }

    fn newton_polish(&self, x: Complex64) -> Complex64 {
        let d = self.derivative().eval(x);
        if d.norm() == 0.0 {
            return x;
        }
        let step = self.eval(x) / d;
        let y = x - step;
        if y.re.is_finite() && y.im.is_finite() && self.eval(y).norm() <= self.eval(x).norm() {
            y
        } else {
            x
        }
    }
}

/// Groups values closer than `tol·max(1,|z|)`; each cluster is replaced by its mean.
pub fn cluster_roots(values: &[Complex64], tol: f64) -> Vec<Root> {
    let mut sorted: Vec<Complex64> = values.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut used = vec![false; sorted.len()];
    let mut out = Vec::new();
    for i in 0..sorted.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![sorted[i]];
        // transitive closure over the cluster
        let mut k = 0;
        while k < members.len() {
            let anchor = members[k];
            for j in 0..sorted.len() {
                if !used[j] && (sorted[j] - anchor).norm() <= tol * anchor.norm().max(1.0) {
                    used[j] = true;
                    members.push(sorted[j]);
                }
            }
            k += 1;
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push(Root {
            value: mean,
            multiplicity: members.len(),
        });
    }
    out
}
