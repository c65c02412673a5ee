//! Layered one-dimensional photonic crystals: transfer matrices, the
//! characteristic exponential sum and its commensurable lattice.

use crate::complex_util::{Scaled, I};
use crate::polynomial::{Polynomial, Root};
use crate::qgraph::{
    commensurable_reduce, puncture_origin, CommensurableForm, ExpSum, QGraphError,
};
use crate::rootfind::{
    find_zeros, AnalyticFunction, ResonanceMultiset, RootError, RootOptions, SearchRect,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_LAYERS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrystalError {
    #[error("breakpoints must be finite and strictly increasing")]
    BadBreakpoints,
    #[error("permittivity {index} is {value}, must be positive")]
    BadPermittivity { index: usize, value: f64 },
    #[error("{breakpoints} breakpoints need {expected} permittivities, got {got}")]
    CountMismatch {
        breakpoints: usize,
        expected: usize,
        got: usize,
    },
    #[error("{0} layers exceed the cap {MAX_LAYERS}")]
    TooManyLayers(usize),
    #[error("k = 0 is excluded")]
    ZeroK,
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    Graph(#[from] QGraphError),
}

/// Breakpoints `x_0 < … < x_N` and permittivities `ε_0, …, ε_{N+1}`, the
/// first and last belonging to the outer half-lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    pub breakpoints: Vec<f64>,
    pub permittivities: Vec<f64>,
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<(), CrystalError> {
        let n = self.breakpoints.len();
        if n == 0
            || self.breakpoints.iter().any(|x| !x.is_finite())
            || self.breakpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(CrystalError::BadBreakpoints);
        }
        if self.permittivities.len() != n + 1 {
            return Err(CrystalError::CountMismatch {
                breakpoints: n,
                expected: n + 1,
                got: self.permittivities.len(),
            });
        }
        for (index, &value) in self.permittivities.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CrystalError::BadPermittivity { index, value });
            }
        }
        Ok(())
    }

    pub fn layer_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `(thickness, refractive index)` of each inner layer.
    fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.permittivities[1..])
            .map(|(w, &eps)| (w[1] - w[0], eps.sqrt()))
    }

    /// `(x_j − x_{j−1})·√ε_j` for each layer.
    pub fn optical_lengths(&self) -> Vec<f64> {
        self.layers().map(|(l, n)| l * n).collect()
    }

    fn n_left(&self) -> f64 {
        self.permittivities[0].sqrt()
    }

    fn n_right(&self) -> f64 {
        self.permittivities.last().unwrap().sqrt()
    }
}

/// Maps `(f, f′/(ik√ε))` just left of `x_0` to the same pair just right of
/// `x_N`: interface jumps `diag(1, n_j/n_{j+1})` between propagation steps.
pub fn transfer_matrix(
    crystal: &CrystalSpec,
    k: Complex64,
) -> Result<[[Complex64; 2]; 2], CrystalError> {
    crystal.validate()?;
    if k.norm() == 0.0 {
        return Err(CrystalError::ZeroK);
    }
    Ok(transfer_unchecked(crystal, k))
}

fn interface(from: f64, to: f64) -> [[Complex64; 2]; 2] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, Complex64::new(from / to, 0.0)]]
}

fn transfer_unchecked(crystal: &CrystalSpec, k: Complex64) -> [[Complex64; 2]; 2] {
    let mut n_prev = crystal.n_left();
    let mut t = interface(1.0, 1.0);
    for (l, n) in crystal.layers() {
        let th = k * n * l;
        let (c, s) = (th.cos(), th.sin());
        t = mat_mul(&interface(n_prev, n), &t);
        t = mat_mul(&[[c, I * s], [I * s, c]], &t);
        n_prev = n;
    }
    mat_mul(&interface(n_prev, crystal.n_right()), &t)
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Outgoing-wave condition `[−1, 1] · T(k) · (1, −1)ᵀ`.
pub fn f_oracle(crystal: &CrystalSpec, k: Complex64) -> Complex64 {
    let t = transfer_unchecked(crystal, k);
    let v0 = t[0][0] - t[0][1];
    let v1 = t[1][0] - t[1][1];
    v1 - v0
}

/// The same condition as an exponential sum with real constant coefficients.
pub fn crystal_exppoly(crystal: &CrystalSpec) -> Result<ExpSum, CrystalError> {
    crystal.validate()?;
    if crystal.layer_count() > MAX_LAYERS {
        return Err(CrystalError::TooManyLayers(crystal.layer_count()));
    }
    let cst = |x: f64| ExpSum::constant(Complex64::new(x, 0.0));
    let mul2 = |a: &[[ExpSum; 2]; 2], b: &[[ExpSum; 2]; 2]| {
        let mut out = [
            [ExpSum::zero(), ExpSum::zero()],
            [ExpSum::zero(), ExpSum::zero()],
        ];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
            }
        }
        out
    };
    let jump = |from: f64, to: f64| [[cst(1.0), ExpSum::zero()], [ExpSum::zero(), cst(from / to)]];
    let mut n_prev = crystal.n_left();
    let mut t = jump(1.0, 1.0);
    for (l, n) in crystal.layers() {
        let p = n * l;
        let plus = ExpSum::monomial(p, Polynomial::from_real(&[0.5]));
        // cos θ and i sin θ
        let c = plus.add(&ExpSum::monomial(-p, Polynomial::from_real(&[0.5])));
        let is = plus.add(&ExpSum::monomial(-p, Polynomial::from_real(&[-0.5])));
        t = mul2(&jump(n_prev, n), &t);
        t = mul2(&[[c.clone(), is.clone()], [is, c]], &t);
        n_prev = n;
    }
    let t = mul2(&jump(n_prev, crystal.n_right()), &t);
    let minus = Complex64::new(-1.0, 0.0);
    let v0 = t[0][0].add(&t[0][1].scale(minus));
    let v1 = t[1][0].add(&t[1][1].scale(minus));
    Ok(v1.add(&v0.scale(minus)))
}

/// Transfer-matrix condition as an analytic function.
pub struct CrystalOracle<'a> {
    crystal: &'a CrystalSpec,
}

impl<'a> CrystalOracle<'a> {
    pub fn new(crystal: &'a CrystalSpec) -> Result<Self, CrystalError> {
        crystal.validate()?;
        Ok(CrystalOracle { crystal })
    }
}

impl AnalyticFunction for CrystalOracle<'_> {
    fn eval(&self, k: Complex64) -> Scaled {
        Scaled::from_complex(f_oracle(self.crystal, k))
    }
}

/// An exponential sum with its derivative, evaluated in `k`.
pub struct ExpSumFn {
    f: ExpSum,
    df: ExpSum,
}

impl ExpSumFn {
    pub fn new(f: &ExpSum) -> Self {
        let raw: Vec<(f64, Polynomial)> = f
            .terms()
            .iter()
            .map(|t| {
                let p = t.poly.scale(I * t.frequency).add(&t.poly.derivative());
                (t.frequency, p)
            })
            .collect();
        ExpSumFn {
            f: f.clone(),
            df: ExpSum::from_raw(&raw).0,
        }
    }
}

impl AnalyticFunction for ExpSumFn {
    fn eval(&self, k: Complex64) -> Scaled {
        self.f.eval_scaled(k)
    }

    fn derivative(&self, k: Complex64) -> Option<Scaled> {
        Some(self.df.eval_scaled(k))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalReport {
    pub resonances: ResonanceMultiset,
    /// Present when the optical lengths are commensurable.
    pub form: Option<CommensurableForm>,
    pub lattice: Vec<Root>,
    /// `min |ξ| > 1`, i.e. no real resonances.
    pub no_real_resonances: Option<bool>,
}

/// Zeros of the transfer-matrix condition in `rect` (origin removed), with
/// the exact lattice when the optical lengths are commensurable.
pub fn crystal_resonances(
    crystal: &CrystalSpec,
    rect: &SearchRect,
    opts: &RootOptions,
) -> Result<CrystalReport, CrystalError> {
    let oracle = CrystalOracle::new(crystal)?;
    let resonances = puncture_origin(find_zeros(&oracle, rect, opts)?);
    let f = crystal_exppoly(crystal)?;
    let form = match commensurable_reduce(&f, 1e-9) {
        Ok(form) => Some(form),
        Err(
            QGraphError::Incommensurable(_)
            | QGraphError::LatticeDegree(_)
            | QGraphError::SingleTerm,
        ) => None,
        Err(e) => return Err(e.into()),
    };
    let lattice = form
        .as_ref()
        .map(|f| f.lattice_in(&resonances.region))
        .unwrap_or_default();
    let no_real_resonances = form
        .as_ref()
        .map(|f| f.min_modulus().is_none_or(|m| m > 1.0 + 1e-9) && f.spurious.is_empty());
    Ok(CrystalReport {
        resonances,
        form,
        lattice,
        no_real_resonances,
    })
}
