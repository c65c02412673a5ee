//! Multilevel asymptotic structure of resonance sets.
//!
//! Three Hamiltonian classes are covered: Schrödinger operators with point
//! interactions in R^3, noncompact quantum graphs, and 1-D photonic crystals.
//! In every case resonances are zeros of an exponential polynomial; this crate
//! builds that polynomial, reads off the distribution diagram (slopes `μ_n`,
//! multiplicities `r_n`, segment roots `ω_{n,j}`), locates the zeros
//! numerically and compares the two.
//!
//! Variable conventions: the public resonance variable is `k`. Point-interaction
//! exponential polynomials live in `ζ = -i k` (so `k = i ζ`), which puts the
//! logarithmic chains at `Re ζ → -∞` with all frequencies `≤ 0`.

pub mod complex_util;
pub mod crystal;
pub mod density;
pub mod diagram;
pub mod exppoly;
pub mod geometry;
pub mod linalg;
pub mod polynomial;
pub mod qgraph;
pub mod rootfind;

pub use num_complex::Complex64;
