//! Zeros of the two-center determinant against a Lambert-W oracle.

use num_complex::Complex64;
use resonance_core::exppoly::build_characteristic_exppoly;
use resonance_core::geometry::PointConfig;
use resonance_core::rootfind::{count_zeros, find_zeros, KPlaneExpPoly, RootOptions, SearchRect};

/// Branch `j` of `W(x)` by Newton on `w e^w = x` from the asymptotic seed.
fn lambert_w(x: Complex64, j: i64) -> Complex64 {
    let l1 = x.ln() + Complex64::new(0.0, 2.0 * std::f64::consts::PI * j as f64);
    let mut w = if j == 0 {
        Complex64::new(0.5, 0.0)
    } else {
        l1 - l1.ln()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let step = f / (ew * (w + 1.0));
        w -= step;
        if step.norm() < 1e-15 * w.norm().max(1.0) {
            break;
        }
    }
    w
}

/// Zeros of `ζ² − e^{−2ζ}` in the k-plane: `ζ e^ζ = ±1`, `k = iζ`.
fn oracle_zeros(rect: &SearchRect) -> Vec<Complex64> {
    let mut out = Vec::new();
    for x in [1.0, -1.0] {
        for j in -40..=40 {
            let zeta = lambert_w(Complex64::new(x, 0.0), j);
            let k = Complex64::new(0.0, 1.0) * zeta;
            if rect.contains(k) && (zeta * zeta.exp() - x).norm() < 1e-9 {
                out.push(k);
            }
        }
    }
    out
}

#[test]
fn two_center_zeros_match_lambert_w() {
    let pc = PointConfig::with_zero_strengths(vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
    let d = build_characteristic_exppoly(&pc).unwrap();
    let f = KPlaneExpPoly::new(&d);
    let rect = SearchRect::from_bounds(1.0, 60.0, -6.0, 0.0).unwrap();
    let opts = RootOptions::default();
    let res = find_zeros(&f, &rect, &opts).unwrap();
    let oracle = oracle_zeros(&res.region);
    assert_eq!(res.total_multiplicity(), oracle.len());
    assert_eq!(count_zeros(&f, &rect, &opts).unwrap(), oracle.len());
    for k in &oracle {
        let best = res
            .zeros
            .iter()
            .map(|z| (z.value - k).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-8, "oracle zero {k} missed by {best}");
    }
}
