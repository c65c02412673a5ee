use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonance_core::crystal::{
    crystal_exppoly, crystal_resonances, f_oracle, CrystalSpec, ExpSumFn,
};
use resonance_core::qgraph::commensurable_reduce;
use resonance_core::rootfind::{find_zeros, RootOptions, SearchRect};

fn random_crystal(rng: &mut ChaCha8Rng) -> CrystalSpec {
    let layers = rng.gen_range(1..=3);
    let mut breakpoints = vec![0.0];
    for _ in 0..layers {
        let last = *breakpoints.last().unwrap();
        breakpoints.push(last + rng.gen_range(0.3..1.2));
    }
    let mut permittivities = vec![rng.gen_range(1.0..2.0)];
    for _ in 0..layers {
        permittivities.push(rng.gen_range(3.0..8.0));
    }
    permittivities.push(rng.gen_range(1.0..2.0));
    CrystalSpec {
        breakpoints,
        permittivities,
    }
}

#[test]
fn exppoly_and_transfer_zero_sets_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rect = SearchRect::from_bounds(0.25, 12.0, -4.0, 0.5).unwrap();
    let opts = RootOptions::default();
    for _ in 0..5 {
        let cr = random_crystal(&mut rng);
        let oracle = crystal_resonances(&cr, &rect, &opts).unwrap().resonances;
        let f = crystal_exppoly(&cr).unwrap();
        let sym = find_zeros(&ExpSumFn::new(&f), &rect, &opts).unwrap();
        assert_eq!(
            oracle.total_multiplicity(),
            sym.total_multiplicity(),
            "{cr:?}"
        );
        assert!(!oracle.zeros.is_empty());
        for z in &oracle.zeros {
            assert!(z.value.im < 0.0, "zero on or above the axis: {:?}", z.value);
            let near = sym
                .zeros
                .iter()
                .map(|w| (w.value - z.value).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(near < 1e-7, "{cr:?} {z:?}");
        }
    }
}

#[test]
fn ratio_has_constant_modulus() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let cr = random_crystal(&mut rng);
        let f = crystal_exppoly(&cr).unwrap();
        for t in f.terms() {
            assert_eq!(t.poly.degree(), Some(0));
            assert_eq!(t.poly.coeff(0).im, 0.0);
            assert!(t.poly.coeff(0).re != 0.0);
        }
        for _ in 0..10 {
            let k = Complex64::new(rng.gen_range(0.1..30.0), rng.gen_range(-3.0..1.0));
            let r = f.eval(k) / f_oracle(&cr, k);
            assert!((r - 1.0).norm() < 1e-9);
        }
    }
}

#[test]
fn no_zeros_in_closed_upper_half_plane() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let rect = SearchRect::from_bounds(-10.0, 10.0, 0.0, 3.0).unwrap();
    for _ in 0..8 {
        let cr = random_crystal(&mut rng);
        let f = crystal_exppoly(&cr).unwrap();
        let inflated = SearchRect::from_bounds(-10.0, 10.0, -1e-3, 3.0).unwrap();
        let zeros = find_zeros(&ExpSumFn::new(&f), &inflated, &RootOptions::default()).unwrap();
        assert!(
            zeros.zeros.iter().all(|z| !rect.contains(z.value)),
            "{cr:?}"
        );
    }
}

#[test]
fn twin_slabs_are_commensurable() {
    let cr = CrystalSpec {
        breakpoints: vec![0.0, 1.0, 2.0, 3.0],
        permittivities: vec![1.0, 4.0, 1.0, 4.0, 1.0],
    };
    let f = crystal_exppoly(&cr).unwrap();
    let form = commensurable_reduce(&f, 1e-9).unwrap();
    assert!((form.beta - 2.0).abs() < 1e-12);
    assert!(form.min_modulus().unwrap() > 1.0);
    let rect = SearchRect::from_bounds(0.3, 15.0, -3.0, 0.5).unwrap();
    let rep = crystal_resonances(&cr, &rect, &RootOptions::default()).unwrap();
    assert_eq!(rep.no_real_resonances, Some(true));
    assert_eq!(rep.lattice.len(), rep.resonances.zeros.len());
    for z in &rep.resonances.zeros {
        let d = rep
            .lattice
            .iter()
            .map(|l| (l.value - z.value).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-7);
    }
}

#[test]
fn rational_three_layers_on_lattice() {
    // optical lengths 1, 1, 1/2
    let cr = CrystalSpec {
        breakpoints: vec![0.0, 0.5, 1.5, 1.75],
        permittivities: vec![1.0, 4.0, 1.0, 4.0, 2.0],
    };
    let rect = SearchRect::from_bounds(0.3, 20.0, -3.0, 0.5).unwrap();
    let rep = crystal_resonances(&cr, &rect, &RootOptions::default()).unwrap();
    let form = rep.form.as_ref().unwrap();
    assert!((form.beta - 1.0).abs() < 1e-12);
    assert_eq!(form.degrees.last(), Some(&5));
    assert_eq!(rep.no_real_resonances, Some(true));
    let lattice_mult: usize = rep.lattice.iter().map(|r| r.multiplicity).sum();
    assert_eq!(lattice_mult, rep.resonances.total_multiplicity());
    for z in &rep.resonances.zeros {
        let d = rep
            .lattice
            .iter()
            .map(|l| (l.value - z.value).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(d < 1e-7, "{z:?}");
    }
}

#[test]
fn zeros_fill_a_strip_at_the_expected_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let cr = random_crystal(&mut rng);
        let width: f64 = cr.optical_lengths().iter().sum::<f64>() * 2.0;
        let x1 = 40.0;
        let rect = SearchRect::from_bounds(0.25, x1, -6.0, 0.5).unwrap();
        let rep = crystal_resonances(&cr, &rect, &RootOptions::default()).unwrap();
        let gamma0 = rep
            .resonances
            .zeros
            .iter()
            .map(|z| -z.value.im)
            .fold(0.0, f64::max);
        assert!(gamma0 > 0.0 && gamma0 < 6.0);
        let expected = width * x1 / (2.0 * std::f64::consts::PI);
        let got = rep.resonances.total_multiplicity() as f64;
        let terms = crystal_exppoly(&cr).unwrap().terms().len() as f64;
        assert!((got - expected).abs() <= terms + 1.0, "{got} vs {expected}");
    }
}
