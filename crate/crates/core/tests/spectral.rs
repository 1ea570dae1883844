use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sasakian_core::contact::{eta_einstein_constants, model_catalog, AmbientStructure};
use sasakian_core::error::GeometryError;
use sasakian_core::spectral::*;
use sasakian_core::submanifold::*;
use sasakian_core::variation::*;

fn setup(name: &str, ambient: &str) -> (Immersion, AmbientStructure) {
    let c = immersion_catalog(name).unwrap();
    let s = model_catalog(ambient, c.n).unwrap();
    (c.immersion, s)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn great_circle_has_unit_first_eigenvalue_twice() {
    let (f, s) = setup("great-circle", "round-sphere");
    let r = laplace_spectrum(&f, &s, 6, SpectrumOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.method, SpectrumMethod::Grid);
    assert!(r.eigenvalues[0].abs() < 1e-10);
    assert!((r.lambda1() - 1.0).abs() < 1e-4, "{}", r.lambda1());
    assert!((r.eigenvalues[2] - 1.0).abs() < 1e-4);
    assert!((r.grid_lambda1() - 1.0).abs() < 1e-3);
    assert!(r.error_estimate < 1e-3);
    let lat = flat_lattice_spectrum(&f, &s, 6).unwrap();
    for (g, l) in r.eigenvalues.iter().zip(&lat.eigenvalues) {
        assert!(close(*g, *l, 1e-4), "{g} vs {l}");
    }
    assert!((lat.eigenvalues[3] - 4.0).abs() < 1e-12);
}

#[test]
fn flat_tori_match_their_lattices() {
    for (name, ambient, lambda1, k) in [
        ("clifford-torus", "round-sphere", 2.0, 13),
        ("hyperbolic-line", "hyperbolic-bundle", 2.0, 5),
        ("heisenberg-line", "heisenberg", 8.0 * PI * PI, 5),
        ("heisenberg-plane", "heisenberg", 8.0 * PI * PI, 9),
        ("hyperbolic-plane", "hyperbolic-bundle", 2.0, 9),
    ] {
        let (f, s) = setup(name, ambient);
        let lat = flat_lattice_spectrum(&f, &s, k).unwrap();
        assert!(close(lat.lambda1(), lambda1, 1e-12), "{name}: {}", lat.lambda1());
        let r = laplace_spectrum(&f, &s, k, SpectrumOptions::default()).unwrap();
        assert!(r.converged, "{name}");
        assert!(r.eigenvalues[0].abs() < 1e-8 * lambda1);
        for (j, (g, l)) in r.eigenvalues.iter().zip(&lat.eigenvalues).enumerate().skip(1) {
            // the first cluster is what refinement controls
            let tol = if (l - lambda1).abs() < 1e-9 * l { 1e-3 } else { 1e-2 };
            assert!((g - l).abs() < tol * l, "{name} λ{j}: {g} vs {l}");
        }
        assert!((r.grid_lambda1() - lambda1).abs() < 1e-2 * lambda1);
    }
}

#[test]
fn clifford_torus_first_eigenvalue_has_multiplicity_six() {
    let (f, s) = setup("clifford-torus", "round-sphere");
    let lat = flat_lattice_spectrum(&f, &s, 14).unwrap();
    assert!(lat.eigenvalues[1..7].iter().all(|l| (l - 2.0).abs() < 1e-12));
    assert!(lat.eigenvalues[7] > 2.5);
}

#[test]
fn closed_curves_follow_their_length() {
    // Δ on a closed curve of length ℓ has eigenvalues (2πk/ℓ)²
    for (name, ambient) in [
        ("wavy-circle", "round-sphere"),
        ("figure-eight", "heisenberg"),
        ("torus-knot", "round-sphere"),
    ] {
        let c = immersion_catalog(name).unwrap();
        let s = model_catalog(ambient, 1).unwrap();
        let fine = c.immersion.with_resolution(512);
        let len = volume(&fine, &s).unwrap();
        let r = laplace_spectrum(&c.immersion, &s, 5, SpectrumOptions::default()).unwrap();
        for k in 1..=2usize {
            let want = (TAU * k as f64 / len).powi(2);
            for j in [2 * k - 1, 2 * k] {
                assert!(
                    (r.eigenvalues[j] - want).abs() < 1e-4 * want,
                    "{name} λ{j}: {} vs {want}",
                    r.eigenvalues[j]
                );
            }
        }
    }
}

#[test]
fn lattice_needs_a_constant_metric() {
    let (f, s) = setup("wavy-circle", "round-sphere");
    assert!(matches!(
        flat_lattice_spectrum(&f, &s, 3),
        Err(GeometryError::Structure(_))
    ));
}

#[test]
fn open_or_mismatched_inputs_are_rejected() {
    let (f, s) = setup("real-sphere", "round-sphere");
    assert!(matches!(
        laplace_spectrum(&f, &s, 4, SpectrumOptions::default()),
        Err(GeometryError::NotClosed { .. })
    ));
    let (f, _) = setup("great-circle", "round-sphere");
    let s5 = model_catalog("round-sphere", 2).unwrap();
    assert!(matches!(
        laplace_spectrum(&f, &s5, 4, SpectrumOptions::default()),
        Err(GeometryError::Dimension(_))
    ));
    let s3 = model_catalog("round-sphere", 1).unwrap();
    assert!(laplace_spectrum(&f, &s3, 1, SpectrumOptions::default()).is_err());
    let bad = SpectrumOptions {
        tolerance: 0.0,
        ..Default::default()
    };
    assert!(laplace_spectrum(&f, &s3, 3, bad).is_err());
}

#[test]
fn dense_and_iterative_solvers_agree() {
    let (f, s) = setup("clifford-torus", "round-sphere");
    let base = SpectrumOptions {
        base: Some(20),
        max_unknowns: 1600,
        ..Default::default()
    };
    let dense = laplace_spectrum(&f, &s, 8, base).unwrap();
    let iter = laplace_spectrum(
        &f,
        &s,
        8,
        SpectrumOptions {
            dense_limit: 0,
            ..base
        },
    )
    .unwrap();
    let a = &dense.levels.last().unwrap();
    let b = &iter.levels.last().unwrap();
    assert_eq!(a.solver, Solver::Dense);
    assert_eq!(b.solver, Solver::ShiftInvert);
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn homothetic_metric_scales_the_spectrum() {
    for (name, ambient, alpha) in [
        ("great-circle", "round-sphere", 2.0),
        ("clifford-torus", "round-sphere", 0.5),
        ("hyperbolic-line", "hyperbolic-bundle", 3.0),
    ] {
        let (f, s) = setup(name, ambient);
        let t = model_catalog(&format!("tanno({ambient}, alpha={alpha})"), s.n()).unwrap();
        let opts = SpectrumOptions::default();
        let a = laplace_spectrum(&f, &s, 5, opts).unwrap();
        let b = laplace_spectrum(&f, &t, 5, opts).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).skip(1) {
            assert!((x / alpha - y).abs() < 1e-9 * y, "{name}: {x}/{alpha} vs {y}");
        }
    }
}

#[test]
fn stability_verdicts_on_the_catalog() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, ambient, label, corollary) in [
        ("great-circle", "round-sphere", "unstable", false),
        ("clifford-torus", "round-sphere", "unstable", false),
        ("hyperbolic-line", "hyperbolic-bundle", "stable", true),
        ("heisenberg-line", "heisenberg", "stable", true),
    ] {
        let (f, s) = setup(name, ambient);
        let pts = s.sample_points(6, &mut rng);
        let fit = eta_einstein_constants(&s, &pts).unwrap();
        let r = laplace_spectrum(&f, &s, 3, SpectrumOptions::default()).unwrap();
        let v = stability_verdict(r.lambda1(), fit.a, s.epsilon(), MARGINAL_BAND);
        assert_eq!(v.label(), label, "{name}: {v:?}");
        assert_eq!(v.corollary, corollary, "{name}");
    }
}

#[test]
fn short_form_is_quadratic_in_the_eigenvalue() {
    // an eigenfunction f of Δ gives ¼(λ² − (A + 2ε)λ)‖f‖²
    let (f, s) = setup("clifford-torus", "round-sphere");
    let g = InducedGeometry::new(&f, &s, true).unwrap();
    let pts = s.sample_points(6, &mut ChaCha8Rng::seed_from_u64(8));
    let fit = eta_einstein_constants(&s, &pts).unwrap();
    let lambda = laplace_spectrum(&f, &s, 2, SpectrumOptions::default())
        .unwrap()
        .lambda1();
    for src in ["cos(u0)", "sin(u1)", "cos(u0+u1)"] {
        let pot = DeformationPotential::parse(src, 2).unwrap();
        let opts = VariationOptions {
            einstein: Some(fit),
            ..Default::default()
        };
        let sv = second_variation(&f, &s, &g, &pot, &opts).unwrap();
        let norm2 = g.integrate(|n| pot.at(n).unwrap().value.powi(2));
        let want = 0.25 * (lambda * lambda - fit.threshold(1) * lambda) * norm2;
        let short = sv.second.short_form.unwrap();
        assert!((short - want).abs() < 1e-4 * want.abs(), "{src}: {short} vs {want}");
        assert!(short < 0.0);
    }
}
