use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sasakian_core::contact::{eta_einstein_constants, model_catalog, random_vector, Tolerances};
use sasakian_core::error::GeometryError;
use sasakian_core::spectral::{stability_verdict, SpectrumOptions, MARGINAL_BAND};
use sasakian_core::submanifold::immersion_catalog;
use sasakian_core::tanno::*;

const ALPHAS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

fn deformation(model: &str, n: usize, alpha: f64, seed: u64) -> (TannoDeformation, Vec<Vec<f64>>, ChaCha8Rng) {
    let s = model_catalog(model, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = s.sample_points(8, &mut rng);
    let t = deform(&s, alpha, &pts, &mut rng, Tolerances::default()).unwrap();
    (t, pts, rng)
}

#[test]
fn every_model_deforms_to_a_lorentzian_sasakian_structure() {
    let tol = TannoTolerances::default();
    for model in ["round-sphere", "heisenberg", "hyperbolic-bundle"] {
        for n in 1..=2 {
            for (i, alpha) in ALPHAS.into_iter().enumerate() {
                let (t, pts, mut rng) = deformation(model, n, alpha, 10 + i as u64);
                let label = format!("{model} n={n} α={alpha}");
                assert_eq!(t.beta, alpha + alpha * alpha);
                assert!(t.invariants.passed(), "{label}: {:?}", t.invariants.failures().collect::<Vec<_>>());

                let c = connection_difference_check(&t, &pts, &mut rng, &tol).unwrap();
                assert!(c.passed(), "{label}: {:?}", c.records);
                assert!(c.max_residual() < 1e-9, "{label}: {:?}", c.records);

                let r = curvature_relation_check(&t, &pts, &mut rng, CurvatureRoute::Exact, &tol).unwrap();
                assert!(r.passed(), "{label}: {:?}", r.records);

                let src = eta_einstein_constants(&t.source, &pts).unwrap();
                let tgt = eta_einstein_constants(&t.target, &pts).unwrap();
                let mapped = einstein_constant_map(src.a, alpha).unwrap();
                assert!((tgt.a - mapped).abs() < 1e-5, "{label}: {} vs {mapped}", tgt.a);
                assert!((tgt.b - (2.0 * n as f64 + tgt.a)).abs() < 1e-5, "{label}");
                assert!(tgt.residual < 1e-8, "{label}");
            }
        }
    }
}

#[test]
fn deformed_reeb_field_norms() {
    let (t, pts, _) = deformation("round-sphere", 1, 2.0, 1);
    assert_eq!(t.beta, 6.0);
    for p in &pts {
        let pt = t.target.at(p).unwrap();
        let xi = &pt.xi * 2.0;
        assert!((pt.g(&xi, &xi) + 4.0).abs() < 1e-9);
        assert!((pt.g(&pt.xi, &pt.xi) + 1.0).abs() < 1e-9);
    }
    let s = model_catalog("round-sphere", 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        deform(&s, 0.0, &pts, &mut rng, Tolerances::default()),
        Err(GeometryError::InvalidParameter(_))
    ));
}

#[test]
fn curvature_relation_sign_is_pinned() {
    // the correction with the opposite overall sign fails by O(1)
    let (t, pts, mut rng) = deformation("round-sphere", 1, 1.0, 2);
    let c = t.ratio();
    let mut worst: f64 = 0.0;
    for p in &pts {
        let src = t.source.at(p).unwrap();
        let tgt = t.target.at(p).unwrap();
        let x = src.horizontal(&random_vector(3, &mut rng));
        let y = src.horizontal(&random_vector(3, &mut rng));
        let z = src.horizontal(&random_vector(3, &mut rng));
        let (px, py, pz) = (src.phi_of(&x), src.phi_of(&y), src.phi_of(&z));
        let corr = &px * src.g(&py, &z) - &py * src.g(&px, &z) - &pz * (2.0 * src.g(&px, &y));
        let flipped = tgt.r_apply(&x, &y, &z) - src.r_apply(&x, &y, &z) + corr * c;
        worst = worst.max(flipped.amax());
    }
    assert!(worst > 1e-2, "{worst}");
}

#[test]
fn curvature_relation_vanishes_for_phi_orthogonal_arguments() {
    // X, Y ∈ ker η with g(φX, Y) = 0 and Z = X kill every correction term
    let (t, pts, mut rng) = deformation("round-sphere", 2, 3.0, 3);
    for p in &pts {
        let src = t.source.at(p).unwrap();
        let tgt = t.target.at(p).unwrap();
        let x = src.horizontal(&random_vector(5, &mut rng));
        let px = src.phi_of(&x);
        let mut y = src.horizontal(&random_vector(5, &mut rng));
        for e in [&x, &px] {
            y -= e * (src.g(&y, e) / src.g(e, e));
        }
        assert!(src.g(&px, &y).abs() < 1e-12);
        let diff = tgt.r_apply(&x, &y, &x) - src.r_apply(&x, &y, &x);
        assert!(diff.amax() < 1e-6, "{}", diff.amax());
    }
}

#[test]
fn differenced_curvature_route_converges() {
    let tol = TannoTolerances::default();
    for (model, n, alpha) in [("round-sphere", 1, 1.0), ("round-sphere", 2, 3.0)] {
        let mut residuals = Vec::new();
        for step in [4e-2, 2e-2, 1e-2] {
            let (t, pts, mut rng) = deformation(model, n, alpha, 4);
            let r = curvature_relation_check(&t, &pts, &mut rng, CurvatureRoute::Differenced { step }, &tol)
                .unwrap();
            residuals.push(r.max_residual());
        }
        // fourth-order stencil: halving the step divides the error by ~16
        for w in residuals.windows(2) {
            assert!(w[1] < w[0] / 8.0, "{model} n={n}: {residuals:?}");
        }
        let (t, pts, mut rng) = deformation(model, n, alpha, 4);
        let r = curvature_relation_check(&t, &pts, &mut rng, CurvatureRoute::Differenced { step: 1e-3 }, &tol)
            .unwrap();
        assert!(r.passed(), "{model}: {:?}", r.records);
    }
}

#[test]
fn minimality_is_preserved() {
    let tol = TannoTolerances::default();
    for (name, minimal) in [
        ("great-circle", true),
        ("clifford-torus", true),
        ("torus-knot", false),
        ("wavy-circle", false),
    ] {
        let c = immersion_catalog(name).unwrap();
        for alpha in ALPHAS {
            let (t, _, _) = deformation(c.ambient, c.n, alpha, 5);
            let m = minimality_preservation_check(&c.immersion, &t, 1e-3, &tol).unwrap();
            let label = format!("{name} α={alpha}");
            assert!(m.passed(), "{label}: {:?}", m.report.records);
            assert_eq!(m.minimal, [minimal, minimal], "{label}: {:?}", m.mean_curvature);
            assert_eq!(m.l_minimal, [c.l_minimal, c.l_minimal], "{label}: {:?}", m.l_minimality);
            if minimal {
                assert!(m.mean_curvature[1] < 1e-5 && m.l_minimality.iter().all(|d| *d < 1e-6));
            } else {
                assert!(m.mean_curvature.iter().all(|h| *h > 1e-3), "{label}: {:?}", m.mean_curvature);
            }
            if !c.l_minimal {
                assert!(m.l_minimality.iter().all(|d| *d > 1e-2), "{label}: {:?}", m.l_minimality);
            }
        }
    }
}

#[test]
fn tangent_connections_agree_only_on_horizontal_submanifolds() {
    let (t, _, _) = deformation("round-sphere", 1, 2.0, 6);
    let legendrian = immersion_catalog("torus-knot").unwrap().immersion;
    assert!(tangent_connection_defect(&legendrian, &t).unwrap() < 1e-10);
    let slanted = immersion_catalog("slanted-knot").unwrap().immersion;
    assert!(tangent_connection_defect(&slanted, &t).unwrap() > 1e-1);
    // tangent to ξ: the correction 2η(X)φX vanishes since φξ = 0
    let reeb = immersion_catalog("reeb-orbit").unwrap().immersion;
    assert!(tangent_connection_defect(&reeb, &t).unwrap() < 1e-10);
    assert!(matches!(
        minimality_preservation_check(&slanted, &t, 1e-3, &TannoTolerances::default()),
        Err(GeometryError::NotLegendrian { .. }) | Err(GeometryError::NotSpacelike { .. })
    ));
}

fn equivalence(name: &str, alpha: f64) -> StabilityEquivalence {
    let c = immersion_catalog(name).unwrap();
    let (t, pts, _) = deformation(c.ambient, c.n, alpha, 7);
    stability_equivalence_check(
        &c.immersion,
        &t,
        &pts,
        4,
        SpectrumOptions::default(),
        &TannoTolerances::default(),
    )
    .unwrap()
}

#[test]
fn great_circle_is_unstable_in_both_structures() {
    let e = equivalence("great-circle", 2.0);
    assert!(e.passed(), "{:?}", e.report.records);
    assert!(!e.source.stable && !e.target.stable);
    assert!((e.source.threshold - 4.0).abs() < 1e-8);
    assert!((e.target.threshold - 2.0).abs() < 1e-8);
    assert!((e.target.lambda1 - 0.5).abs() < 1e-4);
    assert!((e.mapped_constant - 4.0).abs() < 1e-8);
}

#[test]
fn verdicts_agree_across_deformations() {
    for name in ["great-circle", "clifford-torus", "heisenberg-line", "hyperbolic-line"] {
        for alpha in ALPHAS {
            let e = equivalence(name, alpha);
            assert!(e.passed(), "{name} α={alpha}: {:?} {:?} {:?}", e.report.records, e.source, e.target);
        }
    }
}

#[test]
fn lorentzian_einstein_targets_are_stable_by_the_corollary() {
    for (name, alpha, n) in [("hyperbolic-line", 0.5, 1.0), ("hyperbolic-plane", 1.0 / 3.0, 2.0)] {
        let e = equivalence(name, alpha);
        assert!(e.passed(), "{name}: {:?}", e.report.records);
        assert!((e.target_fit.a + 2.0 * n).abs() < 1e-5, "{name}: {}", e.target_fit.a);
        assert!(e.target.corollary && e.target.stable);
        assert!(e.source.stable);
        assert!(e.source.lambda1 >= e.source.threshold);
    }
}

#[test]
fn boundary_maps_to_boundary() {
    for a in [-4.0, -2.0, 2.0, 4.0] {
        for alpha in ALPHAS {
            let lambda = a + 2.0;
            let src = stability_verdict(lambda, a, 1, MARGINAL_BAND);
            let tgt = stability_verdict(lambda / alpha, einstein_constant_map(a, alpha).unwrap(), -1, MARGINAL_BAND);
            assert!(src.stable && tgt.stable);
            assert!(src.marginal && tgt.marginal, "{a} {alpha}");
        }
    }
}

#[test]
fn equivalence_requires_a_minimal_legendrian() {
    let c = immersion_catalog("torus-knot").unwrap();
    let (t, pts, _) = deformation("round-sphere", 1, 1.0, 8);
    assert!(matches!(
        stability_equivalence_check(&c.immersion, &t, &pts, 3, SpectrumOptions::default(), &TannoTolerances::default()),
        Err(GeometryError::NotMinimal { .. })
    ));
}
