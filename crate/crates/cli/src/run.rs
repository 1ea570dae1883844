use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sasakian_core::contact::{
    curvature_identity_suite, eta_einstein_constants, verify_sasakian, AmbientStructure, EinsteinFit, Tolerances,
};
use sasakian_core::error::GeometryError;
use sasakian_core::spectral::{
    flat_lattice_spectrum, laplace_spectrum, stability_verdict, SpectrumOptions, SpectrumResult, MARGINAL_BAND,
};
use sasakian_core::submanifold::{
    gauss_equation_check, legendrian_defect, node_identity_checks, shape_operator_check, trace_curvature_check,
    Immersion, InducedGeometry,
};
use sasakian_core::tanno::{
    connection_difference_check, curvature_relation_check, deform, einstein_constant_map,
    minimality_preservation_check, stability_equivalence_check, TannoTolerances,
};
use sasakian_core::variation::{
    l_minimality_defect, random_trig_potential, second_variation, DeformationPotential, VariationOptions,
};

use crate::config::{Command, ConfigError, RunConfig, ToleranceConfig};
use crate::report::{DeformationEntry, RunReport, SpectrumEntry, VerdictEntry};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Geometry {
        context: String,
        #[source]
        source: GeometryError,
    },
}

trait Context<T> {
    fn context(self, what: &str) -> Result<T, RunError>;
}

impl<T> Context<T> for Result<T, GeometryError> {
    fn context(self, what: &str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Geometry {
            context: what.to_string(),
            source,
        })
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    tol: ToleranceConfig,
    rng: ChaCha8Rng,
    report: RunReport,
}

/// Runs `command`; never fails, errors end up in `report.error`.
pub fn run(command: Command, cfg: &RunConfig, seed: Option<u64>, tolerance_scale: f64) -> RunReport {
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let mut r = Run {
        cfg,
        tol: cfg.tolerances.scaled(tolerance_scale),
        rng: ChaCha8Rng::seed_from_u64(seed),
        report: RunReport::new(command.name(), seed, tolerance_scale, Some(cfg.clone())),
    };
    let outcome = if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
        Err(RunError::Config(ConfigError::new(
            "--tolerance-scale",
            format!("must be a positive finite number, got {tolerance_scale}"),
        )))
    } else {
        cfg.validate(command).map_err(RunError::from).and_then(|()| match command {
            Command::Verify => r.verify(),
            Command::SecondVariation => r.second_variation(),
            Command::Spectrum => r.spectrum(),
            Command::Tanno => r.tanno(),
        })
    };
    if let Err(e) = outcome {
        r.report.error = Some(e.to_string());
    }
    r.report.finish();
    r.report
}

impl Run<'_> {
    fn ambient_tolerances(&self) -> Tolerances {
        Tolerances {
            algebraic: self.tol.algebraic,
            differential: self.tol.differential,
            curvature: self.tol.curvature,
        }
    }

    fn tanno_tolerances(&self) -> TannoTolerances {
        let d = &self.tol.deformation;
        TannoTolerances {
            invariant: d.invariant,
            connection: d.connection,
            curvature: d.curvature,
            einstein: d.einstein,
            homothety: d.homothety,
            scaling: d.scaling,
            minimal: d.minimal,
        }
    }

    fn spectrum_options(&self) -> SpectrumOptions {
        let c = &self.cfg.spectrum;
        SpectrumOptions {
            base: c.base,
            tolerance: c.refinement,
            max_unknowns: c.max_unknowns,
            dense_limit: c.dense_limit,
        }
    }

    fn ambient(&mut self) -> Result<(AmbientStructure, Vec<Vec<f64>>), RunError> {
        let s = self.cfg.build_ambient()?;
        let pts = s.sample_points(self.cfg.verify.points, &mut self.rng);
        Ok((s, pts))
    }

    fn immersion(&self) -> Result<Immersion, RunError> {
        self.cfg
            .build_immersion()?
            .ok_or_else(|| ConfigError::new("immersion", "missing [immersion] section").into())
    }

    /// Fits `Ric = A g + B η⊗η`; `Some` only when the fit is exact to tolerance.
    fn einstein(&mut self, s: &AmbientStructure, pts: &[Vec<f64>]) -> Result<Option<EinsteinFit>, RunError> {
        let fit = eta_einstein_constants(s, pts).context("η-Einstein fit")?;
        self.report.einstein = Some(fit);
        if fit.is_eta_einstein(self.tol.einstein) {
            Ok(Some(fit))
        } else {
            self.report
                .note(format!("ambient is not η-Einstein (fit residual {:e})", fit.residual));
            Ok(None)
        }
    }

    /// Records the Legendrian defect; `true` when within tolerance.
    fn legendrian(&mut self, f: &Immersion, s: &AmbientStructure) -> Result<bool, RunError> {
        let defect = legendrian_defect(f, s).context("Legendrian defect")?;
        self.report
            .push("immersion", "legendrian", "η(∂_a F) = 0", defect, self.tol.legendrian);
        Ok(defect.abs() <= self.tol.legendrian)
    }

    fn verify(&mut self) -> Result<(), RunError> {
        let (s, pts) = self.ambient()?;
        let tol = self.ambient_tolerances();
        let axioms = verify_sasakian(&s, &pts, &mut self.rng, tol).context("structure identities")?;
        self.report.extend("ambient", &axioms);
        let curv = curvature_identity_suite(&s, &pts, &mut self.rng, tol).context("curvature identities")?;
        self.report.extend("ambient", &curv);
        self.einstein(&s, &pts)?;
        if self.cfg.immersion.is_none() {
            return Ok(());
        }
        let f = self.immersion()?;
        if !self.legendrian(&f, &s)? {
            self.report.note("Legendrian suites skipped: immersion is not Legendrian");
            return Ok(());
        }
        let geom = InducedGeometry::new(&f, &s, true).context("induced geometry")?;
        let t = self.tol.submanifold;
        let nodes = node_identity_checks(&geom, &mut self.rng, t);
        self.report.extend("immersion", &nodes);
        let trace = trace_curvature_check(&geom, &mut self.rng, t);
        self.report.extend("immersion", &trace);
        let shape = shape_operator_check(&f, &s, &geom, &mut self.rng, t).context("shape operator")?;
        self.report.extend("immersion", &shape);
        let v = &self.cfg.verify;
        let gauss = gauss_equation_check(&f, &s, &geom, v.gauss_samples, &mut self.rng, v.gauss_step, self.tol.gauss)
            .context("Gauss equation")?;
        self.report.extend("immersion", &gauss);
        Ok(())
    }

    fn potentials(&mut self, f: &Immersion) -> Result<Vec<DeformationPotential>, RunError> {
        let v = &self.cfg.variation;
        let mut out = Vec::with_capacity(v.potentials.len() + v.random);
        for (i, src) in v.potentials.iter().enumerate() {
            out.push(
                DeformationPotential::parse(src, f.dim())
                    .map_err(|e| ConfigError::new(format!("variation.potentials[{i}]"), e.to_string()))?,
            );
        }
        for i in 0..v.random {
            let label = format!("random[{i}]");
            out.push(random_trig_potential(&label, f.axes(), v.max_freq, &mut self.rng).context(&label)?);
        }
        Ok(out)
    }

    fn verdict(
        &mut self,
        scope: &str,
        spectrum: &SpectrumResult,
        fit: &EinsteinFit,
        s: &AmbientStructure,
    ) {
        let verdict = stability_verdict(spectrum.lambda1(), fit.a, s.epsilon(), MARGINAL_BAND);
        self.report.verdicts.push(VerdictEntry {
            scope: scope.to_string(),
            label: verdict.label(),
            verdict,
        });
    }

    fn second_variation(&mut self) -> Result<(), RunError> {
        let (s, pts) = self.ambient()?;
        let f = self.immersion()?;
        let fit = self.einstein(&s, &pts)?;
        if !self.legendrian(&f, &s)? {
            self.report.note("variations skipped: immersion is not Legendrian");
            return Ok(());
        }
        let geom = InducedGeometry::new(&f, &s, true).context("induced geometry")?;
        let v = &self.cfg.variation;
        let lmin = l_minimality_defect(&f, &s, &geom, v.stencil).context("L-minimality")?;
        self.report
            .push("immersion", "l_minimality", "div((φH)^T) = 0", lmin.defect, self.tol.l_minimal);
        if !(lmin.defect <= self.tol.l_minimal) {
            self.report.note("variations skipped: immersion is not L-minimal");
            return Ok(());
        }
        let opts = VariationOptions {
            step: v.step,
            levels: v.levels,
            realization: v.realization,
            lmin_tol: self.tol.l_minimal,
            minimal_tol: self.tol.minimal,
            einstein: fit,
            stencil: v.stencil,
            ..Default::default()
        };
        let want_verdict = v.verdict;
        for (i, pot) in self.potentials(&f)?.iter().enumerate() {
            let scope = format!("potential[{i}]");
            let r = second_variation(&f, &s, &geom, pot, &opts).context(&scope)?;
            let sv = &r.second;
            let first_scale = 1.0 + r.first.oracle.extrapolated.abs();
            self.report.push(
                &scope,
                "first_variation",
                "d/dt vol(L_t) = −∫ g(V, H) dv",
                r.first.residual / first_scale,
                self.tol.oracle,
            );
            self.report.push(
                &scope,
                "second_variation_oracle",
                "closed form = d²/dt² vol(L_t)",
                sv.oracle_residual,
                self.tol.oracle,
            );
            let order_gap = if sv.oracle.converged {
                0.0
            } else {
                2.0 - sv.oracle.order.unwrap_or(0.0)
            };
            self.report
                .push(&scope, "oracle_order", "observed difference order ≥ 2", order_gap, 0.0);
            self.report.push(
                &scope,
                "trace_form",
                "closed form = ∫ tr[g(∇⊥V,∇⊥V) + R̄m(·,V,·,V)] − |A_V|² + …",
                sv.trace_residual,
                self.tol.trace,
            );
            if let Some(short) = sv.short_residual {
                self.report.push(
                    &scope,
                    "short_form",
                    "closed form = ¼∫ (Δf)² − (A + 2ε)|∇f|²",
                    short / sv.closed.abs().max(1.0),
                    self.tol.trace,
                );
            }
            self.report.variations.push(r);
        }
        match fit {
            Some(fit) if want_verdict && geom.max_mean_curvature() <= self.tol.minimal => {
                let spectrum = laplace_spectrum(&f, &s, self.cfg.spectrum.k, self.spectrum_options())
                    .context("Laplace spectrum")?;
                self.verdict("immersion", &spectrum, &fit, &s);
                self.report.spectra.push(SpectrumEntry {
                    scope: "immersion".into(),
                    result: spectrum,
                });
            }
            Some(_) if want_verdict => self.report.note("stability verdict skipped: immersion is not minimal"),
            _ => {}
        }
        Ok(())
    }

    fn spectrum(&mut self) -> Result<(), RunError> {
        let (s, pts) = self.ambient()?;
        let f = self.immersion()?;
        let k = self.cfg.spectrum.k;
        let grid = laplace_spectrum(&f, &s, k, self.spectrum_options()).context("Laplace spectrum")?;
        let l1 = grid.lambda1();
        if let [.., a, b] = grid.levels.as_slice() {
            let (p, q) = (a.eigenvalues[1], b.eigenvalues[1]);
            self.report.push(
                "immersion",
                "spectrum_refinement",
                "|λ₁(N) − λ₁(N/2)| / λ₁(N) below the refinement tolerance",
                (q - p) / q.abs().max(f64::MIN_POSITIVE),
                self.cfg.spectrum.refinement,
            );
        }
        if self.cfg.spectrum.lattice {
            match flat_lattice_spectrum(&f, &s, k) {
                Ok(lattice) => {
                    let exact = lattice.lambda1();
                    self.report.push(
                        "immersion",
                        "lattice_agreement",
                        "λ₁ = min |2π B⁻ᵀk|²_{G⁻¹}",
                        (l1 - exact) / exact,
                        self.tol.lattice,
                    );
                    self.report.spectra.push(SpectrumEntry {
                        scope: "immersion".into(),
                        result: lattice,
                    });
                }
                Err(GeometryError::Structure(msg)) => self.report.note(format!("lattice oracle skipped: {msg}")),
                Err(e) => return Err(e).context("lattice spectrum"),
            }
        }
        let fit = self.einstein(&s, &pts)?;
        let legendrian = self.legendrian(&f, &s)?;
        if let Some(fit) = fit {
            let geom = InducedGeometry::new(&f, &s, true).context("induced geometry")?;
            if legendrian && geom.max_mean_curvature() <= self.tol.minimal {
                self.verdict("immersion", &grid, &fit, &s);
            } else {
                self.report
                    .note("stability verdict skipped: immersion is not a minimal Legendrian");
            }
        }
        self.report.spectra.insert(
            0,
            SpectrumEntry {
                scope: "immersion".into(),
                result: grid,
            },
        );
        Ok(())
    }

    fn tanno(&mut self) -> Result<(), RunError> {
        let (s, pts) = self.ambient()?;
        let fit = self.einstein(&s, &pts)?;
        let tol = self.tanno_tolerances();
        let ambient_tol = self.ambient_tolerances();
        let immersion = match &self.cfg.immersion {
            Some(_) => {
                let f = self.immersion()?;
                let ok = self.legendrian(&f, &s)?;
                if !ok {
                    self.report
                        .note("immersion checks skipped: immersion is not Legendrian");
                }
                Some((f, ok))
            }
            None => None,
        };
        for &alpha in &self.cfg.tanno.alphas {
            let scope = format!("alpha={alpha}");
            let t = deform(&s, alpha, &pts, &mut self.rng, ambient_tol).context(&scope)?;
            self.report.extend(&scope, &t.invariants);
            let c = connection_difference_check(&t, &pts, &mut self.rng, &tol).context(&scope)?;
            self.report.extend(&scope, &c);
            let r = curvature_relation_check(&t, &pts, &mut self.rng, self.cfg.tanno.curvature, &tol)
                .context(&scope)?;
            self.report.extend(&scope, &r);
            let target_fit = eta_einstein_constants(&t.target, &pts).context(&scope)?;
            let mapped = match fit {
                Some(fit) => {
                    let mapped = einstein_constant_map(fit.a, alpha).context(&scope)?;
                    self.report.push(
                        &scope,
                        "einstein_map",
                        "A_α = (A + 2)/α + 2",
                        target_fit.a - mapped,
                        tol.einstein,
                    );
                    Some(mapped)
                }
                None => None,
            };
            let mut entry = DeformationEntry {
                alpha,
                beta: t.beta,
                target_fit,
                mapped_constant: mapped,
                minimality: None,
                equivalence: None,
            };
            if let Some((f, true)) = &immersion {
                let m = minimality_preservation_check(f, &t, self.cfg.tanno.stencil, &tol).context(&scope)?;
                self.report.extend(&scope, &m.report);
                self.report.push_flag(
                    &scope,
                    "minimality_agreement",
                    "L minimal (L-minimal) in g ⇔ minimal (L-minimal) in g̃",
                    m.agree,
                );
                let minimal = m.minimal[0];
                entry.minimality = Some(m);
                if self.cfg.tanno.equivalence && minimal && fit.is_some() {
                    let e = stability_equivalence_check(f, &t, &pts, self.cfg.spectrum.k, self.spectrum_options(), &tol)
                        .context(&scope)?;
                    self.report.extend(&scope, &e.report);
                    self.report.push_flag(
                        &scope,
                        "verdict_agreement",
                        "λ₁ ≥ A + 2 ⇔ λ̃₁ ≥ A_α − 2",
                        e.agree,
                    );
                    for (side, v) in [("source", e.source), ("target", e.target)] {
                        self.report.verdicts.push(VerdictEntry {
                            scope: format!("{scope}/{side}"),
                            label: v.label(),
                            verdict: v,
                        });
                    }
                    entry.equivalence = Some(e);
                } else if self.cfg.tanno.equivalence {
                    self.report
                        .note(format!("{scope}: stability equivalence skipped (needs a minimal Legendrian in an η-Einstein source)"));
                }
            }
            self.report.deformations.push(entry);
        }
        Ok(())
    }
}
