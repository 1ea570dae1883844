//! Lorentzian deformation `g̃ = αg − βη⊗η`, `β = α + α²`, of a Sasakian
//! structure, and the checks of its transformation laws.

mod checks;

pub use checks::{
    connection_difference_check, curvature_relation_check, minimality_preservation_check,
    stability_equivalence_check, tangent_connection_defect, CurvatureRoute, MinimalityComparison,
    StabilityEquivalence,
};

use rand::Rng;
use serde::Serialize;

use crate::contact::{curvature_identity_suite, verify_sasakian, AmbientStructure, Tolerances};
use crate::error::{GeometryError, Result};
use crate::report::{IdentityReport, Worst};
use crate::tensor::MetricField;

/// `β = α + α²`
pub fn beta(alpha: f64) -> f64 {
    alpha + alpha * alpha
}

fn require_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!(
            "deformation parameter must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// `A_α = (A + 2)/α + 2`
pub fn einstein_constant_map(a: f64, alpha: f64) -> Result<f64> {
    require_alpha(alpha)?;
    Ok((a + 2.0) / alpha + 2.0)
}

/// The deformed structure `(αg − βη⊗η, αη, ξ/α, φ)` with `ε = −1`.
pub fn deformed_structure(source: &AmbientStructure, alpha: f64) -> Result<AmbientStructure> {
    require_alpha(alpha)?;
    if source.epsilon() != 1 {
        return Err(GeometryError::InvalidParameter(
            "the deformation starts from a Riemannian (ε = +1) structure".into(),
        ));
    }
    let d = source.dim();
    let b = beta(alpha);
    let eta = source.eta();
    let mut upper = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            let g = source.metric().component(i, j).scaled(alpha);
            let both_zero = eta[i].as_constant() == Some(0.0) || eta[j].as_constant() == Some(0.0);
            upper.push(if both_zero {
                g
            } else {
                &g - &(&eta[i] * &eta[j]).scaled(b)
            });
        }
    }
    let mut signature = vec![1; d];
    signature[d - 1] = -1;
    let metric = MetricField::from_upper(d, upper, signature)?;
    AmbientStructure::new(
        format!("tanno({}, alpha={alpha})", source.name),
        metric,
        source.xi().iter().map(|e| e.scaled(1.0 / alpha)).collect(),
        eta.iter().map(|e| e.scaled(alpha)).collect(),
        source.phi_components().to_vec(),
        -1,
        source.domain().to_vec(),
    )
}

/// Tolerances of the deformation checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TannoTolerances {
    /// Pointwise invariants of the deformed metric.
    pub invariant: f64,
    pub connection: f64,
    pub curvature: f64,
    /// Fitted against mapped η-Einstein constants.
    pub einstein: f64,
    /// `g̃|_L = α g|_L`
    pub homothety: f64,
    /// Relative `λ̃_k = λ_k / α`.
    pub scaling: f64,
    /// Below this `|H|` and L-minimality defect count as zero.
    pub minimal: f64,
}

impl Default for TannoTolerances {
    fn default() -> Self {
        Self {
            invariant: 1e-9,
            connection: 1e-5,
            curvature: 1e-4,
            einstein: 1e-5,
            homothety: 1e-9,
            scaling: 1e-6,
            minimal: 1e-6,
        }
    }
}

impl TannoTolerances {
    pub fn scaled(self, s: f64) -> Self {
        Self {
            invariant: self.invariant * s,
            connection: self.connection * s,
            curvature: self.curvature * s,
            einstein: self.einstein * s,
            homothety: self.homothety * s,
            scaling: self.scaling * s,
            minimal: self.minimal * s,
        }
    }
}

/// A Sasakian source, its deformation and the invariants checked at
/// construction.
#[derive(Debug, Clone)]
pub struct TannoDeformation {
    pub alpha: f64,
    pub beta: f64,
    pub source: AmbientStructure,
    pub target: AmbientStructure,
    pub invariants: IdentityReport,
}

impl TannoDeformation {
    /// `β/α = 1 + α`, the coefficient of the connection and curvature
    /// corrections.
    pub fn ratio(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// Deforms a Sasakian structure after checking it, and verifies the target's
/// invariants together with the full pseudo-Sasakian suite at `ε = −1`.
pub fn deform<R: Rng>(
    source: &AmbientStructure,
    alpha: f64,
    sample: &[Vec<f64>],
    rng: &mut R,
    tol: Tolerances,
) -> Result<TannoDeformation> {
    require_alpha(alpha)?;
    if source.epsilon() != 1 {
        return Err(GeometryError::InvalidParameter(
            "the deformation starts from a Riemannian (ε = +1) structure".into(),
        ));
    }
    let check = verify_sasakian(source, sample, rng, tol)?;
    if !check.passed() {
        let failed: Vec<&str> = check.failures().map(|r| r.id.as_str()).collect();
        return Err(GeometryError::Structure(format!(
            "source {} is not Sasakian (failed: {})",
            source.name,
            failed.join(", ")
        )));
    }
    let target = deformed_structure(source, alpha)?;
    let b = beta(alpha);
    let mut invariants = IdentityReport::new();
    invariants.push("beta", "β = α + α²", b - (alpha + alpha * alpha), 0.0);
    let mut unit = Worst::default();
    let mut old = Worst::default();
    for p in sample {
        let pt = target.at(p)?;
        unit.see(pt.g(&pt.xi, &pt.xi) + 1.0);
        let xi = &pt.xi * alpha;
        old.see(pt.g(&xi, &xi) + alpha * alpha);
    }
    invariants.push("xi_tilde_unit", "g̃(ξ̃, ξ̃) = −1", unit.0, 1e-9);
    invariants.push("xi_norm", "g̃(ξ, ξ) = −α²", old.0, 1e-9);
    let mut suite = verify_sasakian(&target, sample, rng, tol)?;
    suite.extend(curvature_identity_suite(&target, sample, rng, tol)?);
    for mut r in suite.records {
        r.id = format!("target.{}", r.id);
        invariants.records.push(r);
    }
    Ok(TannoDeformation {
        alpha,
        beta: b,
        source: source.clone(),
        target,
        invariants,
    })
}
