use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{einstein_constant_map, TannoDeformation, TannoTolerances};
use crate::contact::{eta_einstein_constants, random_vector, AmbientPoint, EinsteinFit};
use crate::error::{GeometryError, Result};
use crate::report::{IdentityReport, Worst};
use crate::spectral::{laplace_spectrum, stability_verdict, SpectrumOptions, StabilityVerdict, MARGINAL_BAND};
use crate::submanifold::{Immersion, InducedGeometry};
use crate::tensor::riemann_differenced;
use crate::variation::l_minimality_defect;

const DRAWS: usize = 3;

/// `∇̃_X Y − ∇_X Y` for constant-coefficient `X, Y`.
fn difference(src: &AmbientPoint, tgt: &AmbientPoint, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    tgt.geometry.connection.apply(x, y) - src.geometry.connection.apply(x, y)
}

/// `∇̃_X Y = ∇_X Y − α⁻¹β(η(X)φY + η(Y)φX)` with both connections computed
/// from their own metrics.
pub fn connection_difference_check<R: Rng>(
    t: &TannoDeformation,
    sample: &[Vec<f64>],
    rng: &mut R,
    tol: &TannoTolerances,
) -> Result<IdentityReport> {
    let d = t.source.dim();
    let c = t.ratio();
    let mut general = Worst::default();
    let mut horizontal = Worst::default();
    let mut reeb = Worst::default();
    for p in sample {
        let src = t.source.at(p)?;
        let tgt = t.target.at(p)?;
        // ∇_ξ ξ in both, ξ the source field
        let dxi = &src.dxi * &src.xi;
        reeb.see(src.covariant(&src.xi, &src.xi, &dxi).amax());
        reeb.see(tgt.covariant(&src.xi, &src.xi, &dxi).amax());
        for _ in 0..DRAWS {
            let x = random_vector(d, rng);
            let y = random_vector(d, rng);
            let predicted = -(src.phi_of(&y) * src.eta_of(&x) + src.phi_of(&x) * src.eta_of(&y)) * c;
            general.see((difference(&src, &tgt, &x, &y) - predicted).amax());
            let (hx, hy) = (src.horizontal(&x), src.horizontal(&y));
            horizontal.see(difference(&src, &tgt, &hx, &hy).amax());
        }
    }
    let mut r = IdentityReport::new();
    r.push(
        "connection_difference",
        "∇̃_X Y = ∇_X Y − α⁻¹β(η(X)φY + η(Y)φX)",
        general.0,
        tol.connection,
    );
    r.push(
        "connection_horizontal",
        "∇̃_X Y = ∇_X Y for X, Y ∈ ker η",
        horizontal.0,
        tol.connection,
    );
    r.push("connection_reeb", "∇̃_ξ ξ = ∇_ξ ξ = 0", reeb.0, tol.connection);
    Ok(r)
}

/// How the two curvature tensors are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CurvatureRoute {
    /// Second-order metric jets.
    Exact,
    /// Exact Christoffel symbols differenced with a fourth-order stencil.
    Differenced { step: f64 },
}

/// `R̃(X,Y)Z = R(X,Y)Z + α⁻¹β(g(φY,Z)φX − g(φX,Z)φY − 2g(φX,Y)φZ)` for
/// `X, Y, Z ∈ ker η`.
pub fn curvature_relation_check<R: Rng>(
    t: &TannoDeformation,
    sample: &[Vec<f64>],
    rng: &mut R,
    route: CurvatureRoute,
    tol: &TannoTolerances,
) -> Result<IdentityReport> {
    let d = t.source.dim();
    let c = t.ratio();
    let mut worst = Worst::default();
    for p in sample {
        let src = t.source.at(p)?;
        let tgt = t.target.at(p)?;
        let curvatures = match route {
            CurvatureRoute::Exact => None,
            CurvatureRoute::Differenced { step } => Some((
                riemann_differenced(t.source.metric(), p, step)?,
                riemann_differenced(t.target.metric(), p, step)?,
            )),
        };
        for _ in 0..DRAWS {
            let x = src.horizontal(&random_vector(d, rng));
            let y = src.horizontal(&random_vector(d, rng));
            let z = src.horizontal(&random_vector(d, rng));
            let (r, rt) = match &curvatures {
                None => (src.r_apply(&x, &y, &z), tgt.r_apply(&x, &y, &z)),
                Some((a, b)) => (
                    a.apply(&src.geometry.ginv, &x, &y, &z),
                    b.apply(&tgt.geometry.ginv, &x, &y, &z),
                ),
            };
            let (px, py, pz) = (src.phi_of(&x), src.phi_of(&y), src.phi_of(&z));
            let correction =
                &px * src.g(&py, &z) - &py * src.g(&px, &z) - &pz * (2.0 * src.g(&px, &y));
            worst.see((rt - r - correction * c).amax());
        }
    }
    let mut report = IdentityReport::new();
    report.push(
        "curvature_relation",
        "R̃(X,Y)Z = R(X,Y)Z + α⁻¹β(g(φY,Z)φX − g(φX,Z)φY − 2g(φX,Y)φZ), X,Y,Z ∈ ker η",
        worst.0,
        tol.curvature,
    );
    Ok(report)
}

/// `max |(∇̃ − ∇)(∂_a F, ∂_b F)|` over the quadrature nodes. Vanishes when
/// the tangent spaces lie in `ker η`.
pub fn tangent_connection_defect(f: &Immersion, t: &TannoDeformation) -> Result<f64> {
    let mut worst = Worst::default();
    for (u, _) in f.nodes() {
        let (x, df, _) = f.derivatives(&u)?;
        let src = t.source.at(x.as_slice())?;
        let tgt = t.target.at(x.as_slice())?;
        for a in 0..df.ncols() {
            for b in 0..df.ncols() {
                let (va, vb) = (df.column(a).into_owned(), df.column(b).into_owned());
                worst.see(difference(&src, &tgt, &va, &vb).amax());
            }
        }
    }
    Ok(worst.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityComparison {
    /// `max |H|` in the source and target metrics.
    pub mean_curvature: [f64; 2],
    /// L-minimality defects in the source and target.
    pub l_minimality: [f64; 2],
    pub minimal: [bool; 2],
    pub l_minimal: [bool; 2],
    /// Both structures give the same minimality and L-minimality verdicts.
    pub agree: bool,
    pub report: IdentityReport,
}

impl MinimalityComparison {
    pub fn passed(&self) -> bool {
        self.agree && self.report.passed()
    }
}

/// Minimality and L-minimality of a Legendrian computed in both structures,
/// with the induced homothety `g̃|_L = α g|_L` and the resulting scalings
/// `H̃ = H/α`, `div((φH̃)^T) = α⁻¹ div((φH)^T)`.
pub fn minimality_preservation_check(
    f: &Immersion,
    t: &TannoDeformation,
    stencil: f64,
    tol: &TannoTolerances,
) -> Result<MinimalityComparison> {
    let src = InducedGeometry::new(f, &t.source, true)?;
    let tgt = InducedGeometry::new(f, &t.target, true)?;
    let ls = l_minimality_defect(f, &t.source, &src, stencil)?;
    let lt = l_minimality_defect(f, &t.target, &tgt, stencil)?;
    let alpha = t.alpha;
    let mut homothety = Worst::default();
    let mut mean = Worst::default();
    for (a, b) in src.nodes.iter().zip(&tgt.nodes) {
        let scale = a.metric().amax().max(1.0) * alpha;
        homothety.see((b.metric() - a.metric() * alpha).amax() / scale);
        let scale = a.mean_curvature.amax().max(1.0);
        mean.see((&b.mean_curvature - &a.mean_curvature / alpha).amax() / scale);
    }
    let mut lmin = Worst::default();
    for (a, b) in ls.values.iter().zip(&lt.values) {
        lmin.see((b - a / alpha) / a.abs().max(1.0));
    }
    let mut report = IdentityReport::new();
    report.push("induced_homothety", "g̃|_L = α g|_L", homothety.0, tol.homothety);
    report.push("mean_curvature_scaling", "H̃ = H/α", mean.0, tol.homothety);
    report.push(
        "l_minimality_scaling",
        "div((φH̃)^T) = α⁻¹ div((φH)^T)",
        lmin.0,
        tol.minimal,
    );
    report.push(
        "tangent_connection",
        "∇̃_X Y = ∇_X Y for X, Y tangent to L",
        tangent_connection_defect(f, t)?,
        tol.connection,
    );
    let mean_curvature = [src.max_mean_curvature(), tgt.max_mean_curvature()];
    let l_minimality = [ls.defect, lt.defect];
    let minimal = mean_curvature.map(|h| h <= tol.minimal);
    let l_minimal = l_minimality.map(|h| h <= tol.minimal);
    Ok(MinimalityComparison {
        mean_curvature,
        l_minimality,
        minimal,
        l_minimal,
        agree: minimal[0] == minimal[1] && l_minimal[0] == l_minimal[1],
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityEquivalence {
    pub source_fit: EinsteinFit,
    pub target_fit: EinsteinFit,
    /// `(A + 2)/α + 2`
    pub mapped_constant: f64,
    pub source_eigenvalues: Vec<f64>,
    pub target_eigenvalues: Vec<f64>,
    pub source: StabilityVerdict,
    pub target: StabilityVerdict,
    pub agree: bool,
    pub report: IdentityReport,
}

impl StabilityEquivalence {
    pub fn passed(&self) -> bool {
        self.agree && self.report.passed()
    }
}

/// Stability verdicts of a minimal Legendrian computed independently in the
/// source (`λ₁` against `A + 2`) and the target (`λ̃₁` against `A_α − 2`).
pub fn stability_equivalence_check(
    f: &Immersion,
    t: &TannoDeformation,
    sample: &[Vec<f64>],
    k: usize,
    spectrum: SpectrumOptions,
    tol: &TannoTolerances,
) -> Result<StabilityEquivalence> {
    let geom = InducedGeometry::new(f, &t.source, true)?;
    crate::variation::require_legendrian(f, &t.source, crate::variation::LEGENDRIAN_TOL)?;
    let h = geom.max_mean_curvature();
    if !(h <= tol.minimal) {
        return Err(GeometryError::NotMinimal {
            mean_curvature: h,
            tolerance: tol.minimal,
        });
    }
    let source_fit = eta_einstein_constants(&t.source, sample)?;
    if !source_fit.is_eta_einstein(tol.einstein) {
        return Err(GeometryError::Structure(format!(
            "source {} is not η-Einstein (fit residual {:e})",
            t.source.name, source_fit.residual
        )));
    }
    let target_fit = eta_einstein_constants(&t.target, sample)?;
    let mapped = einstein_constant_map(source_fit.a, t.alpha)?;
    let n = t.source.n() as f64;

    let ls = laplace_spectrum(f, &t.source, k, spectrum)?;
    let lt = laplace_spectrum(f, &t.target, k, spectrum)?;
    let mut scaling = Worst::default();
    for (a, b) in ls.eigenvalues.iter().zip(&lt.eigenvalues).skip(1) {
        let want = a / t.alpha;
        scaling.see((b - want) / want.abs().max(f64::MIN_POSITIVE));
    }
    let mut report = IdentityReport::new();
    report.push(
        "einstein_map",
        "A_α = (A + 2)/α + 2",
        target_fit.a - mapped,
        tol.einstein,
    );
    report.push(
        "einstein_target_b",
        "B̃ = 2n + A_α",
        target_fit.b - (2.0 * n + target_fit.a),
        tol.einstein,
    );
    report.push("target_eta_einstein", "R̃ic = A_α g̃ + B̃ η̃⊗η̃", target_fit.residual, tol.einstein);
    report.push("eigenvalue_scaling", "λ̃_k = λ_k / α", scaling.0, tol.scaling);

    let source = stability_verdict(ls.lambda1(), source_fit.a, 1, MARGINAL_BAND);
    let target = stability_verdict(lt.lambda1(), target_fit.a, t.target.epsilon(), MARGINAL_BAND);
    Ok(StabilityEquivalence {
        source_fit,
        target_fit,
        mapped_constant: mapped,
        source_eigenvalues: ls.eigenvalues,
        target_eigenvalues: lt.eigenvalues,
        agree: source.stable == target.stable,
        source,
        target,
        report,
    })
}
