use nalgebra::DVector;
use serde::Serialize;

use super::field::{require_legendrian, LEGENDRIAN_TOL};
use super::{
    first_derivative, flow, second_derivative, variation_field, DeformationPotential, FdEstimate,
    FlowOptions, NodeVariation, Realization, SprayOracle,
};
use crate::contact::{AmbientStructure, EinsteinFit};
use crate::error::{GeometryError, Result};
use crate::submanifold::{intrinsic_curvature, Immersion, InducedGeometry, NodeGeometry};

#[derive(Debug, Clone, Copy)]
pub struct VariationOptions {
    /// Base oracle step `h_t`, divided by `max(1, max |V|)`.
    pub step: f64,
    /// Rungs of the halving ladder (at least 3 for an order estimate).
    pub levels: usize,
    pub realization: Realization,
    pub flow: FlowOptions,
    /// Largest accepted L-minimality defect.
    pub lmin_tol: f64,
    /// `|H|` below which `L` counts as minimal.
    pub minimal_tol: f64,
    /// Fitted `Ric = A g + B η⊗η` constants, enabling the short form.
    pub einstein: Option<EinsteinFit>,
    /// Parameter step of the stencils used for divergences.
    pub stencil: f64,
}

impl Default for VariationOptions {
    fn default() -> Self {
        Self {
            step: 0.05,
            levels: 3,
            realization: Realization::Spray,
            flow: FlowOptions::default(),
            lmin_tol: 1e-6,
            minimal_tol: 1e-8,
            einstein: None,
            stencil: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstVariation {
    /// `−∫ g(V, H) dv`
    pub closed: f64,
    pub oracle: FdEstimate,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondVariation {
    /// `¼∫{(Δf)² − 2ε|∇f|² − R̄ic(φ∇f,φ∇f) − 2g(H,h(∇f,∇f)) + g(H,φ∇f)²}`
    pub closed: f64,
    /// `∫{tr[g(∇⊥V,∇⊥V) + R̄m(·,V,·,V)] − |A_V|² − ¼g(h(∇f,∇f),H) + g(H,V)²}`
    pub trace_form: f64,
    /// `¼∫{(Δf)² − (A+2ε)|∇f|²}` on η-Einstein ambients with minimal `L`.
    pub short_form: Option<f64>,
    pub oracle: FdEstimate,
    /// `|closed − oracle| / (1 + |oracle|)`
    pub oracle_residual: f64,
    /// `|closed − trace_form| / max(1, |closed|)`
    pub trace_residual: f64,
    pub short_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationReport {
    pub potential: String,
    pub volume: f64,
    pub first: FirstVariation,
    pub second: SecondVariation,
    pub l_minimality: f64,
    /// `max |g(V, ∂_a F)|`
    pub normality: f64,
    /// Second variation is negative.
    pub destabilizing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LMinimality {
    /// `(∫ div((φH)^T)² dv)^{1/2}`
    pub defect: f64,
    pub max: f64,
    /// Pointwise divergence at each node.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BochnerCheck {
    /// `∫ (Δf)²`
    pub lhs: f64,
    /// `∫ Ric(∇f,∇f) + |∇²f|²`
    pub rhs: f64,
    pub residual: f64,
}

fn oracle_step(opts: &VariationOptions, spray: &SprayOracle, s: &AmbientStructure) -> Result<f64> {
    Ok(opts.step / spray.speed(s)?.max(1.0))
}

/// `t ↦ vol(L_t)` for the configured realization.
fn volume_family<'a>(
    f: &'a Immersion,
    s: &'a AmbientStructure,
    pot: &'a DeformationPotential,
    spray: &'a SprayOracle,
    opts: &VariationOptions,
) -> impl FnMut(f64) -> Result<f64> + 'a {
    let realization = opts.realization;
    let flow_opts = opts.flow;
    move |t| match realization {
        Realization::Spray => spray.volume(s, t),
        Realization::ContactFlow => flow(f, s, pot, t, flow_opts)?.volume(s),
    }
}

pub fn first_variation(
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
    pot: &DeformationPotential,
    opts: &VariationOptions,
) -> Result<FirstVariation> {
    f.require_closed()?;
    let field = variation_field(pot, f, s, geom)?;
    let spray = SprayOracle::new(f, s, pot)?;
    first_variation_with(f, s, geom, pot, opts, &field.nodes, &spray)
}

fn first_variation_with(
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
    pot: &DeformationPotential,
    opts: &VariationOptions,
    field: &[NodeVariation],
    spray: &SprayOracle,
) -> Result<FirstVariation> {
    let closed = -integrate(geom, field, |node, var| node.g(&var.field, &node.mean_curvature));
    let h = oracle_step(opts, spray, s)?;
    let oracle = first_derivative(volume_family(f, s, pot, spray, opts), h, opts.levels)?;
    let residual = (closed - oracle.extrapolated).abs();
    Ok(FirstVariation {
        closed,
        oracle,
        residual,
    })
}

fn integrate(
    geom: &InducedGeometry,
    field: &[NodeVariation],
    mut q: impl FnMut(&NodeGeometry, &NodeVariation) -> f64,
) -> f64 {
    geom.nodes
        .iter()
        .zip(field)
        .map(|(node, var)| node.weight * node.density * q(node, var))
        .sum()
}

/// `div((φH)^T)` at every node and its `L²` norm. Derivatives of the
/// tangential components are taken by a fourth-order parameter stencil.
pub fn l_minimality_defect(
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
    stencil: f64,
) -> Result<LMinimality> {
    require_legendrian(f, s, LEGENDRIAN_TOL)?;
    let n = f.dim();
    // √|G| (φH)^a at u
    let flux = |u: &[f64]| -> Result<DVector<f64>> {
        let node = NodeGeometry::new(s, f, u, 0.0, geom.spacelike)?;
        let y = node.tangential_coords(&node.ambient.phi_of(&node.mean_curvature));
        Ok(y * node.density)
    };
    let mut values = Vec::with_capacity(geom.nodes.len());
    for node in &geom.nodes {
        let mut div = 0.0;
        for a in 0..n {
            let at = |k: f64| -> Result<f64> {
                let mut q = node.u.clone();
                q[a] += k * stencil;
                Ok(flux(&q)?[a])
            };
            div += (at(-2.0)? - at(2.0)? + 8.0 * (at(1.0)? - at(-1.0)?)) / (12.0 * stencil);
        }
        values.push(div / node.density);
    }
    let sq: f64 = geom
        .nodes
        .iter()
        .zip(&values)
        .map(|(node, v)| node.weight * node.density * v * v)
        .sum();
    Ok(LMinimality {
        defect: sq.sqrt(),
        max: values.iter().fold(0.0, |m, v| m.max(v.abs())),
        values,
    })
}

fn closed_form_integrand(node: &NodeGeometry, var: &NodeVariation) -> f64 {
    let p = &var.potential;
    let amb = &node.ambient;
    let grad = node.push(&p.gradient);
    let phi_grad = amb.phi_of(&grad);
    let hg = node.h_on(&p.gradient, &p.gradient);
    let mean = &node.mean_curvature;
    0.25 * (p.laplacian * p.laplacian - 2.0 * amb.epsilon * p.grad_norm2
        - amb.ricci(&phi_grad, &phi_grad)
        - 2.0 * node.g(mean, &hg)
        + node.g(mean, &phi_grad).powi(2))
}

fn trace_form_integrand(node: &NodeGeometry, var: &NodeVariation) -> f64 {
    let n = node.dim();
    let amb = &node.ambient;
    let v = &var.field;
    let ginv = node.inverse_metric();
    let nabla: Vec<DVector<f64>> = (0..n)
        .map(|a| amb.covariant(&node.tangent(a), v, &var.derivative.column(a).into_owned()))
        .collect();
    let perp: Vec<DVector<f64>> = nabla.iter().map(|w| node.normal_part(w)).collect();
    let shape = nalgebra::DMatrix::from_fn(n, n, |a, c| -node.g(&nabla[a], &node.tangent(c)));
    let mut trace = 0.0;
    for a in 0..n {
        for b in 0..n {
            trace += ginv[(a, b)]
                * (node.g(&perp[a], &perp[b]) + amb.rm(&node.tangent(a), v, &node.tangent(b), v));
        }
    }
    let shape_sq = (ginv * &shape * ginv * shape.transpose()).trace();
    let p = &var.potential;
    let mean = &node.mean_curvature;
    let hg = node.h_on(&p.gradient, &p.gradient);
    trace - shape_sq - 0.25 * node.g(&hg, mean) + node.g(mean, v).powi(2)
}

/// Second variation of volume of an L-minimal Legendrian along
/// `V = fξ + ½φ∇f`: the closed form, the trace form, the η-Einstein short form
/// and the finite-difference oracle.
pub fn second_variation(
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
    pot: &DeformationPotential,
    opts: &VariationOptions,
) -> Result<VariationReport> {
    f.require_closed()?;
    let lmin = l_minimality_defect(f, s, geom, opts.stencil)?;
    if !(lmin.defect <= opts.lmin_tol) {
        return Err(GeometryError::NotLMinimal {
            defect: lmin.defect,
            tolerance: opts.lmin_tol,
        });
    }
    let field = variation_field(pot, f, s, geom)?;
    let spray = SprayOracle::new(f, s, pot)?;
    let first = first_variation_with(f, s, geom, pot, opts, &field.nodes, &spray)?;

    let closed = integrate(geom, &field.nodes, closed_form_integrand);
    let trace_form = integrate(geom, &field.nodes, trace_form_integrand);
    let minimal = geom.max_mean_curvature() <= opts.minimal_tol;
    let short_form = match opts.einstein {
        Some(fit) if minimal => {
            let thr = fit.threshold(s.epsilon());
            Some(integrate(geom, &field.nodes, |_, var| {
                let p = &var.potential;
                0.25 * (p.laplacian * p.laplacian - thr * p.grad_norm2)
            }))
        }
        _ => None,
    };
    let h = oracle_step(opts, &spray, s)?;
    let oracle = second_derivative(volume_family(f, s, pot, &spray, opts), h, opts.levels)?;
    let r = oracle.extrapolated;
    let second = SecondVariation {
        closed,
        trace_form,
        short_form,
        oracle_residual: (closed - r).abs() / (1.0 + r.abs()),
        trace_residual: (closed - trace_form).abs() / closed.abs().max(1.0),
        short_residual: short_form.map(|v| (closed - v).abs()),
        oracle,
    };
    Ok(VariationReport {
        potential: pot.label.clone(),
        volume: geom.volume(),
        first,
        destabilizing: second.closed < 0.0,
        second,
        l_minimality: lmin.defect,
        normality: field.normality,
    })
}

/// Integrated Bochner identity `∫(Δf)² = ∫ Ric(∇f,∇f) + |∇²f|²` on closed `L`,
/// with the intrinsic Ricci tensor from the differenced induced connection.
pub fn bochner_check(
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
    pot: &DeformationPotential,
    step: f64,
) -> Result<BochnerCheck> {
    f.require_closed()?;
    let n = f.dim();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for node in &geom.nodes {
        let p = pot.at(node)?;
        let ric = if n > 1 {
            let sv = node.df.clone().svd(false, false).singular_values;
            let h = step * (sv.min() / sv.max()).min(1.0);
            let c = intrinsic_curvature(f, s, &node.u, h)?;
            (p.gradient.transpose() * &c.ricci * &p.gradient)[(0, 0)]
        } else {
            0.0
        };
        let w = node.weight * node.density;
        lhs += w * p.laplacian * p.laplacian;
        rhs += w * (ric + p.hessian_norm2);
    }
    Ok(BochnerCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}
