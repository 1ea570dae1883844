use nalgebra::{DMatrix, DVector};

use super::{DeformationPotential, PotentialAt};
use crate::contact::AmbientStructure;
use crate::error::{GeometryError, Result};
use crate::expr::{Jet, Scalar};
use crate::report::Worst;
use crate::submanifold::{legendrian_defect, Immersion, InducedGeometry};

/// Immersion jets and `V = fξ + ½φ∇f` as parameter jets at `u`.
///
/// The `V` jets carry exact values and first derivatives; their second-order
/// part is not meaningful.
pub fn variation_jets(
    f: &Immersion,
    s: &AmbientStructure,
    pot: &DeformationPotential,
    u: &[f64],
) -> Result<(Vec<Jet>, Vec<Jet>)> {
    let n = f.dim();
    let d = s.dim();
    pot.require_arity(n)?;
    let x = f.jets_at(u)?;
    let fj = pot.expr().jet_at(u)?;
    let xi = s.xi_composed(&x)?;
    let phi = s.phi_composed(&x)?;
    let dx: Vec<Vec<Jet>> = (0..n)
        .map(|a| x.iter().map(|c| c.partial(a)).collect())
        .collect();

    let mut g = vec![Jet::constant(0.0); d * d];
    for i in 0..d {
        for j in i..d {
            let e = s.metric().component(i, j);
            if e.as_constant() == Some(0.0) {
                continue;
            }
            let v = e.eval(&x)?.first_order();
            g[i * d + j] = v;
            g[j * d + i] = v;
        }
    }
    let mut big_g = vec![Jet::constant(0.0); n * n];
    for a in 0..n {
        for b in a..n {
            let mut acc = Jet::constant(0.0);
            for i in 0..d {
                for j in 0..d {
                    if g[i * d + j].val() != 0.0 || g[i * d + j].gradient().iter().any(|v| *v != 0.0) {
                        acc += g[i * d + j] * dx[a][i] * dx[b][j];
                    }
                }
            }
            big_g[a * n + b] = acc;
            big_g[b * n + a] = acc;
        }
    }
    let gv = DMatrix::from_fn(n, n, |a, b| big_g[a * n + b].val());
    let inv = gv.clone().try_inverse().ok_or_else(|| GeometryError::RankDeficient {
        node: u.to_vec(),
        sigma: 0.0,
    })?;
    // ∂_c G⁻¹ = −G⁻¹ ∂_c G G⁻¹
    let dinv: Vec<DMatrix<f64>> = (0..n)
        .map(|c| {
            let dg = DMatrix::from_fn(n, n, |a, b| big_g[a * n + b].grad(c));
            -(&inv * dg * &inv)
        })
        .collect();
    let inv_jet = |a: usize, b: usize| {
        let grad: Vec<f64> = (0..n).map(|c| dinv[c][(a, b)]).collect();
        Jet::from_parts(inv[(a, b)], &grad, |_, _| 0.0)
    };
    let grad_f: Vec<Jet> = (0..n)
        .map(|a| {
            let mut acc = Jet::constant(0.0);
            for b in 0..n {
                acc += inv_jet(a, b) * fj.partial(b);
            }
            acc
        })
        .collect();
    let v = (0..d)
        .map(|k| {
            let mut acc = fj * xi[k];
            for j in 0..d {
                let p = phi[k * d + j];
                if p.val() == 0.0 && p.gradient().iter().all(|c| *c == 0.0) {
                    continue;
                }
                let mut push = Jet::constant(0.0);
                for a in 0..n {
                    push += dx[a][j] * grad_f[a];
                }
                acc += (p * push).scale(0.5);
            }
            acc
        })
        .collect();
    Ok((x, v))
}

/// Variation data at one node.
#[derive(Debug, Clone)]
pub struct NodeVariation {
    pub potential: PotentialAt,
    /// `V` in chart components.
    pub field: DVector<f64>,
    /// `∂_a V` in column `a`.
    pub derivative: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct VariationField {
    pub nodes: Vec<NodeVariation>,
    /// `max |g(V, ∂_a F)|`
    pub normality: f64,
}

/// Tolerance on the Legendrian defect below which an immersion is accepted.
pub(crate) const LEGENDRIAN_TOL: f64 = 1e-8;

pub(crate) fn require_legendrian(f: &Immersion, s: &AmbientStructure, tolerance: f64) -> Result<()> {
    let defect = legendrian_defect(f, s)?;
    if !(defect <= tolerance) {
        return Err(GeometryError::NotLegendrian { defect, tolerance });
    }
    Ok(())
}

/// `V = fξ + ½φ∇f` at every node of `geom`.
pub fn variation_field(
    pot: &DeformationPotential,
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
) -> Result<VariationField> {
    require_legendrian(f, s, LEGENDRIAN_TOL)?;
    let n = f.dim();
    let d = s.dim();
    let mut worst = Worst::default();
    let mut nodes = Vec::with_capacity(geom.nodes.len());
    for node in &geom.nodes {
        let (_, v) = variation_jets(f, s, pot, &node.u)?;
        let field = DVector::from_fn(d, |k, _| v[k].val());
        let derivative = DMatrix::from_fn(d, n, |k, a| v[k].grad(a));
        for a in 0..n {
            worst.see(node.g(&field, &node.tangent(a)));
        }
        nodes.push(NodeVariation {
            potential: pot.at(node)?,
            field,
            derivative,
        });
    }
    Ok(VariationField {
        nodes,
        normality: worst.0,
    })
}
