use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{GeometryError, Result};
use crate::expr::{ScalarExpr, VarSpace};
use crate::submanifold::{Axis, NodeGeometry};

/// A function `f` on the parameter domain of `L` generating `V = fξ + ½φ∇f`.
#[derive(Debug, Clone)]
pub struct DeformationPotential {
    pub label: String,
    expr: ScalarExpr,
}

/// `f` and its induced-metric derivatives at one node.
#[derive(Debug, Clone)]
pub struct PotentialAt {
    pub value: f64,
    /// `∂_a f`
    pub partials: DVector<f64>,
    /// Parameter components `G^{ab} ∂_b f` of `∇f`.
    pub gradient: DVector<f64>,
    pub grad_norm2: f64,
    /// Covariant Hessian `∂_a∂_b f − Γ^c_ab ∂_c f`.
    pub hessian: DMatrix<f64>,
    pub hessian_norm2: f64,
    /// `Δf = −G^{ab} ∇²_ab f`, nonnegative spectrum.
    pub laplacian: f64,
}

impl DeformationPotential {
    pub fn new(label: impl Into<String>, expr: ScalarExpr) -> Self {
        Self {
            label: label.into(),
            expr,
        }
    }

    /// Parses `f` as an expression in `u0, …, u{n-1}`.
    pub fn parse(source: &str, n: usize) -> Result<Self> {
        let expr = ScalarExpr::parse(source, &VarSpace::parameters(n))?;
        Ok(Self::new(source, expr))
    }

    pub fn expr(&self) -> &ScalarExpr {
        &self.expr
    }

    pub(crate) fn require_arity(&self, n: usize) -> Result<()> {
        if self.expr.arity() != n {
            return Err(GeometryError::Dimension(format!(
                "potential '{}' takes {} parameters, the immersion has {n}",
                self.label,
                self.expr.arity()
            )));
        }
        Ok(())
    }

    pub fn at(&self, node: &NodeGeometry) -> Result<PotentialAt> {
        self.require_arity(node.dim())?;
        let n = node.dim();
        let jet = self.expr.jet_at(&node.u)?;
        let partials = DVector::from_fn(n, |a, _| jet.grad(a));
        let gradient = node.gradient(partials.as_slice());
        let grad_norm2 = partials.dot(&gradient);
        let hessian = DMatrix::from_fn(n, n, |a, b| {
            let mut v = jet.hess(a, b);
            for c in 0..n {
                v -= node.gamma(c, a, b) * partials[c];
            }
            v
        });
        let mixed = node.inverse_metric() * &hessian;
        Ok(PotentialAt {
            value: jet.val(),
            partials,
            gradient,
            grad_norm2,
            hessian_norm2: (&mixed * &mixed).trace(),
            laplacian: -mixed.trace(),
            hessian,
        })
    }
}

/// Random trigonometric polynomial on a box of periodic axes: constant term
/// plus `cos`/`sin` modes with integer wave numbers up to `max_freq` per axis,
/// amplitudes drawn from `[−1, 1]` and damped by `1 / (1 + |k|²)`.
pub fn random_trig_potential<R: Rng>(
    label: &str,
    axes: &[Axis],
    max_freq: i32,
    rng: &mut R,
) -> Result<DeformationPotential> {
    let n = axes.len();
    if let Some(axis) = axes.iter().position(|a| !a.periodic) {
        return Err(GeometryError::NotClosed { axis });
    }
    let mut terms = vec![format!("{:?}", rng.gen_range(-1.0..1.0))];
    let width = (2 * max_freq + 1) as usize;
    for flat in 0..width.pow(n as u32) {
        let mut k = vec![0i32; n];
        let mut r = flat;
        for ka in k.iter_mut() {
            *ka = (r % width) as i32 - max_freq;
            r /= width;
        }
        // one representative of each ±k pair
        match k.iter().find(|&&c| c != 0) {
            Some(&c) if c > 0 => {}
            _ => continue,
        }
        let damp = 1.0 / (1.0 + k.iter().map(|c| (c * c) as f64).sum::<f64>());
        let arg = k
            .iter()
            .zip(axes)
            .enumerate()
            .filter(|(_, (c, _))| **c != 0)
            .map(|(a, (c, ax))| format!("{:?}*u{a}", TAU * *c as f64 / ax.len()))
            .collect::<Vec<_>>()
            .join("+");
        let (p, q) = (rng.gen_range(-1.0..1.0) * damp, rng.gen_range(-1.0..1.0) * damp);
        terms.push(format!("{p:?}*cos({arg})"));
        terms.push(format!("{q:?}*sin({arg})"));
    }
    let source = terms.join("+");
    let expr = ScalarExpr::parse(&source, &VarSpace::parameters(n))?;
    Ok(DeformationPotential::new(label, expr))
}
