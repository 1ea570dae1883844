use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{variation_jets, DeformationPotential};
use crate::contact::AmbientStructure;
use crate::error::{GeometryError, Result};
use crate::report::Worst;
use crate::submanifold::Immersion;

/// How the one-parameter family `L_t` is produced for the volume oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Realization {
    /// `F + tV + ½t²W`, Legendrian up to `O(t³)`.
    #[default]
    Spray,
    /// Flow of the contact Hamiltonian field of an extension of `f`.
    ContactFlow,
}

/// Finite-difference derivative on a ladder of halving steps with Richardson
/// extrapolation of the last two rungs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdEstimate {
    pub steps: Vec<f64>,
    pub estimates: Vec<f64>,
    pub extrapolated: f64,
    /// Observed order `log₂(|D₀ − D₁| / |D₁ − D₂|)` when the differences are
    /// above the roundoff floor.
    pub order: Option<f64>,
    /// Order at least 2, or rung differences already at roundoff level.
    pub converged: bool,
}

const STENCIL_ORDER: i32 = 4;

struct Cache<F> {
    f: F,
    seen: Vec<(f64, f64)>,
}

impl<F: FnMut(f64) -> Result<f64>> Cache<F> {
    fn get(&mut self, t: f64) -> Result<f64> {
        if let Some(&(_, v)) = self.seen.iter().find(|(s, _)| *s == t) {
            return Ok(v);
        }
        let v = (self.f)(t)?;
        self.seen.push((t, v));
        Ok(v)
    }
}

fn ladder(h: f64, levels: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) || levels < 2 {
        return Err(GeometryError::InvalidParameter(format!(
            "difference ladder needs a positive step and at least 2 levels (got {h}, {levels})"
        )));
    }
    Ok((0..levels).map(|j| h / f64::powi(2.0, j as i32)).collect())
}

fn assemble(steps: Vec<f64>, estimates: Vec<f64>, floor: f64) -> FdEstimate {
    let m = estimates.len();
    let factor = f64::powi(2.0, STENCIL_ORDER) - 1.0;
    let extrapolated = estimates[m - 1] + (estimates[m - 1] - estimates[m - 2]) / factor;
    let (order, converged) = if m >= 3 {
        let d01 = (estimates[m - 3] - estimates[m - 2]).abs();
        let d12 = (estimates[m - 2] - estimates[m - 1]).abs();
        if d01 <= floor {
            (None, true)
        } else {
            let p = (d01 / d12.max(floor)).log2();
            (Some(p), p >= 2.0)
        }
    } else {
        (None, true)
    };
    FdEstimate {
        steps,
        estimates,
        extrapolated,
        order,
        converged,
    }
}

/// `v''(0)` from the five-point stencil at `±h, ±2h` on `levels` halvings of `h`.
pub fn second_derivative(
    v: impl FnMut(f64) -> Result<f64>,
    h: f64,
    levels: usize,
) -> Result<FdEstimate> {
    let steps = ladder(h, levels)?;
    let mut c = Cache {
        f: v,
        seen: Vec::new(),
    };
    let v0 = c.get(0.0)?;
    let mut est = Vec::with_capacity(levels);
    for &s in &steps {
        let num = -c.get(2.0 * s)? + 16.0 * c.get(s)? - 30.0 * v0 + 16.0 * c.get(-s)?
            - c.get(-2.0 * s)?;
        est.push(num / (12.0 * s * s));
    }
    let hmin = steps[levels - 1];
    let floor = 64.0 * f64::EPSILON * v0.abs().max(1.0) / (hmin * hmin);
    Ok(assemble(steps, est, floor))
}

/// `v'(0)` from the five-point stencil at `±h, ±2h`.
pub fn first_derivative(
    v: impl FnMut(f64) -> Result<f64>,
    h: f64,
    levels: usize,
) -> Result<FdEstimate> {
    let steps = ladder(h, levels)?;
    let mut c = Cache {
        f: v,
        seen: Vec::new(),
    };
    let v0 = c.get(0.0)?;
    let mut est = Vec::with_capacity(levels);
    for &s in &steps {
        let num = -c.get(2.0 * s)? + 8.0 * c.get(s)? - 8.0 * c.get(-s)? + c.get(-2.0 * s)?;
        est.push(num / (12.0 * s));
    }
    let floor = 32.0 * f64::EPSILON * v0.abs().max(1.0) / steps[levels - 1];
    Ok(assemble(steps, est, floor))
}

/// Position, velocity and acceleration of the spray at one node.
#[derive(Debug, Clone)]
pub struct SprayField {
    pub u: Vec<f64>,
    pub weight: f64,
    pub x: DVector<f64>,
    pub df: DMatrix<f64>,
    pub v: DVector<f64>,
    pub dv: DMatrix<f64>,
    pub w: DVector<f64>,
    pub dw: DMatrix<f64>,
}

/// `F_t = F + tV + ½t²W` in chart coordinates, with `W = −φT` and `T` the
/// tangent field solving `g(T, ∂_a F) = −Q_a`, where
/// `Q_a = ∂_kη_i V^k ∂_aV^i + ½ ∂_k∂_lη_i V^k V^l ∂_aF^i`.
/// This cancels the `t²` term of `F_t^*η`.
#[derive(Debug, Clone)]
pub struct SprayOracle {
    pub nodes: Vec<SprayField>,
}

const ACCEL_STEP: f64 = 1e-3;

fn spray_point(
    f: &Immersion,
    s: &AmbientStructure,
    pot: &DeformationPotential,
    u: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>, DVector<f64>)> {
    let n = f.dim();
    let d = s.dim();
    let (xj, vj) = variation_jets(f, s, pot, u)?;
    let x = DVector::from_fn(d, |k, _| xj[k].val());
    let df = DMatrix::from_fn(d, n, |k, a| xj[k].grad(a));
    let v = DVector::from_fn(d, |k, _| vj[k].val());
    let dv = DMatrix::from_fn(d, n, |k, a| vj[k].grad(a));
    let mut q = DVector::zeros(n);
    for (i, e) in s.eta().iter().enumerate() {
        let eta = e.jet_at(x.as_slice())?;
        let mut first = 0.0;
        let mut second = 0.0;
        for k in 0..d {
            first += eta.grad(k) * v[k];
            for l in 0..d {
                second += eta.hess(k, l) * v[k] * v[l];
            }
        }
        for a in 0..n {
            q[a] += first * dv[(i, a)] + 0.5 * second * df[(i, a)];
        }
    }
    let g = s.metric().value_at(x.as_slice())?;
    let big_g = df.transpose() * &g * &df;
    let coeffs = big_g
        .lu()
        .solve(&(-q))
        .ok_or_else(|| GeometryError::RankDeficient {
            node: u.to_vec(),
            sigma: 0.0,
        })?;
    let t = &df * coeffs;
    let phi = DMatrix::from_fn(d, d, |i, j| s.phi(i, j).eval_f64(x.as_slice()).unwrap_or(f64::NAN));
    let w = -(phi * t);
    if w.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::Structure(format!(
            "spray acceleration not finite at u = {u:?}"
        )));
    }
    Ok((x, df, v, dv, w))
}

impl SprayOracle {
    pub fn new(f: &Immersion, s: &AmbientStructure, pot: &DeformationPotential) -> Result<Self> {
        let n = f.dim();
        let mut nodes = Vec::new();
        for (u, weight) in f.nodes() {
            let (x, df, v, dv, w) = spray_point(f, s, pot, &u)?;
            let mut dw = DMatrix::zeros(s.dim(), n);
            for a in 0..n {
                let shifted = |k: f64| -> Result<DVector<f64>> {
                    let mut q = u.clone();
                    q[a] += k * ACCEL_STEP;
                    Ok(spray_point(f, s, pot, &q)?.4)
                };
                let col = (shifted(-2.0)? - shifted(2.0)? + (shifted(1.0)? - shifted(-1.0)?) * 8.0)
                    / (12.0 * ACCEL_STEP);
                dw.set_column(a, &col);
            }
            nodes.push(SprayField {
                u,
                weight,
                x,
                df,
                v,
                dv,
                w,
                dw,
            });
        }
        Ok(Self { nodes })
    }

    fn at(node: &SprayField, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let x = &node.x + &node.v * t + &node.w * (0.5 * t * t);
        let df = &node.df + &node.dv * t + &node.dw * (0.5 * t * t);
        (x, df)
    }

    pub fn volume(&self, s: &AmbientStructure, t: f64) -> Result<f64> {
        let mut vol = 0.0;
        for node in &self.nodes {
            let (x, df) = Self::at(node, t);
            let g = s.metric().value_at(x.as_slice())?;
            vol += node.weight * (df.transpose() * g * df).determinant().abs().sqrt();
        }
        Ok(vol)
    }

    /// `max |η(∂_a F_t)|`
    pub fn legendrian_defect(&self, s: &AmbientStructure, t: f64) -> Result<f64> {
        let mut worst = Worst::default();
        for node in &self.nodes {
            let (x, df) = Self::at(node, t);
            let eta = DVector::from_iterator(
                s.dim(),
                s.eta()
                    .iter()
                    .map(|e| e.eval_f64(x.as_slice()))
                    .collect::<std::result::Result<Vec<_>, _>>()?,
            );
            for a in 0..df.ncols() {
                worst.see(eta.dot(&df.column(a)));
            }
        }
        Ok(worst.0)
    }

    /// `max √|g(V, V)|` over nodes.
    pub fn speed(&self, s: &AmbientStructure) -> Result<f64> {
        let mut m: f64 = 0.0;
        for node in &self.nodes {
            let g = s.metric().value_at(node.x.as_slice())?;
            m = m.max(node.v.dot(&(g * &node.v)).abs().sqrt());
        }
        Ok(m)
    }
}
