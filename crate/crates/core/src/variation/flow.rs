use nalgebra::{DMatrix, DVector};

use super::DeformationPotential;
use crate::contact::AmbientStructure;
use crate::error::{GeometryError, Result};
use crate::expr::{Jet, Scalar};
use crate::report::Worst;
use crate::submanifold::Immersion;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Largest RK4 step in `t`.
    pub max_step: f64,
    /// Parameter step of the stencil used for `∂_a F_t`.
    pub stencil: f64,
    /// Accepted Legendrian defect is `legendrian_tol · (1 + |t|)`.
    pub legendrian_tol: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            max_step: 5e-3,
            stencil: 1e-3,
            legendrian_tol: 1e-6,
            newton_tol: 1e-13,
            max_newton: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowedNode {
    pub u: Vec<f64>,
    pub weight: f64,
    pub x: DVector<f64>,
    pub df: DMatrix<f64>,
}

/// `L_t` sampled at the quadrature nodes of `L`.
#[derive(Debug, Clone)]
pub struct FlowedImmersion {
    pub t: f64,
    pub nodes: Vec<FlowedNode>,
}

impl FlowedImmersion {
    pub fn volume(&self, s: &AmbientStructure) -> Result<f64> {
        let mut vol = 0.0;
        for node in &self.nodes {
            let g = s.metric().value_at(node.x.as_slice())?;
            let big_g = node.df.transpose() * g * &node.df;
            if big_g.clone().cholesky().is_none() {
                return Err(GeometryError::NotSpacelike {
                    node: node.u.clone(),
                });
            }
            vol += node.weight * big_g.determinant().sqrt();
        }
        Ok(vol)
    }

    /// `max |η(∂_a F_t)|`
    pub fn legendrian_defect(&self, s: &AmbientStructure) -> Result<f64> {
        let mut worst = Worst::default();
        for node in &self.nodes {
            for a in 0..node.df.ncols() {
                let mut v = 0.0;
                for (i, e) in s.eta().iter().enumerate() {
                    v += e.eval_f64(node.x.as_slice())? * node.df[(i, a)];
                }
                worst.see(v);
            }
        }
        Ok(worst.0)
    }
}

/// Extension of `f` off `L` that is constant on the fibres of the tubular map
/// `Ψ(p, s) = F(p) + s₀ ξ + Σ_b s_b φ ∂_b F`.
struct Extension<'a> {
    f: &'a Immersion,
    s: &'a AmbientStructure,
    pot: &'a DeformationPotential,
    opts: FlowOptions,
}

impl Extension<'_> {
    /// `Ψ(p, s)` and its Jacobian, columns ordered `(p, s)`.
    fn tube(&self, q: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.f.dim();
        let d = self.s.dim();
        let (p, sv) = q.split_at(n);
        let x = self.f.jets_at(p)?;
        let xi = self.s.xi_composed(&x)?;
        let phi = self.s.phi_composed(&x)?;
        let mut val = DVector::zeros(d);
        let mut jac = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut c: Jet = x[k] + xi[k].scale(sv[0]);
            jac[(k, n)] = xi[k].val();
            for b in 0..n {
                let mut col = Jet::constant(0.0);
                for j in 0..d {
                    col += phi[k * d + j] * x[j].partial(b);
                }
                c += col.scale(sv[b + 1]);
                jac[(k, n + 1 + b)] = col.val();
            }
            val[k] = c.val();
            for a in 0..n {
                jac[(k, a)] = c.grad(a);
            }
        }
        Ok((val, jac))
    }

    /// Newton solve of `Ψ(q) = x` from `q`; returns `DΨ(q)⁻¹`.
    fn invert(&self, x: &DVector<f64>, q: &mut [f64], t: f64) -> Result<DMatrix<f64>> {
        for _ in 0..self.opts.max_newton {
            let (val, jac) = self.tube(q)?;
            let inv = jac.try_inverse().ok_or_else(|| GeometryError::Flow {
                t,
                reason: "tubular map is singular".into(),
            })?;
            let delta = &inv * (val - x);
            for (c, dc) in q.iter_mut().zip(delta.iter()) {
                *c -= dc;
            }
            if delta.amax() <= self.opts.newton_tol * (1.0 + x.amax()) {
                return Ok(self.tube(q)?.1.try_inverse().unwrap_or(inv));
            }
        }
        Err(GeometryError::Flow {
            t,
            reason: format!("tubular inversion did not converge at x = {:?}", x.as_slice()),
        })
    }

    /// `X_u = uξ + ½φ∇u` at `x`.
    fn field(&self, x: &DVector<f64>, q: &mut [f64], t: f64) -> Result<DVector<f64>> {
        let n = self.f.dim();
        let d = self.s.dim();
        let inv = self.invert(x, q, t)?;
        let fj = self.pot.expr().jet_at(&q[..n])?;
        let mut du = DVector::zeros(d);
        for a in 0..n {
            du += inv.row(a).transpose() * fj.grad(a);
        }
        let pt = x.as_slice();
        let g = self.s.metric().value_at(pt)?;
        let grad = g.lu().solve(&du).ok_or(GeometryError::SingularMetric { point: pt.to_vec() })?;
        let mut out = DVector::zeros(d);
        for i in 0..d {
            let mut acc = fj.val() * self.s.xi()[i].eval_f64(pt)?;
            for j in 0..d {
                if grad[j] != 0.0 {
                    acc += 0.5 * self.s.phi(i, j).eval_f64(pt)? * grad[j];
                }
            }
            out[i] = acc;
        }
        Ok(out)
    }
}

/// Flows the nodes of `f` for time `t` along the contact Hamiltonian field
/// `X_u = uξ + ½φ∇u` of the extension `u` of the potential. Its normal part on
/// `L` is `V = fξ + ½φ∇f`, and contact flows carry Legendrians to Legendrians.
pub fn flow(
    f: &Immersion,
    s: &AmbientStructure,
    pot: &DeformationPotential,
    t: f64,
    opts: FlowOptions,
) -> Result<FlowedImmersion> {
    f.require_closed()?;
    pot.require_arity(f.dim())?;
    super::field::require_legendrian(f, s, super::field::LEGENDRIAN_TOL)?;
    let n = f.dim();
    let d = s.dim();
    let ext = Extension { f, s, pot, opts };
    let steps = ((t.abs() / opts.max_step).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let h = opts.stencil;
    let offsets = [-2.0, -1.0, 1.0, 2.0];

    let mut nodes = Vec::new();
    for (u, weight) in f.nodes() {
        // the node itself, then ±h, ±2h along each axis
        let mut starts = vec![u.clone()];
        for a in 0..n {
            for &o in &offsets {
                let mut q = u.clone();
                q[a] += o * h;
                starts.push(q);
            }
        }
        let mut ends = Vec::with_capacity(starts.len());
        for p in starts {
            let mut x = f.point(&p)?;
            let mut q: Vec<f64> = p.iter().copied().chain(std::iter::repeat(0.0).take(d - n)).collect();
            let mut time = 0.0;
            for _ in 0..steps {
                let k1 = ext.field(&x, &mut q, time)?;
                let k2 = ext.field(&(&x + &k1 * (0.5 * dt)), &mut q, time)?;
                let k3 = ext.field(&(&x + &k2 * (0.5 * dt)), &mut q, time)?;
                let k4 = ext.field(&(&x + &k3 * dt), &mut q, time)?;
                x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                time += dt;
            }
            ends.push(x);
        }
        let mut df = DMatrix::zeros(d, n);
        for a in 0..n {
            let e = &ends[1 + 4 * a..5 + 4 * a];
            let col = (&e[0] - &e[3] + (&e[2] - &e[1]) * 8.0) / (12.0 * h);
            df.set_column(a, &col);
        }
        nodes.push(FlowedNode {
            u,
            weight,
            x: ends.swap_remove(0),
            df,
        });
    }
    let out = FlowedImmersion { t, nodes };
    let defect = out.legendrian_defect(s)?;
    let tol = opts.legendrian_tol * (1.0 + t.abs());
    if !(defect <= tol) {
        return Err(GeometryError::Flow {
            t,
            reason: format!("Legendrian defect {defect:e} exceeds {tol:e}"),
        });
    }
    Ok(out)
}
