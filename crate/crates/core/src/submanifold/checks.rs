use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{intrinsic_curvature, InducedGeometry, Immersion, NodeGeometry};
use crate::contact::{random_vector, AmbientStructure};
use crate::error::{GeometryError, Result};
use crate::expr::{Jet, Scalar};
use crate::report::{IdentityReport, Worst};

fn check_dims(f: &Immersion, s: &AmbientStructure) -> Result<()> {
    if f.ambient_dim() != s.dim() || f.dim() != s.n() {
        return Err(GeometryError::Dimension(format!(
            "a Legendrian in a {}-manifold has dimension {} (got a {}-parameter map into {} coordinates)",
            s.dim(),
            s.n(),
            f.dim(),
            f.ambient_dim()
        )));
    }
    Ok(())
}

/// `max |η(∂_a F)|` over quadrature nodes and parameter directions.
pub fn legendrian_defect(f: &Immersion, s: &AmbientStructure) -> Result<f64> {
    check_dims(f, s)?;
    let mut worst = Worst::default();
    for (u, _) in f.nodes() {
        let jets = f.jets_at(&u)?;
        let eta = s.eta_composed(&jets)?;
        for a in 0..f.dim() {
            let v: f64 = eta.iter().zip(&jets).map(|(e, x)| e.val() * x.grad(a)).sum();
            worst.see(v);
        }
    }
    Ok(worst.0)
}

fn gram_det(node: &NodeGeometry, basis: &[DVector<f64>]) -> f64 {
    let k = basis.len();
    DMatrix::from_fn(k, k, |i, j| node.g(&basis[i], &basis[j])).determinant()
}

/// Pointwise properties of the induced geometry of a Legendrian immersion.
pub fn node_identity_checks<R: Rng>(geom: &InducedGeometry, rng: &mut R, tol: f64) -> IdentityReport {
    let mut sym = Worst::default();
    let mut reeb = Worst::default();
    let mut cubic = Worst::default();
    let mut ortho = Worst::default();
    let mut complete = Worst::default();
    for node in &geom.nodes {
        let n = node.dim();
        for a in 0..n {
            for b in 0..n {
                sym.see((node.h(a, b) - node.h(b, a)).amax());
                reeb.see(node.g(node.h(a, b), &node.ambient.xi));
            }
            for b in 0..n {
                let ea = node.frame.column(a).into_owned();
                let eb = node.frame.column(b).into_owned();
                let target = if a == b { node.signs[a] } else { 0.0 };
                ortho.see(node.g(&ea, &eb) - target);
            }
        }
        let (x, y, z) = (random_vector(n, rng), random_vector(n, rng), random_vector(n, rng));
        let c = |p: &DVector<f64>, q: &DVector<f64>, r: &DVector<f64>| {
            node.g(&node.h_on(p, q), &node.ambient.phi_of(&node.push(r)))
        };
        let base = c(&x, &y, &z);
        cubic.see(base - c(&y, &z, &x));
        cubic.see(base - c(&z, &x, &y));
        let mut basis: Vec<DVector<f64>> = (0..n).map(|i| node.frame.column(i).into_owned()).collect();
        basis.extend(node.legendrian_normal_frame());
        complete.see(gram_det(node, &basis).abs() - 1.0);
    }
    let mut r = IdentityReport::new();
    r.push("h_symmetric", "h(X,Y) = h(Y,X)", sym.0, tol);
    r.push("h_orthogonal_to_xi", "g(h(X,Y), ξ) = 0", reeb.0, tol);
    r.push(
        "cubic_form_symmetric",
        "g(h(X,Y), φZ) totally symmetric",
        cubic.0,
        tol,
    );
    r.push("frame_orthonormal", "g(e_i, e_j) = ε_i δ_ij", ortho.0, tol);
    r.push(
        "normal_frame_complete",
        "|det Gram(e_i, ξ, φe_i)| = 1",
        complete.0,
        tol,
    );
    r
}

/// `g(A_V X, Y) = g(h(X,Y), V)` with `A_V X = −(∇̄_X V)^T`, for normal fields
/// `V = c_0 ξ + Σ c_b φ ∂_b F` built from jets.
pub fn shape_operator_check<R: Rng>(
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
    rng: &mut R,
    tol: f64,
) -> Result<IdentityReport> {
    let n = f.dim();
    let d = s.dim();
    let mut worst = Worst::default();
    for node in &geom.nodes {
        let jets = f.jets_at(&node.u)?;
        let xi = s.xi_composed(&jets)?;
        let phi = s.phi_composed(&jets)?;
        let c = random_vector(n + 1, rng);
        let v: Vec<Jet> = (0..d)
            .map(|k| {
                let mut acc = xi[k].scale(c[0]);
                for b in 0..n {
                    for j in 0..d {
                        acc += phi[k * d + j] * jets[j].partial(b).scale(c[b + 1]);
                    }
                }
                acc
            })
            .collect();
        let value = DVector::from_fn(d, |k, _| v[k].val());
        for a in 0..n {
            let dv = DVector::from_fn(d, |k, _| v[k].grad(a));
            let nabla = node.ambient.covariant(&node.tangent(a), &value, &dv);
            for b in 0..n {
                let lhs = -node.g(&nabla, &node.tangent(b));
                worst.see(lhs - node.g(node.h(a, b), &value));
            }
        }
    }
    let mut r = IdentityReport::new();
    r.push(
        "shape_operator",
        "g(A_V X, Y) = g(h(X,Y), V), A_V X = −(∇̄_X V)^T",
        worst.0,
        tol,
    );
    Ok(r)
}

/// Gauss equation at up to `samples` nodes with random tangent arguments:
/// `R̄m(A,B,C,D) = Rm(A,B,C,D) − g(h(B,C),h(A,D)) + g(h(A,C),h(B,D))`.
pub fn gauss_equation_check<R: Rng>(
    f: &Immersion,
    s: &AmbientStructure,
    geom: &InducedGeometry,
    samples: usize,
    rng: &mut R,
    step: f64,
    tol: f64,
) -> Result<IdentityReport> {
    let n = f.dim();
    let mut worst = Worst::default();
    let stride = (geom.nodes.len() / samples.max(1)).max(1);
    for node in geom.nodes.iter().step_by(stride).take(samples) {
        let intrinsic = if n > 1 {
            // shrink the stencil where the parametrization degenerates
            let sv = node.df.clone().svd(false, false).singular_values;
            let h = step * (sv.min() / sv.max()).min(1.0);
            Some(intrinsic_curvature(f, s, &node.u, h)?)
        } else {
            None
        };
        for _ in 0..3 {
            let p: Vec<DVector<f64>> = (0..4).map(|_| random_vector(n, rng)).collect();
            let amb = node.ambient.rm(
                &node.push(&p[0]),
                &node.push(&p[1]),
                &node.push(&p[2]),
                &node.push(&p[3]),
            );
            let rm = intrinsic
                .as_ref()
                .map_or(0.0, |c| c.rm(&p[0], &p[1], &p[2], &p[3]));
            let rhs = rm - node.g(&node.h_on(&p[1], &p[2]), &node.h_on(&p[0], &p[3]))
                + node.g(&node.h_on(&p[0], &p[2]), &node.h_on(&p[1], &p[3]));
            worst.see(amb - rhs);
        }
    }
    let mut r = IdentityReport::new();
    r.push(
        "gauss_equation",
        "R̄m(A,B,C,D) = Rm(A,B,C,D) − g(h(B,C),h(A,D)) + g(h(A,C),h(B,D))",
        worst.0,
        tol,
    );
    Ok(r)
}

/// `Σ ε_i R̄m(φe_i, ξ, ξ, φe_i) = n` and `Σ ε_i R̄m(φe_i, ξ, φe_i, V) = 0`
/// for horizontal `V`.
pub fn trace_curvature_check<R: Rng>(geom: &InducedGeometry, rng: &mut R, tol: f64) -> IdentityReport {
    let mut trace = Worst::default();
    let mut mixed = Worst::default();
    for node in &geom.nodes {
        let n = node.dim();
        let amb = &node.ambient;
        let v = amb.horizontal(&random_vector(amb.dim(), rng));
        let (mut t, mut m) = (0.0, 0.0);
        for i in 0..n {
            let pe = amb.phi_of(&node.frame.column(i).into_owned());
            t += node.signs[i] * amb.rm(&pe, &amb.xi, &amb.xi, &pe);
            m += node.signs[i] * amb.rm(&pe, &amb.xi, &pe, &v);
        }
        trace.see(t - n as f64);
        mixed.see(m);
    }
    let mut r = IdentityReport::new();
    r.push("trace_curvature", "Σ ε_i R̄m(φe_i, ξ, ξ, φe_i) = n", trace.0, tol);
    r.push(
        "trace_curvature_horizontal",
        "Σ ε_i R̄m(φe_i, ξ, φe_i, V_H) = 0",
        mixed.0,
        tol,
    );
    r
}
