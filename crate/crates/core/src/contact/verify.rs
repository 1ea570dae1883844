use nalgebra::DVector;
use rand::Rng;

use super::{random_vector, AmbientPoint, AmbientStructure};
use crate::error::Result;
use crate::report::{IdentityReport, Worst};

/// Absolute tolerances for the three families of pointwise checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Algebraic axioms (no derivatives).
    pub algebraic: f64,
    /// Identities involving the connection.
    pub differential: f64,
    /// Identities involving curvature.
    pub curvature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: 1e-8,
            differential: 1e-7,
            curvature: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn scaled(self, s: f64) -> Self {
        Self {
            algebraic: self.algebraic * s,
            differential: self.differential * s,
            curvature: self.curvature * s,
        }
    }
}

/// Random arguments drawn per sample point.
const DRAWS: usize = 3;

fn amax(v: DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Algebraic axioms of an almost contact metric structure, plus `dη = 2g(φ·,·)`.
pub fn structure_axioms<R: Rng>(
    s: &AmbientStructure,
    sample: &[Vec<f64>],
    rng: &mut R,
    tol: Tolerances,
) -> Result<IdentityReport> {
    let d = s.dim();
    let mut signature = Worst::default();
    let mut eta_xi = Worst::default();
    let mut phi_sq = Worst::default();
    let mut xi_norm = Worst::default();
    let mut dual = Worst::default();
    let mut isometry = Worst::default();
    let mut skew = Worst::default();
    let mut d_eta = Worst::default();
    for p in sample {
        signature.see(match s.metric().check_signature(p) {
            Ok(()) => 0.0,
            Err(_) => 1.0,
        });
        let pt = s.at(p)?;
        let eps = pt.epsilon;
        eta_xi.see(pt.eta_of(&pt.xi) - 1.0);
        xi_norm.see(pt.g(&pt.xi, &pt.xi) - eps);
        dual.see(amax(pt.geometry.lower(&pt.xi) * eps - &pt.eta));
        for _ in 0..DRAWS {
            let x = random_vector(d, rng);
            let y = random_vector(d, rng);
            let phi2 = pt.phi_of(&pt.phi_of(&x));
            phi_sq.see(amax(phi2 + &x - &pt.xi * pt.eta_of(&x)));
            let (px, py) = (pt.phi_of(&x), pt.phi_of(&y));
            isometry.see(pt.g(&px, &py) - pt.g(&x, &y) + eps * pt.eta_of(&x) * pt.eta_of(&y));
            skew.see(pt.g(&px, &y) + pt.g(&x, &py));
            // dη(X, Y) = X^i Y^j (∂_i η_j − ∂_j η_i)
            let deta = x.dot(&(&pt.deta.transpose() * &y)) - y.dot(&(&pt.deta.transpose() * &x));
            d_eta.see(deta - 2.0 * pt.g(&px, &y));
        }
    }
    let mut r = IdentityReport::new();
    r.push("metric_signature", "sign(eig g) = declared signature", signature.0, 0.0);
    r.push("eta_of_xi", "η(ξ) = 1", eta_xi.0, tol.algebraic);
    r.push("phi_squared", "φ² = −id + η⊗ξ", phi_sq.0, tol.algebraic);
    r.push("xi_norm", "g(ξ,ξ) = ε", xi_norm.0, tol.algebraic);
    r.push("eta_is_dual_of_xi", "η(X) = ε g(ξ,X)", dual.0, tol.algebraic);
    r.push(
        "phi_compatible",
        "g(φX,φY) = g(X,Y) − ε η(X)η(Y)",
        isometry.0,
        tol.algebraic,
    );
    r.push("phi_skew", "g(φX,Y) = −g(X,φY)", skew.0, tol.algebraic);
    r.push("d_eta", "dη = 2 g(φ·,·)", d_eta.0, tol.differential);
    Ok(r)
}

/// The structure axioms together with the normality condition on `∇φ` and
/// its immediate consequences for `ξ`.
pub fn verify_sasakian<R: Rng>(
    s: &AmbientStructure,
    sample: &[Vec<f64>],
    rng: &mut R,
    tol: Tolerances,
) -> Result<IdentityReport> {
    let mut report = structure_axioms(s, sample, rng, tol)?;
    let d = s.dim();
    let mut nabla_phi = Worst::default();
    let mut nabla_xi = Worst::default();
    let mut killing = Worst::default();
    for p in sample {
        let pt = s.at(p)?;
        let eps = pt.epsilon;
        for _ in 0..DRAWS {
            let x = random_vector(d, rng);
            let y = random_vector(d, rng);
            let lhs = pt.nabla_phi(&x, &y);
            let rhs = &x * (eps * pt.eta_of(&y)) - &pt.xi * pt.g(&x, &y);
            nabla_phi.see(amax(lhs - rhs));
            let nx = pt.nabla_xi(&x);
            nabla_xi.see(amax(&nx - pt.phi_of(&x) * eps));
            killing.see(pt.g(&nx, &y) + pt.g(&pt.nabla_xi(&y), &x));
        }
    }
    report.push(
        "nabla_phi",
        "(∇_X φ)Y = ε η(Y)X − g(X,Y)ξ",
        nabla_phi.0,
        tol.differential,
    );
    report.push("nabla_xi", "∇_X ξ = ε φX", nabla_xi.0, tol.differential);
    report.push(
        "xi_killing",
        "g(∇_X ξ, Y) + g(∇_Y ξ, X) = 0",
        killing.0,
        tol.differential,
    );
    Ok(report)
}

/// How the correction terms of the `φ`-commutator of curvature are grouped
/// with `ε`. The two readings agree when `ε = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiCommutatorGrouping {
    /// `R(X,Y)φZ = φR(X,Y)Z + ε(−g(φY,Z)X + g(φX,Z)Y − g(Y,Z)φX + g(X,Z)φY)`
    EpsilonAll,
    /// `R(X,Y)φZ = φR(X,Y)Z + ε(−g(φY,Z)X + g(φX,Z)Y) − g(Y,Z)φX + g(X,Z)φY`
    EpsilonFirstPair,
}

pub fn phi_commutator_residual(
    pt: &AmbientPoint,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
    grouping: PhiCommutatorGrouping,
) -> f64 {
    let eps = pt.epsilon;
    let lhs = pt.r_apply(x, y, &pt.phi_of(z));
    let first = x * (-pt.g(&pt.phi_of(y), z)) + y * pt.g(&pt.phi_of(x), z);
    let second = pt.phi_of(x) * (-pt.g(y, z)) + pt.phi_of(y) * pt.g(x, z);
    let correction = match grouping {
        PhiCommutatorGrouping::EpsilonAll => (first + second) * eps,
        PhiCommutatorGrouping::EpsilonFirstPair => first * eps + second,
    };
    amax(lhs - pt.phi_of(&pt.r_apply(x, y, z)) - correction)
}

/// Derivative and curvature identities that hold on every pseudo-Sasakian
/// manifold.
pub fn curvature_identity_suite<R: Rng>(
    s: &AmbientStructure,
    sample: &[Vec<f64>],
    rng: &mut R,
    tol: Tolerances,
) -> Result<IdentityReport> {
    let d = s.dim();
    let n = s.n() as f64;
    let mut omega = Worst::default();
    let mut nabla_omega = Worst::default();
    let mut r_xi = Worst::default();
    let mut rm_xi = Worst::default();
    let mut ric_xi = Worst::default();
    let mut commutator = Worst::default();
    for p in sample {
        let pt = s.at(p)?;
        let eps = pt.epsilon;
        ric_xi.see(pt.ricci(&pt.xi, &pt.xi) - 2.0 * n);
        let nabla_omega_at = omega_derivative(s, &pt);
        for _ in 0..DRAWS {
            let x = random_vector(d, rng);
            let y = random_vector(d, rng);
            let z = random_vector(d, rng);
            let g_phix_y = pt.g(&pt.phi_of(&x), &y);
            omega.see(pt.nabla_eta(&x, &y) - g_phix_y);

            let lhs = nabla_omega_at(&x, &y, &z);
            let rhs = eps * pt.g(&x, &z) * pt.eta_of(&y) - eps * pt.g(&x, &y) * pt.eta_of(&z);
            nabla_omega.see(lhs - rhs);

            let rxy = pt.r_apply(&x, &y, &pt.xi);
            r_xi.see(amax(rxy - &x * pt.eta_of(&y) + &y * pt.eta_of(&x)));

            let rm = pt.rm(&x, &pt.xi, &pt.xi, &y);
            rm_xi.see(rm - pt.g(&x, &y) + eps * pt.eta_of(&x) * pt.eta_of(&y));

            commutator.see(phi_commutator_residual(
                &pt,
                &x,
                &y,
                &z,
                PhiCommutatorGrouping::EpsilonAll,
            ));
        }
    }
    let mut r = IdentityReport::new();
    r.push("omega_is_nabla_eta", "ω(X,Y) = (∇_X η)Y = g(φX,Y)", omega.0, tol.differential);
    r.push(
        "nabla_omega",
        "(∇_X ω)(Y,Z) = ε g(X,Z)η(Y) − ε g(X,Y)η(Z)",
        nabla_omega.0,
        tol.differential,
    );
    r.push("curvature_on_xi", "R(X,Y)ξ = η(Y)X − η(X)Y", r_xi.0, tol.curvature);
    r.push(
        "curvature_xi_xi",
        "Rm(X,ξ,ξ,Y) = g(X,Y) − ε η(X)η(Y)",
        rm_xi.0,
        tol.curvature,
    );
    r.push("ricci_xi_xi", "Ric(ξ,ξ) = 2n", ric_xi.0, tol.curvature);
    r.push(
        "curvature_phi_commutator",
        "R(X,Y)φZ = φR(X,Y)Z + ε(−g(φY,Z)X + g(φX,Z)Y − g(Y,Z)φX + g(X,Z)φY)",
        commutator.0,
        tol.curvature,
    );
    Ok(r)
}

/// `(∇_X ω)(Y, Z)` from the jets of the components `ω_jl = g_al φ^a_j`,
/// independently of the `∇φ` route.
fn omega_derivative(
    s: &AmbientStructure,
    pt: &AmbientPoint,
) -> impl Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64 {
    let d = s.dim();
    let g = &pt.geometry;
    // ω_jl and ∂_k ω_jl
    let mut w = vec![0.0; d * d];
    let mut dw = vec![0.0; d * d * d];
    for j in 0..d {
        for l in 0..d {
            let mut v = 0.0;
            for a in 0..d {
                v += g.g[(a, l)] * pt.phi[(a, j)];
                for k in 0..d {
                    dw[(k * d + j) * d + l] +=
                        g.jets.dg(k, a, l) * pt.phi[(a, j)] + g.g[(a, l)] * pt.dphi[k][(a, j)];
                }
            }
            w[j * d + l] = v;
        }
    }
    let gamma = g.connection.clone();
    move |x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>| {
        // (∇_k ω)_jl = ∂_k ω_jl − Γ^m_kj ω_ml − Γ^m_kl ω_jm
        let mut s = 0.0;
        for k in 0..d {
            if x[k] == 0.0 {
                continue;
            }
            for j in 0..d {
                for l in 0..d {
                    let mut c = dw[(k * d + j) * d + l];
                    for m in 0..d {
                        c -= gamma.get(m, k, j) * w[m * d + l] + gamma.get(m, k, l) * w[j * d + m];
                    }
                    s += x[k] * y[j] * z[l] * c;
                }
            }
        }
        s
    }
}
