//! Almost contact metric structures `(ξ, η, φ, g, ε)` on a chart.

mod catalog;
mod einstein;
mod verify;

pub use catalog::{model_catalog, MODEL_NAMES};
pub use einstein::{eta_einstein_constants, EinsteinFit};
pub use verify::{
    curvature_identity_suite, phi_commutator_residual, structure_axioms, verify_sasakian,
    PhiCommutatorGrouping, Tolerances,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{GeometryError, Result};
use crate::expr::{Jet, ScalarExpr, VarSpace};
use crate::tensor::{MetricField, PointGeometry};

/// A pseudo-Sasakian candidate on a chart of dimension `2n + 1`.
#[derive(Debug, Clone)]
pub struct AmbientStructure {
    pub name: String,
    n: usize,
    metric: MetricField,
    xi: Vec<ScalarExpr>,
    eta: Vec<ScalarExpr>,
    // φ^i_j stored at [i * d + j]
    phi: Vec<ScalarExpr>,
    epsilon: i8,
    domain: Vec<(f64, f64)>,
}

impl AmbientStructure {
    pub fn new(
        name: impl Into<String>,
        metric: MetricField,
        xi: Vec<ScalarExpr>,
        eta: Vec<ScalarExpr>,
        phi: Vec<ScalarExpr>,
        epsilon: i8,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let d = metric.dim();
        if d % 2 == 0 || d < 3 {
            return Err(GeometryError::Dimension(format!(
                "contact manifolds have odd dimension ≥ 3, got {d}"
            )));
        }
        if xi.len() != d || eta.len() != d || phi.len() != d * d || domain.len() != d {
            return Err(GeometryError::Dimension(format!(
                "structure on a {d}-dimensional chart needs {d} components of ξ and η, {} of φ and {d} domain intervals",
                d * d
            )));
        }
        if xi.iter().chain(&eta).chain(&phi).any(|e| e.arity() != d) {
            return Err(GeometryError::Dimension(
                "structure tensors must be chart expressions".into(),
            ));
        }
        if epsilon.abs() != 1 {
            return Err(GeometryError::InvalidParameter(format!(
                "ε must be ±1, got {epsilon}"
            )));
        }
        if domain.iter().any(|(a, b)| !(a < b)) {
            return Err(GeometryError::InvalidParameter(
                "sample domain intervals must be nonempty".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            n: (d - 1) / 2,
            metric,
            xi,
            eta,
            phi,
            epsilon,
            domain,
        })
    }

    /// Half the contact rank: the chart has dimension `2n + 1`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn xi(&self) -> &[ScalarExpr] {
        &self.xi
    }

    pub fn eta(&self) -> &[ScalarExpr] {
        &self.eta
    }

    pub fn phi(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.phi[i * self.dim() + j]
    }

    pub fn phi_components(&self) -> &[ScalarExpr] {
        &self.phi
    }

    /// Box in which sample points are drawn; kept away from chart singularities.
    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn vars(&self) -> &VarSpace {
        self.metric.component(0, 0).vars()
    }

    pub fn at(&self, p: &[f64]) -> Result<AmbientPoint> {
        AmbientPoint::new(self, p)
    }

    pub fn sample_points<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                self.domain
                    .iter()
                    .map(|&(a, b)| rng.gen_range(a..b))
                    .collect()
            })
            .collect()
    }

    /// `η` evaluated on arbitrary scalar inputs.
    pub fn eta_composed(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        compose(&self.eta, x)
    }

    pub fn xi_composed(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        compose(&self.xi, x)
    }

    /// `φ^i_j` evaluated on arbitrary scalar inputs, row-major.
    pub fn phi_composed(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        compose(&self.phi, x)
    }

    /// Same structure with selected tensors multiplied by constants.
    /// Used to build deliberately broken inputs.
    pub fn modified(&self, m: &Modifiers) -> Self {
        let mut out = self.clone();
        if m.eta_scale != 1.0 {
            out.eta = out.eta.iter().map(|e| e.scaled(m.eta_scale)).collect();
        }
        if m.xi_scale != 1.0 {
            out.xi = out.xi.iter().map(|e| e.scaled(m.xi_scale)).collect();
        }
        if m.phi_scale != 1.0 {
            out.phi = out.phi.iter().map(|e| e.scaled(m.phi_scale)).collect();
        }
        if !m.is_identity() {
            out.name = format!("{}[{}]", self.name, m.describe());
        }
        out
    }
}

fn compose(exprs: &[ScalarExpr], x: &[Jet]) -> Result<Vec<Jet>> {
    exprs
        .iter()
        .map(|e| e.eval(x).map_err(GeometryError::from))
        .collect()
}

/// Everything needed to evaluate first-order identities at one point.
#[derive(Debug, Clone)]
pub struct AmbientPoint {
    pub geometry: PointGeometry,
    pub epsilon: f64,
    pub xi: DVector<f64>,
    pub eta: DVector<f64>,
    pub phi: DMatrix<f64>,
    /// `dxi[(i, k)] = ∂_k ξ^i`
    pub dxi: DMatrix<f64>,
    /// `deta[(j, k)] = ∂_k η_j`
    pub deta: DMatrix<f64>,
    /// `dphi[k][(i, j)] = ∂_k φ^i_j`
    pub dphi: Vec<DMatrix<f64>>,
}

impl AmbientPoint {
    fn new(s: &AmbientStructure, p: &[f64]) -> Result<Self> {
        let d = s.dim();
        let geometry = PointGeometry::at(&s.metric, p)?;
        let mut xi = DVector::zeros(d);
        let mut eta = DVector::zeros(d);
        let mut dxi = DMatrix::zeros(d, d);
        let mut deta = DMatrix::zeros(d, d);
        for i in 0..d {
            let a = s.xi[i].jet_at(p)?;
            let b = s.eta[i].jet_at(p)?;
            xi[i] = a.val();
            eta[i] = b.val();
            for k in 0..d {
                dxi[(i, k)] = a.grad(k);
                deta[(i, k)] = b.grad(k);
            }
        }
        let mut phi = DMatrix::zeros(d, d);
        let mut dphi = vec![DMatrix::zeros(d, d); d];
        for i in 0..d {
            for j in 0..d {
                let e = s.phi(i, j);
                if let Some(c) = e.as_constant() {
                    phi[(i, j)] = c;
                    continue;
                }
                let jet = e.jet_at(p)?;
                phi[(i, j)] = jet.val();
                for (k, m) in dphi.iter_mut().enumerate() {
                    m[(i, j)] = jet.grad(k);
                }
            }
        }
        Ok(Self {
            geometry,
            epsilon: s.epsilon as f64,
            xi,
            eta,
            phi,
            dxi,
            deta,
            dphi,
        })
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn g(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.geometry.inner(x, y)
    }

    pub fn eta_of(&self, x: &DVector<f64>) -> f64 {
        self.eta.dot(x)
    }

    pub fn phi_of(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.phi * x
    }

    /// `∇_X Y` for `Y` given by its value and its derivative along `X`
    /// (`dy_x = X(Y^i)`).
    pub fn covariant(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        dy_x: &DVector<f64>,
    ) -> DVector<f64> {
        dy_x + self.geometry.connection.apply(x, y)
    }

    /// `∇_X ξ`
    pub fn nabla_xi(&self, x: &DVector<f64>) -> DVector<f64> {
        self.covariant(x, &self.xi, &(&self.dxi * x))
    }

    /// `(∇_X η)(Y) = X(η_j) Y^j − η(Γ(X, Y))`
    pub fn nabla_eta(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (&self.deta * x).dot(y) - self.eta.dot(&self.geometry.connection.apply(x, y))
    }

    /// `(∇_X φ)Y = ∇_X(φY) − φ(∇_X Y)` for constant-coefficient `Y`.
    pub fn nabla_phi(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        let mut dphi_x = DMatrix::zeros(d, d);
        for k in 0..d {
            if x[k] != 0.0 {
                dphi_x += &self.dphi[k] * x[k];
            }
        }
        let gamma = &self.geometry.connection;
        &dphi_x * y + gamma.apply(x, &(&self.phi * y)) - &self.phi * gamma.apply(x, y)
    }

    /// `X(η_j)` contracted with `Y`: the directional derivative of `η` components.
    pub fn deta_along(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.deta * x
    }

    pub fn r_apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        self.geometry.r_apply(x, y, z)
    }

    pub fn rm(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        self.geometry.rm(x, y, z, w)
    }

    pub fn ricci(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.geometry.ricci(x, y)
    }

    /// Orthogonal projection onto the contact distribution `ker η`.
    pub fn horizontal(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.xi * self.eta_of(x)
    }
}

/// Constant rescalings of structure tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modifiers {
    pub eta_scale: f64,
    pub phi_scale: f64,
    pub xi_scale: f64,
}

impl Default for Modifiers {
    fn default() -> Self {
        Self {
            eta_scale: 1.0,
            phi_scale: 1.0,
            xi_scale: 1.0,
        }
    }
}

impl Modifiers {
    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (name, v) in [
            ("eta", self.eta_scale),
            ("phi", self.phi_scale),
            ("xi", self.xi_scale),
        ] {
            if v != 1.0 {
                parts.push(format!("{name}*{v}"));
            }
        }
        parts.join(",")
    }
}

/// Random vector with entries uniform in `[-1, 1]`.
pub fn random_vector<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0))
}
