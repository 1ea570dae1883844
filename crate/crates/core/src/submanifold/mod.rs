//! Immersions `F: L → M`, their induced geometry and the checks that apply to
//! Legendrian ones.

mod catalog;
mod checks;
mod geometry;
pub mod quadrature;

pub use catalog::{immersion_catalog, CatalogImmersion, IMMERSION_NAMES};
pub use checks::{
    gauss_equation_check, legendrian_defect, node_identity_checks, shape_operator_check,
    trace_curvature_check,
};
pub use geometry::{
    induced_connection, intrinsic_curvature, volume_of_frames, InducedConnection,
    InducedGeometry, NodeGeometry,
};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::expr::{Jet, ScalarExpr, VarSpace, MAX_VARS};

/// One parameter axis: interval, periodicity and quadrature node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
    pub nodes: usize,
}

impl Axis {
    pub fn periodic(lo: f64, hi: f64, nodes: usize) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
            nodes,
        }
    }

    pub fn interval(lo: f64, hi: f64, nodes: usize) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
            nodes,
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Parametrized map from a box in `u`-space into the ambient chart.
#[derive(Debug, Clone)]
pub struct Immersion {
    pub name: String,
    components: Vec<ScalarExpr>,
    axes: Vec<Axis>,
}

impl Immersion {
    pub fn new(name: impl Into<String>, components: Vec<ScalarExpr>, axes: Vec<Axis>) -> Result<Self> {
        let n = axes.len();
        if n == 0 || n > MAX_VARS {
            return Err(GeometryError::Dimension(format!(
                "parameter dimension must be between 1 and {MAX_VARS}"
            )));
        }
        if components.is_empty() || components.iter().any(|c| c.arity() != n) {
            return Err(GeometryError::Dimension(format!(
                "immersion components must be expressions in {n} parameters"
            )));
        }
        for a in &axes {
            if !(a.lo < a.hi) {
                return Err(GeometryError::InvalidParameter(
                    "parameter intervals must be nonempty".into(),
                ));
            }
            let min = if a.periodic { 4 } else { 2 };
            if a.nodes < min {
                return Err(GeometryError::InvalidParameter(format!(
                    "axis needs at least {min} quadrature nodes, got {}",
                    a.nodes
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            components,
            axes,
        })
    }

    /// Parses component expressions in `u0, …, u{n-1}`.
    pub fn parse<S: AsRef<str>>(name: &str, components: &[S], axes: Vec<Axis>) -> Result<Self> {
        let vars = VarSpace::parameters(axes.len());
        let comps = components
            .iter()
            .map(|c| ScalarExpr::parse(c.as_ref(), &vars))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(name, comps, axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn is_closed(&self) -> bool {
        self.axes.iter().all(|a| a.periodic)
    }

    /// First non-periodic axis, as an error.
    pub fn require_closed(&self) -> Result<()> {
        match self.axes.iter().position(|a| !a.periodic) {
            Some(axis) => Err(GeometryError::NotClosed { axis }),
            None => Ok(()),
        }
    }

    /// Same map with `nodes` quadrature nodes on every axis.
    pub fn with_resolution(&self, nodes: usize) -> Self {
        let mut out = self.clone();
        for a in &mut out.axes {
            a.nodes = nodes;
        }
        out
    }

    pub fn with_axes(&self, axes: Vec<Axis>) -> Result<Self> {
        Self::new(self.name.clone(), self.components.clone(), axes)
    }

    /// Quadrature nodes with their parameter-space weights.
    pub fn nodes(&self) -> Vec<(Vec<f64>, f64)> {
        let rules: Vec<_> = self
            .axes
            .iter()
            .map(|a| quadrature::axis_rule(a.lo, a.hi, a.periodic, a.nodes))
            .collect();
        quadrature::tensor_grid(&rules)
    }

    pub fn point(&self, u: &[f64]) -> Result<DVector<f64>> {
        let v = self
            .components
            .iter()
            .map(|c| c.eval_f64(u))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(DVector::from_vec(v))
    }

    /// Component jets in the parameters at `u`.
    pub fn jets_at(&self, u: &[f64]) -> Result<Vec<Jet>> {
        self.components
            .iter()
            .map(|c| c.jet_at(u).map_err(GeometryError::from))
            .collect()
    }

    /// Position, Jacobian (`d × n`) and second derivatives
    /// (`second[a]` holds `∂_a ∂_b F` in column `b`).
    pub fn derivatives(&self, u: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let jets = self.jets_at(u)?;
        Ok(split_jets(&jets, self.dim()))
    }
}

pub(crate) fn split_jets(
    jets: &[Jet],
    n: usize,
) -> (DVector<f64>, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let d = jets.len();
    let x = DVector::from_fn(d, |k, _| jets[k].val());
    let df = DMatrix::from_fn(d, n, |k, a| jets[k].grad(a));
    let ddf = (0..n)
        .map(|a| DMatrix::from_fn(d, n, |k, b| jets[k].hess(a, b)))
        .collect();
    (x, df, ddf)
}
