use nalgebra::{DMatrix, DVector};

use super::{split_jets, Immersion};
use crate::contact::{AmbientPoint, AmbientStructure};
use crate::error::{GeometryError, Result};
use crate::tensor::{
    connection_from_first_kind, curvature_from_connection, differenced_connection,
    ConnectionCoefficients, CurvatureTensor, MetricField,
};

/// Induced metric and its Levi-Civita connection at one parameter point.
#[derive(Debug, Clone)]
pub struct InducedConnection {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// `dmetric[c] = ∂_c G`
    pub dmetric: Vec<DMatrix<f64>>,
    pub gamma: ConnectionCoefficients,
}

/// Induced metric `G = dFᵀ g dF`, its exact first derivatives and connection.
pub fn induced_connection(
    metric: &MetricField,
    x: &DVector<f64>,
    df: &DMatrix<f64>,
    ddf: &[DMatrix<f64>],
    u: &[f64],
) -> Result<InducedConnection> {
    let d = df.nrows();
    let n = df.ncols();
    let jets = metric.jets_at(x.as_slice())?;
    let g = &jets.g;
    let gdf = g * df;
    let big_g = df.transpose() * &gdf;
    let mut dmetric = Vec::with_capacity(n);
    for c in 0..n {
        let mut dg = DMatrix::zeros(d, d);
        for k in 0..d {
            let s = df[(k, c)];
            if s == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    dg[(i, j)] += s * jets.dg(k, i, j);
                }
            }
        }
        let cross = ddf[c].transpose() * &gdf;
        dmetric.push(df.transpose() * dg * df + &cross + cross.transpose());
    }
    let inverse = big_g
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| GeometryError::RankDeficient {
            node: u.to_vec(),
            sigma: 0.0,
        })?;
    let mut first = vec![0.0; n * n * n];
    for l in 0..n {
        for a in 0..n {
            for b in 0..n {
                first[(l * n + a) * n + b] =
                    0.5 * (dmetric[a][(b, l)] + dmetric[b][(a, l)] - dmetric[l][(a, b)]);
            }
        }
    }
    let gamma = connection_from_first_kind(&inverse, &first);
    Ok(InducedConnection {
        metric: big_g,
        inverse,
        dmetric,
        gamma,
    })
}

/// Intrinsic curvature of the induced metric at `u`, through the differenced
/// connection layer.
pub fn intrinsic_curvature(
    f: &Immersion,
    s: &AmbientStructure,
    u: &[f64],
    step: f64,
) -> Result<CurvatureTensor> {
    let at = |q: &[f64]| -> Result<InducedConnection> {
        let (x, df, ddf) = f.derivatives(q)?;
        induced_connection(s.metric(), &x, &df, &ddf, q)
    };
    let here = at(u)?;
    let dgamma = differenced_connection(u, step, |q| Ok(at(q)?.gamma))?;
    Ok(curvature_from_connection(
        &here.metric,
        &here.inverse,
        &here.gamma,
        &dgamma,
    ))
}

/// Induced geometry at one quadrature node.
#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub u: Vec<f64>,
    /// Parameter-space quadrature weight.
    pub weight: f64,
    pub x: DVector<f64>,
    /// Jacobian `∂_a F^k`, `d × n`.
    pub df: DMatrix<f64>,
    /// `ddf[a]` holds `∂_a ∂_b F` in column `b`.
    pub ddf: Vec<DMatrix<f64>>,
    pub ambient: AmbientPoint,
    pub induced: InducedConnection,
    /// `√|det G|`
    pub density: f64,
    /// Gram–Schmidt orthonormal tangent frame (columns) and signs `g(e_i, e_i)`.
    pub frame: DMatrix<f64>,
    pub signs: Vec<f64>,
    // h(∂_a, ∂_b) at [a * n + b]
    h: Vec<DVector<f64>>,
    pub mean_curvature: DVector<f64>,
}

impl NodeGeometry {
    pub fn new(
        s: &AmbientStructure,
        f: &Immersion,
        u: &[f64],
        weight: f64,
        spacelike: bool,
    ) -> Result<Self> {
        let jets = f.jets_at(u)?;
        let (x, df, ddf) = split_jets(&jets, f.dim());
        Self::from_derivatives(s, u, weight, x, df, ddf, spacelike)
    }

    pub fn from_derivatives(
        s: &AmbientStructure,
        u: &[f64],
        weight: f64,
        x: DVector<f64>,
        df: DMatrix<f64>,
        ddf: Vec<DMatrix<f64>>,
        spacelike: bool,
    ) -> Result<Self> {
        let n = df.ncols();
        let sigma = df.clone().svd(false, false).singular_values.min();
        if !(sigma > 1e-8) {
            return Err(GeometryError::RankDeficient {
                node: u.to_vec(),
                sigma,
            });
        }
        let ambient = s.at(x.as_slice())?;
        let induced = induced_connection(s.metric(), &x, &df, &ddf, u)?;
        if spacelike && induced.metric.clone().cholesky().is_none() {
            return Err(GeometryError::NotSpacelike { node: u.to_vec() });
        }
        let density = induced.metric.determinant().abs().sqrt();

        let mut frame = DMatrix::zeros(df.nrows(), n);
        let mut signs = Vec::with_capacity(n);
        for a in 0..n {
            let mut v = df.column(a).into_owned();
            for b in 0..a {
                let e = frame.column(b).into_owned();
                v -= &e * (signs[b] * ambient.g(&v, &e));
            }
            let q = ambient.g(&v, &v);
            if q.abs() < 1e-12 {
                return Err(GeometryError::RankDeficient {
                    node: u.to_vec(),
                    sigma: q.abs().sqrt(),
                });
            }
            frame.set_column(a, &(v / q.abs().sqrt()));
            signs.push(q.signum());
        }

        let gamma = &ambient.geometry.connection;
        let mut h = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let acc = ddf[a].column(b).into_owned()
                    + gamma.apply(&df.column(a).into_owned(), &df.column(b).into_owned());
                h.push(acc);
            }
        }
        let mut node = Self {
            u: u.to_vec(),
            weight,
            x,
            df,
            ddf,
            ambient,
            induced,
            density,
            frame,
            signs,
            h,
            mean_curvature: DVector::zeros(0),
        };
        for k in 0..n * n {
            node.h[k] = node.normal_part(&node.h[k]);
        }
        let mut mean = DVector::zeros(node.x.len());
        for a in 0..n {
            for b in 0..n {
                mean += &node.h[a * n + b] * node.induced.inverse[(a, b)];
            }
        }
        node.mean_curvature = mean;
        Ok(node)
    }

    pub fn dim(&self) -> usize {
        self.df.ncols()
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.induced.metric
    }

    pub fn inverse_metric(&self) -> &DMatrix<f64> {
        &self.induced.inverse
    }

    /// Induced Christoffel symbol `Γ^c_ab`.
    pub fn gamma(&self, c: usize, a: usize, b: usize) -> f64 {
        self.induced.gamma.get(c, a, b)
    }

    pub fn tangent(&self, a: usize) -> DVector<f64> {
        self.df.column(a).into_owned()
    }

    /// Pushes forward parameter-space components.
    pub fn push(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.df * c
    }

    /// Components `c` with `v^T = dF c`.
    pub fn tangential_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        let w = self.df.transpose() * (&self.ambient.geometry.g * v);
        &self.induced.inverse * w
    }

    pub fn normal_part(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.push(&self.tangential_coords(v))
    }

    /// `h(∂_a, ∂_b)` as an ambient vector.
    pub fn h(&self, a: usize, b: usize) -> &DVector<f64> {
        &self.h[a * self.dim() + b]
    }

    /// `h(X, Y)` for parameter-space components `X`, `Y`.
    pub fn h_on(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(self.x.len());
        for a in 0..n {
            for b in 0..n {
                let c = x[a] * y[b];
                if c != 0.0 {
                    out += self.h(a, b) * c;
                }
            }
        }
        out
    }

    /// Parameter-space gradient components `G^{ab} ∂_b f`.
    pub fn gradient(&self, partials: &[f64]) -> DVector<f64> {
        &self.induced.inverse * DVector::from_column_slice(partials)
    }

    pub fn g(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.ambient.g(x, y)
    }

    /// Induced inner product of parameter-space vectors.
    pub fn induced_inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.induced.metric * y)[(0, 0)]
    }

    /// Normal frame `{ξ, φe_1, …, φe_n}` of a Legendrian immersion.
    pub fn legendrian_normal_frame(&self) -> Vec<DVector<f64>> {
        let mut out = vec![self.ambient.xi.clone()];
        for i in 0..self.dim() {
            out.push(self.ambient.phi_of(&self.frame.column(i).into_owned()));
        }
        out
    }
}

/// Induced geometry at every quadrature node.
#[derive(Debug, Clone)]
pub struct InducedGeometry {
    pub nodes: Vec<NodeGeometry>,
    pub spacelike: bool,
}

impl InducedGeometry {
    pub fn new(f: &Immersion, s: &AmbientStructure, spacelike: bool) -> Result<Self> {
        if f.ambient_dim() != s.dim() {
            return Err(GeometryError::Dimension(format!(
                "immersion has {} components, ambient chart has dimension {}",
                f.ambient_dim(),
                s.dim()
            )));
        }
        let nodes = f
            .nodes()
            .into_iter()
            .map(|(u, w)| NodeGeometry::new(s, f, &u, w, spacelike))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { nodes, spacelike })
    }

    pub fn volume(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight * n.density).sum()
    }

    /// `∫ q dv` for a nodal quantity.
    pub fn integrate(&self, mut q: impl FnMut(&NodeGeometry) -> f64) -> f64 {
        self.nodes.iter().map(|n| n.weight * n.density * q(n)).sum()
    }

    /// Largest pointwise `|H|` measured componentwise in the orthonormal
    /// normal directions.
    pub fn max_mean_curvature(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.g(&n.mean_curvature, &n.mean_curvature).abs().sqrt())
            .fold(0.0, f64::max)
    }
}

/// `Σ w √|det(dFᵀ g(F) dF)|` over nodes given positions and Jacobians.
pub fn volume_of_frames<'a>(
    metric: &MetricField,
    frames: impl IntoIterator<Item = (f64, &'a DVector<f64>, &'a DMatrix<f64>)>,
) -> Result<f64> {
    let mut vol = 0.0;
    for (w, x, df) in frames {
        let g = metric.value_at(x.as_slice())?;
        let big_g = df.transpose() * g * df;
        vol += w * big_g.determinant().abs().sqrt();
    }
    Ok(vol)
}
