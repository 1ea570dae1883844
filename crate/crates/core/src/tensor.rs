//! Metric-dependent objects on a chart.
//!
//! Conventions, fixed throughout the crate:
//!
//! * `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`;
//! * `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, with components
//!   `R(∂_i,∂_j)∂_k = R^l_ijk ∂_l`;
//! * `Rm(X,Y,Z,W) = g(R(X,Y)Z, W)`, stored as `R_ijkl`;
//! * `Ric(Y,Z) = tr(X ↦ R(X,Y)Z)`, i.e. `Ric_jk = g^{il} R_ijkl`, so the unit
//!   sphere `S^d` has `Ric = (d − 1) g`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GeometryError, Result};
use crate::expr::{Jet, ScalarExpr, VarSpace};

/// A symmetric `d × d` field of expressions with a declared signature.
#[derive(Debug, Clone)]
pub struct MetricField {
    dim: usize,
    // upper triangle, row-major over i <= j
    comps: Vec<ScalarExpr>,
    signature: Vec<i8>,
}

#[inline]
fn sym_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

impl MetricField {
    /// Builds a metric from its upper triangle, listed row by row
    /// (`g_00, g_01, …, g_0d, g_11, …`).
    pub fn from_upper(dim: usize, upper: Vec<ScalarExpr>, signature: Vec<i8>) -> Result<Self> {
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(GeometryError::Dimension(format!(
                "metric needs {} upper-triangle components, got {}",
                dim * (dim + 1) / 2,
                upper.len()
            )));
        }
        if signature.len() != dim || signature.iter().any(|s| s.abs() != 1) {
            return Err(GeometryError::Dimension(format!(
                "signature must list {dim} entries of ±1"
            )));
        }
        if upper.iter().any(|e| e.arity() != dim) {
            return Err(GeometryError::Dimension(
                "metric components must be chart expressions".into(),
            ));
        }
        Ok(Self {
            dim,
            comps: upper,
            signature,
        })
    }

    /// Builds a metric from a full matrix of expressions. Entries below the
    /// diagonal are ignored; `g_ji` is the same tree as `g_ij`.
    pub fn from_rows(rows: Vec<Vec<ScalarExpr>>, signature: Vec<i8>) -> Result<Self> {
        let dim = rows.len();
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(GeometryError::Dimension("metric must be square".into()));
            }
            upper.extend(row.into_iter().skip(i));
        }
        Self::from_upper(dim, upper, signature)
    }

    /// Euclidean or Minkowski style constant metric `diag(signature)`.
    pub fn flat(signature: Vec<i8>) -> Self {
        let dim = signature.len();
        let vars = VarSpace::chart(dim);
        let mut upper = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                let c = if i == j { signature[i] as f64 } else { 0.0 };
                upper.push(ScalarExpr::constant(c, &vars));
            }
        }
        Self::from_upper(dim, upper, signature).expect("consistent by construction")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    pub fn negative_directions(&self) -> usize {
        self.signature.iter().filter(|&&s| s < 0).count()
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.comps[sym_index(self.dim, i, j)]
    }

    pub fn upper(&self) -> &[ScalarExpr] {
        &self.comps
    }

    pub fn value_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dim;
        let mut g = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.component(i, j).eval_f64(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Metric components composed with arbitrary scalar inputs (for example
    /// jets in the parameters of an immersion).
    pub fn compose(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        self.comps
            .iter()
            .map(|e| e.eval(x).map_err(GeometryError::from))
            .collect()
    }

    pub fn jets_at(&self, p: &[f64]) -> Result<MetricJets> {
        let d = self.dim;
        let mut jets = MetricJets {
            dim: d,
            g: DMatrix::zeros(d, d),
            dg: vec![0.0; d * d * d],
            ddg: vec![0.0; d * d * d * d],
        };
        for i in 0..d {
            for j in i..d {
                let jet = self.component(i, j).jet_at(p)?;
                for (a, b) in [(i, j), (j, i)] {
                    jets.g[(a, b)] = jet.val();
                    for k in 0..d {
                        jets.dg[(k * d + a) * d + b] = jet.grad(k);
                        for l in 0..d {
                            jets.ddg[((k * d + l) * d + a) * d + b] = jet.hess(k, l);
                        }
                    }
                }
            }
        }
        Ok(jets)
    }

    /// Checks nondegeneracy and that the number of negative eigenvalues at
    /// `p` matches the declared signature.
    pub fn check_signature(&self, p: &[f64]) -> Result<()> {
        let g = self.value_at(p)?;
        let eig = SymmetricEigen::new(g);
        let scale = eig.eigenvalues.amax().max(1e-300);
        if eig.eigenvalues.iter().any(|l| l.abs() <= 1e-12 * scale) {
            return Err(GeometryError::SingularMetric { point: p.to_vec() });
        }
        let found = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
        let expected = self.negative_directions();
        if found != expected {
            return Err(GeometryError::Signature {
                point: p.to_vec(),
                expected,
                found,
            });
        }
        Ok(())
    }
}

/// Metric value with exact first and second partials at a point.
#[derive(Debug, Clone)]
pub struct MetricJets {
    dim: usize,
    pub g: DMatrix<f64>,
    dg: Vec<f64>,
    ddg: Vec<f64>,
}

impl MetricJets {
    /// `∂_k g_ij`
    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        let d = self.dim;
        self.dg[(k * d + i) * d + j]
    }

    /// `∂_k ∂_l g_ij`
    pub fn ddg(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let d = self.dim;
        self.ddg[((k * d + l) * d + i) * d + j]
    }
}

/// Christoffel symbols `Γ^k_ij` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    dim: usize,
    data: Vec<f64>,
}

impl ConnectionCoefficients {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// `(Γ(X, Y))^k = Γ^k_ij X^i Y^j`
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += self.get(k, i, j) * x[i] * y[j];
                }
            }
            s
        })
    }

    fn from_first_kind(ginv: &DMatrix<f64>, first: &[f64], d: usize) -> Self {
        let mut data = vec![0.0; d * d * d];
        for k in 0..d {
            for i in 0..d {
                for j in i..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += ginv[(k, l)] * first[(l * d + i) * d + j];
                    }
                    data[(k * d + i) * d + j] = s;
                    data[(k * d + j) * d + i] = s;
                }
            }
        }
        Self { dim: d, data }
    }
}

/// Riemann tensor with all indices down, plus Ricci.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    dim: usize,
    r: Vec<f64>,
    pub ricci: DMatrix<f64>,
}

impl CurvatureTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)`
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        self.r[((i * d + j) * d + k) * d + l]
    }

    /// `Rm(X, Y, Z, W)`
    pub fn rm(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let xyz = xy * z[k];
                    if xyz == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        s += xyz * w[l] * self.r[((i * d + j) * d + k) * d + l];
                    }
                }
            }
        }
        s
    }

    /// The endomorphism `R(X,Y)Z` as a vector (needs the inverse metric).
    pub fn apply(
        &self,
        ginv: &DMatrix<f64>,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
    ) -> DVector<f64> {
        let d = self.dim;
        let mut lowered = DVector::zeros(d);
        for l in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        s += x[i] * y[j] * z[k] * self.get(i, j, k, l);
                    }
                }
            }
            lowered[l] = s;
        }
        ginv * lowered
    }

    pub fn ricci_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.ricci * y)[(0, 0)]
    }

    fn from_mixed(g: &DMatrix<f64>, ginv: &DMatrix<f64>, mixed: &[f64], d: usize) -> Self {
        // mixed[((l*d + i)*d + j)*d + k] = R^l_ijk
        let mut r = vec![0.0; d * d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = 0.0;
                        for m in 0..d {
                            s += g[(l, m)] * mixed[((m * d + i) * d + j) * d + k];
                        }
                        r[((i * d + j) * d + k) * d + l] = s;
                    }
                }
            }
        }
        let mut ricci = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                let mut s = 0.0;
                for i in 0..d {
                    for l in 0..d {
                        s += ginv[(i, l)] * r[((i * d + j) * d + k) * d + l];
                    }
                }
                ricci[(j, k)] = s;
            }
        }
        let sym = (&ricci + ricci.transpose()) * 0.5;
        Self { dim: d, r, ricci: sym }
    }
}

fn invert(g: &DMatrix<f64>, p: &[f64]) -> Result<DMatrix<f64>> {
    let sv = g.clone().svd(false, false).singular_values;
    if !(sv.min() > 1e-13 * sv.max()) {
        return Err(GeometryError::SingularMetric { point: p.to_vec() });
    }
    let inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| GeometryError::SingularMetric { point: p.to_vec() })?;
    Ok((&inv + inv.transpose()) * 0.5)
}

fn first_kind(j: &MetricJets) -> Vec<f64> {
    let d = j.dim;
    // Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut out = vec![0.0; d * d * d];
    for l in 0..d {
        for i in 0..d {
            for jj in 0..d {
                out[(l * d + i) * d + jj] =
                    0.5 * (j.dg(i, jj, l) + j.dg(jj, i, l) - j.dg(l, i, jj));
            }
        }
    }
    out
}

/// Levi-Civita connection, curvature and metric at one chart point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub connection: ConnectionCoefficients,
    /// `∂_m Γ^k_ij`, exact.
    dconnection: Vec<f64>,
    pub curvature: CurvatureTensor,
    pub jets: MetricJets,
}

impl PointGeometry {
    pub fn at(metric: &MetricField, p: &[f64]) -> Result<Self> {
        let jets = metric.jets_at(p)?;
        let d = metric.dim();
        let g = jets.g.clone();
        let ginv = invert(&g, p)?;
        let first = first_kind(&jets);
        let connection = ConnectionCoefficients::from_first_kind(&ginv, &first, d);

        // ∂_m Γ^k_ij = −g^{ka} ∂_m g_ab Γ^b_ij + g^{kl} ∂_m Γ_{l,ij}
        let mut dconn = vec![0.0; d * d * d * d];
        for m in 0..d {
            for k in 0..d {
                for i in 0..d {
                    for j in i..d {
                        let mut s = 0.0;
                        for a in 0..d {
                            let mut t = 0.0;
                            for b in 0..d {
                                t += jets.dg(m, a, b) * connection.get(b, i, j);
                            }
                            s -= ginv[(k, a)] * t;
                        }
                        for l in 0..d {
                            let d_first = 0.5
                                * (jets.ddg(m, i, j, l) + jets.ddg(m, j, i, l)
                                    - jets.ddg(m, l, i, j));
                            s += ginv[(k, l)] * d_first;
                        }
                        dconn[((m * d + k) * d + i) * d + j] = s;
                        dconn[((m * d + k) * d + j) * d + i] = s;
                    }
                }
            }
        }
        let dgamma = |m: usize, k: usize, i: usize, j: usize| dconn[((m * d + k) * d + i) * d + j];
        let mixed = mixed_riemann(d, &connection, dgamma);
        let curvature = CurvatureTensor::from_mixed(&g, &ginv, &mixed, d);
        Ok(Self {
            point: p.to_vec(),
            g,
            ginv,
            connection,
            dconnection: dconn,
            curvature,
            jets,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `∂_m Γ^k_ij`
    pub fn dgamma(&self, m: usize, k: usize, i: usize, j: usize) -> f64 {
        let d = self.dim();
        self.dconnection[((m * d + k) * d + i) * d + j]
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.g * y)[(0, 0)]
    }

    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.g * v
    }

    pub fn raise(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.ginv * w
    }

    /// Full contraction `g^{ij} T_ij` of a covariant 2-tensor.
    pub fn trace(&self, t: &DMatrix<f64>) -> f64 {
        self.ginv.component_mul(t).sum()
    }

    pub fn rm(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        z: &DVector<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        self.curvature.rm(x, y, z, w)
    }

    pub fn r_apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        self.curvature.apply(&self.ginv, x, y, z)
    }

    pub fn ricci(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.curvature.ricci_form(x, y)
    }
}

fn mixed_riemann(
    d: usize,
    gamma: &ConnectionCoefficients,
    dgamma: impl Fn(usize, usize, usize, usize) -> f64,
) -> Vec<f64> {
    // R^l_ijk = ∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    let mut mixed = vec![0.0; d * d * d * d];
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut s = dgamma(i, l, j, k) - dgamma(j, l, i, k);
                    for m in 0..d {
                        s += gamma.get(l, i, m) * gamma.get(m, j, k)
                            - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    mixed[((l * d + i) * d + j) * d + k] = s;
                }
            }
        }
    }
    mixed
}

/// Christoffel symbols of `g` at `p`.
pub fn christoffel(g: &MetricField, p: &[f64]) -> Result<ConnectionCoefficients> {
    let jets = g.jets_at(p)?;
    let ginv = invert(&jets.g, p)?;
    Ok(ConnectionCoefficients::from_first_kind(
        &ginv,
        &first_kind(&jets),
        g.dim(),
    ))
}

/// Riemann and Ricci tensors of `g` at `p`, from exact second-order jets.
pub fn riemann(g: &MetricField, p: &[f64]) -> Result<CurvatureTensor> {
    Ok(PointGeometry::at(g, p)?.curvature)
}

/// Fourth-order central difference of a connection-valued function of the
/// chart point: returns `∂_m Γ^k_ij` laid out as `[((m*d + k)*d + i)*d + j]`.
///
/// This is the single controlled differencing layer of the crate; it is used
/// where only first derivatives of the metric are available exactly.
pub fn differenced_connection(
    p: &[f64],
    step: f64,
    mut connection_at: impl FnMut(&[f64]) -> Result<ConnectionCoefficients>,
) -> Result<Vec<f64>> {
    let d = p.len();
    let mut out = vec![0.0; d * d * d * d];
    for m in 0..d {
        let mut acc = vec![0.0; d * d * d];
        for (shift, weight) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            let mut q = p.to_vec();
            q[m] += shift * step;
            let c = connection_at(&q)?;
            for (a, v) in acc.iter_mut().zip(&c.data) {
                *a += weight * v;
            }
        }
        for (idx, a) in acc.into_iter().enumerate() {
            out[m * d * d * d + idx] = a / (12.0 * step);
        }
    }
    Ok(out)
}

/// Riemann tensor from the connection at `p` and its differenced derivative.
pub fn curvature_from_connection(
    g: &DMatrix<f64>,
    ginv: &DMatrix<f64>,
    gamma: &ConnectionCoefficients,
    dgamma: &[f64],
) -> CurvatureTensor {
    let d = g.nrows();
    let mixed = mixed_riemann(d, gamma, |m, k, i, j| dgamma[((m * d + k) * d + i) * d + j]);
    CurvatureTensor::from_mixed(g, ginv, &mixed, d)
}

/// Independent curvature route: Christoffel symbols (exact, first
/// derivatives only) differenced with a fourth-order stencil of size `step`.
pub fn riemann_differenced(g: &MetricField, p: &[f64], step: f64) -> Result<CurvatureTensor> {
    let jets = g.jets_at(p)?;
    let ginv = invert(&jets.g, p)?;
    let gamma = ConnectionCoefficients::from_first_kind(&ginv, &first_kind(&jets), g.dim());
    let dgamma = differenced_connection(p, step, |q| christoffel(g, q))?;
    Ok(curvature_from_connection(&jets.g, &ginv, &gamma, &dgamma))
}

/// Builds a connection from explicit coefficients (for example the induced
/// connection of an immersion).
pub fn connection_from_first_kind(
    ginv: &DMatrix<f64>,
    first: &[f64],
) -> ConnectionCoefficients {
    ConnectionCoefficients::from_first_kind(ginv, first, ginv.nrows())
}

pub fn lower(g: &MetricField, p: &[f64], v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(g.value_at(p)? * v)
}

pub fn raise(g: &MetricField, p: &[f64], w: &DVector<f64>) -> Result<DVector<f64>> {
    let m = g.value_at(p)?;
    Ok(invert(&m, p)? * w)
}

/// `g^{ij} T_ij`
pub fn contract(g: &MetricField, p: &[f64], t: &DMatrix<f64>) -> Result<f64> {
    let m = g.value_at(p)?;
    Ok(invert(&m, p)?.component_mul(t).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_all(dim: usize, src: &[&str]) -> Vec<ScalarExpr> {
        let v = VarSpace::chart(dim);
        src.iter().map(|s| ScalarExpr::parse(s, &v).unwrap()).collect()
    }

    /// Unit S² in spherical coordinates (θ, φ).
    fn sphere2() -> MetricField {
        MetricField::from_upper(2, parse_all(2, &["1", "0", "sin(x0)^2"]), vec![1, 1]).unwrap()
    }

    #[test]
    fn flat_metrics_have_no_connection() {
        for sig in [vec![1, 1, 1], vec![1, 1, -1]] {
            let g = MetricField::flat(sig);
            let c = christoffel(&g, &[0.3, -0.2, 1.0]).unwrap();
            assert!(c.data.iter().all(|&v| v == 0.0));
            let r = riemann(&g, &[0.3, -0.2, 1.0]).unwrap();
            assert!(r.r.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn two_sphere_has_unit_curvature() {
        let g = sphere2();
        let p = [0.9, 0.4];
        let r = riemann(&g, &p).unwrap();
        let det = p[0].sin().powi(2);
        assert!((r.get(0, 1, 1, 0) / det - 1.0).abs() < 1e-12);
        assert!((r.ricci[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.ricci[(1, 1)] - det).abs() < 1e-12);
    }

    #[test]
    fn exact_and_differenced_curvature_agree() {
        let g = sphere2();
        let p = [1.1, 0.2];
        let a = riemann(&g, &p).unwrap();
        let b = riemann_differenced(&g, &p, 1e-3).unwrap();
        for (x, y) in a.r.iter().zip(&b.r) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn signature_is_checked() {
        let g = MetricField::flat(vec![1, 1, -1]);
        g.check_signature(&[0.0, 0.0, 0.0]).unwrap();
        let wrong = MetricField::from_upper(
            2,
            parse_all(2, &["1", "0", "-1"]),
            vec![1, 1],
        )
        .unwrap();
        assert!(matches!(
            wrong.check_signature(&[0.0, 0.0]),
            Err(GeometryError::Signature { .. })
        ));
        let singular =
            MetricField::from_upper(2, parse_all(2, &["1", "1", "1"]), vec![1, 1]).unwrap();
        assert!(matches!(
            singular.check_signature(&[0.0, 0.0]),
            Err(GeometryError::SingularMetric { .. })
        ));
        assert!(christoffel(&singular, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn contraction_of_metric_with_inverse_is_dimension() {
        let g = sphere2();
        let p = [0.7, 0.0];
        let m = g.value_at(&p).unwrap();
        assert!((contract(&g, &p, &m).unwrap() - 2.0).abs() < 1e-12);
        let w = DVector::from_vec(vec![0.3, -1.7]);
        let back = lower(&g, &p, &raise(&g, &p, &w).unwrap()).unwrap();
        assert!((back - w).amax() < 1e-12);
    }
}
