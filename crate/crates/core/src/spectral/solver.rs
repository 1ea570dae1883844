use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GeometryError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Dense,
    /// Shift-invert subspace iteration with inner conjugate gradients.
    ShiftInvert,
}

/// `M^{-1/2} K M^{-1/2}` for a diagonal mass.
pub(crate) fn symmetric_pencil(k: &CsrMatrix<f64>, mass: &[f64]) -> CsrMatrix<f64> {
    let scale: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut out = k.clone();
    let (offsets, cols, vals) = out.csr_data_mut();
    for r in 0..offsets.len() - 1 {
        for e in offsets[r]..offsets[r + 1] {
            vals[e] *= scale[r] * scale[cols[e]];
        }
    }
    out
}

pub(crate) fn smallest_dense(a: &CsrMatrix<f64>, count: usize) -> Vec<f64> {
    let dense = DMatrix::from(a);
    let dense = (&dense + dense.transpose()) * 0.5;
    let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(count);
    ev
}

fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for (r, row) in a.row_iter().enumerate() {
        let mut acc = 0.0;
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            acc += v * x[c];
        }
        y[r] = acc;
    }
    y
}

/// Jacobi-preconditioned CG for `(A + σI) y = b` starting from `y`.
fn cg(
    a: &CsrMatrix<f64>,
    sigma: f64,
    diag: &DVector<f64>,
    b: &DVector<f64>,
    y: &mut DVector<f64>,
    tol: f64,
) -> Result<()> {
    let apply = |v: &DVector<f64>| spmv(a, v) + v * sigma;
    let bnorm = b.norm().max(f64::MIN_POSITIVE);
    let mut r = b - apply(y);
    let mut z = r.component_div(diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let limit = 20 * b.len() + 100;
    for _ in 0..limit {
        if r.norm() <= tol * bnorm {
            return Ok(());
        }
        let ap = apply(&p);
        let alpha = rz / p.dot(&ap);
        y.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        z = r.component_div(diag);
        let next = r.dot(&z);
        p = &z + &p * (next / rz);
        rz = next;
    }
    Err(GeometryError::Structure(
        "conjugate gradients did not converge in the shift-invert solve".into(),
    ))
}

/// Smallest `count` eigenvalues of a symmetric positive semidefinite sparse
/// matrix by subspace iteration on `(A + σI)⁻¹` with Rayleigh–Ritz on `A`.
pub(crate) fn smallest_iterative(a: &CsrMatrix<f64>, count: usize, sigma: f64) -> Result<Vec<f64>> {
    let size = a.nrows();
    let block = (count + 6).min(size);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(size, block, |_, _| rng.gen_range(-1.0..1.0));
    x = x.qr().q();
    let mut theta = vec![0.0; block];
    let mut diag = DVector::from_element(size, sigma);
    for (r, row) in a.row_iter().enumerate() {
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            if c == r {
                diag[r] += v;
            }
        }
    }
    for _ in 0..500 {
        let mut y = DMatrix::zeros(size, block);
        for j in 0..block {
            let b = x.column(j).into_owned();
            let mut sol = &b / (theta[j] + sigma);
            cg(a, sigma, &diag, &b, &mut sol, 1e-11)?;
            y.set_column(j, &sol);
        }
        let q = y.qr().q();
        let aq = DMatrix::from_columns(
            &(0..block)
                .map(|j| spmv(a, &q.column(j).into_owned()))
                .collect::<Vec<_>>(),
        );
        let h = q.transpose() * &aq;
        let h = (&h + h.transpose()) * 0.5;
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vecs = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        x = &q * &vecs;
        let ax = &aq * &vecs;
        theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let done = (0..count).all(|j| {
            let res = (ax.column(j) - x.column(j) * theta[j]).norm();
            res <= 1e-8 * theta[j].abs().max(1.0)
        });
        if done {
            theta.truncate(count);
            return Ok(theta);
        }
    }
    Err(GeometryError::Structure(
        "subspace iteration did not converge".into(),
    ))
}
