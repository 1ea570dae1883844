//! One-dimensional rules combined into tensor-product grids.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize to remove eigensolver asymmetry
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// Nodes and weights for one axis: trapezoid when periodic, Gauss–Legendre
/// otherwise.
pub fn axis_rule(lo: f64, hi: f64, periodic: bool, n: usize) -> (Vec<f64>, Vec<f64>) {
    let len = hi - lo;
    if periodic {
        let h = len / n as f64;
        ((0..n).map(|k| lo + k as f64 * h).collect(), vec![h; n])
    } else {
        let (x, w) = gauss_legendre(n);
        (
            x.iter().map(|t| lo + 0.5 * len * (t + 1.0)).collect(),
            w.iter().map(|v| 0.5 * len * v).collect(),
        )
    }
}

/// Tensor product of per-axis rules; the last axis varies fastest.
pub fn tensor_grid(rules: &[(Vec<f64>, Vec<f64>)]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for (x, w) in rules {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for (p, pw) in &out {
            for (xi, wi) in x.iter().zip(w) {
                let mut q = p.clone();
                q.push(*xi);
                next.push((q, pw * wi));
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        for k in 0..32 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-13, "degree {k}: {q} vs {exact}");
        }
    }

    #[test]
    fn trapezoid_is_spectral_on_periodic_functions() {
        let (x, w) = axis_rule(0.0, std::f64::consts::TAU, true, 16);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos().powi(2)).sum();
        assert!((q - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn product_grid_weights_sum_to_area() {
        let g = tensor_grid(&[axis_rule(0.0, 2.0, true, 4), axis_rule(-1.0, 1.0, false, 5)]);
        assert_eq!(g.len(), 20);
        let a: f64 = g.iter().map(|(_, w)| w).sum();
        assert!((a - 4.0).abs() < 1e-14);
        assert_eq!(g[1].0[0], 0.0);
    }
}
