use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::contact::AmbientStructure;
use crate::error::{GeometryError, Result};
use crate::submanifold::Immersion;

/// Induced metric `G = dFᵀ g dF` at an arbitrary parameter point.
pub fn induced_metric_at(f: &Immersion, s: &AmbientStructure, u: &[f64]) -> Result<DMatrix<f64>> {
    let (x, df, _) = f.derivatives(u)?;
    let g = s.metric().value_at(x.as_slice())?;
    let big_g = df.transpose() * g * &df;
    if big_g.clone().cholesky().is_none() {
        return Err(GeometryError::NotSpacelike { node: u.to_vec() });
    }
    Ok(big_g)
}

/// Periodic tensor grid over the parameter box.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub lo: Vec<f64>,
    pub step: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(f: &Immersion, counts: &[usize]) -> Self {
        let axes = f.axes();
        Self {
            lo: axes.iter().map(|a| a.lo).collect(),
            step: axes.iter().zip(counts).map(|(a, &c)| a.len() / c as f64).collect(),
            counts: counts.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    fn multi(&self, mut idx: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let i = idx % c;
                idx /= c;
                i
            })
            .collect()
    }

    fn flat(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for a in (0..multi.len()).rev() {
            idx = idx * self.counts[a] + multi[a] % self.counts[a];
        }
        idx
    }

    fn point(&self, multi: &[usize], offset: f64) -> Vec<f64> {
        (0..multi.len())
            .map(|a| self.lo[a] + (multi[a] as f64 + offset) * self.step[a])
            .collect()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Stiffness `K` and lumped mass `m` of `∫ G^{ab} ∂_a u ∂_b v dv` on the
/// periodic grid, with every cell split into the `n!` Kuhn simplices.
///
/// The coefficient `√det G · G⁻¹` is taken at the cell centre and the mass is
/// the cell volume times `√det G` at the node.
pub(crate) fn assemble(
    f: &Immersion,
    s: &AmbientStructure,
    grid: &Grid,
) -> Result<(CsrMatrix<f64>, Vec<f64>)> {
    let n = grid.counts.len();
    let size = grid.len();
    let cell: f64 = grid.step.iter().product();
    let perms = permutations(n);
    let simplex = cell / perms.len() as f64;
    let mut coo = CooMatrix::new(size, size);
    let mut mass = Vec::with_capacity(size);
    for idx in 0..size {
        let corner = grid.multi(idx);
        let g = induced_metric_at(f, s, &grid.point(&corner, 0.0))?;
        mass.push(cell * g.determinant().sqrt());

        let gc = induced_metric_at(f, s, &grid.point(&corner, 0.5))?;
        let inv = gc.clone().try_inverse().ok_or_else(|| GeometryError::SingularMetric {
            point: grid.point(&corner, 0.5),
        })?;
        let coeff = inv * gc.determinant().sqrt();
        for p in &perms {
            // path corner → corner + e_{p0} → … ; gradient component along p_k
            // is the difference across the k-th edge.
            let mut verts = Vec::with_capacity(n + 1);
            let mut cur = corner.clone();
            verts.push(grid.flat(&cur));
            for &a in p {
                cur[a] += 1;
                verts.push(grid.flat(&cur));
            }
            // b[a] = (v_{k+1} − v_k)/h_a with a = p_k
            let mut b = DMatrix::zeros(n, n + 1);
            for (k, &a) in p.iter().enumerate() {
                b[(a, k)] = -1.0 / grid.step[a];
                b[(a, k + 1)] = 1.0 / grid.step[a];
            }
            let local = b.transpose() * &coeff * &b * simplex;
            for r in 0..=n {
                for c in 0..=n {
                    coo.push(verts[r], verts[c], local[(r, c)]);
                }
            }
        }
    }
    Ok((CsrMatrix::from(&coo), mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_split_counts() {
        assert_eq!(permutations(1).len(), 1);
        assert_eq!(permutations(2).len(), 2);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn grid_indexing_wraps() {
        let f = Immersion::parse(
            "t",
            &["u0", "u1"],
            vec![
                crate::submanifold::Axis::periodic(0.0, 1.0, 4),
                crate::submanifold::Axis::periodic(0.0, 2.0, 4),
            ],
        )
        .unwrap();
        let g = Grid::new(&f, &[3, 5]);
        assert_eq!(g.len(), 15);
        for idx in 0..15 {
            assert_eq!(g.flat(&g.multi(idx)), idx);
        }
        assert_eq!(g.flat(&[3, 5]), 0);
        assert!((g.step[1] - 0.4).abs() < 1e-15);
    }
}
