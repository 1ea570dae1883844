//! Spectrum of the Laplacian `Δ = −div grad` of the induced metric on a closed
//! spacelike submanifold, and the stability verdict it feeds.

mod assembly;
mod solver;

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::Serialize;

pub use assembly::induced_metric_at;
pub use solver::Solver;

use crate::contact::AmbientStructure;
use crate::error::{GeometryError, Result};
use crate::submanifold::Immersion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumOptions {
    /// Coarsest nodes per axis; defaults to half the immersion's quadrature
    /// nodes (at least 8).
    pub base: Option<usize>,
    /// Accept once one doubling changes `λ₁` by less than this fraction.
    pub tolerance: f64,
    /// Largest grid tried before giving up on refinement.
    pub max_unknowns: usize,
    /// Grids up to this size use a dense eigensolver.
    pub dense_limit: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            base: None,
            tolerance: 0.01,
            max_unknowns: 70_000,
            dense_limit: 1600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    /// Divergence-form difference scheme on a periodic grid.
    Grid,
    /// Closed form for a flat torus.
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumLevel {
    pub resolution: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub solver: Solver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Smallest eigenvalues in increasing order, `λ₀ = 0` first. For the grid
    /// method these are extrapolated from the two finest levels.
    pub eigenvalues: Vec<f64>,
    pub method: SpectrumMethod,
    /// Nodes per axis of the finest level.
    pub resolution: Vec<usize>,
    /// `|λ₁(N) − λ₁(N/2)| / 3`
    pub error_estimate: f64,
    pub levels: Vec<SpectrumLevel>,
    /// Whether the last doubling changed `λ₁` by less than the tolerance.
    pub converged: bool,
}

impl SpectrumResult {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(f64::NAN)
    }

    /// `λ₁` on the finest grid, before extrapolation.
    pub fn grid_lambda1(&self) -> f64 {
        self.levels
            .last()
            .and_then(|l| l.eigenvalues.get(1).copied())
            .unwrap_or(self.lambda1())
    }
}

fn grid_level(
    f: &Immersion,
    s: &AmbientStructure,
    counts: &[usize],
    k: usize,
    opts: &SpectrumOptions,
) -> Result<SpectrumLevel> {
    let grid = assembly::Grid::new(f, counts);
    let (stiff, mass) = assembly::assemble(f, s, &grid)?;
    let a = solver::symmetric_pencil(&stiff, &mass);
    let count = k.min(grid.len());
    let (eigenvalues, solver) = if grid.len() <= opts.dense_limit {
        (solver::smallest_dense(&a, count), Solver::Dense)
    } else {
        let vol: f64 = mass.iter().sum();
        // shift on the scale of the first nonzero eigenvalue
        let sigma = vol.powf(-2.0 / counts.len() as f64);
        (solver::smallest_iterative(&a, count, sigma)?, Solver::ShiftInvert)
    };
    Ok(SpectrumLevel {
        resolution: counts.to_vec(),
        eigenvalues,
        solver,
    })
}

/// Smallest `k` eigenvalues of the induced Laplacian (including `λ₀ = 0`),
/// refining the grid by doubling until `λ₁` settles.
pub fn laplace_spectrum(
    f: &Immersion,
    s: &AmbientStructure,
    k: usize,
    opts: SpectrumOptions,
) -> Result<SpectrumResult> {
    f.require_closed()?;
    if f.ambient_dim() != s.dim() {
        return Err(GeometryError::Dimension(format!(
            "immersion has {} components, ambient chart has dimension {}",
            f.ambient_dim(),
            s.dim()
        )));
    }
    if k < 2 {
        return Err(GeometryError::InvalidParameter(format!(
            "need at least two eigenvalues, got k = {k}"
        )));
    }
    if !(opts.tolerance > 0.0) {
        return Err(GeometryError::InvalidParameter(format!(
            "refinement tolerance must be positive, got {}",
            opts.tolerance
        )));
    }
    let mut counts: Vec<usize> = match opts.base {
        Some(b) => vec![b.max(4); f.dim()],
        None => f.axes().iter().map(|a| (a.nodes / 2).max(8)).collect(),
    };
    let mut levels = vec![grid_level(f, s, &counts, k, &opts)?];
    let mut converged = false;
    loop {
        let next: Vec<usize> = counts.iter().map(|c| 2 * c).collect();
        if next.iter().product::<usize>() > opts.max_unknowns {
            break;
        }
        counts = next;
        levels.push(grid_level(f, s, &counts, k, &opts)?);
        let fine = &levels[levels.len() - 1].eigenvalues;
        let coarse = &levels[levels.len() - 2].eigenvalues;
        if fine.len() > 1 && (fine[1] - coarse[1]).abs() < opts.tolerance * fine[1].abs() {
            converged = true;
            break;
        }
    }
    let fine = &levels[levels.len() - 1].eigenvalues;
    let (eigenvalues, error_estimate) = if levels.len() > 1 {
        let coarse = &levels[levels.len() - 2].eigenvalues;
        let mut ev: Vec<f64> = fine
            .iter()
            .zip(coarse)
            .map(|(a, b)| (4.0 * a - b) / 3.0)
            .collect();
        ev.sort_by(f64::total_cmp);
        let err = fine
            .get(1)
            .zip(coarse.get(1))
            .map_or(f64::INFINITY, |(a, b)| (a - b).abs() / 3.0);
        (ev, err)
    } else {
        (fine.clone(), f64::INFINITY)
    };
    Ok(SpectrumResult {
        eigenvalues,
        method: SpectrumMethod::Grid,
        resolution: counts,
        error_estimate,
        levels,
        converged,
    })
}

/// Smallest `k` eigenvalues of the flat torus `R^n / B Z^n` with constant
/// metric `G`, where the columns of `B` are the period vectors:
/// `λ(m) = ξᵀ G⁻¹ ξ`, `ξ = 2π B⁻ᵀ m`.
pub fn lattice_spectrum(metric: &DMatrix<f64>, periods: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    let n = metric.nrows();
    if metric.ncols() != n || periods.nrows() != n || periods.ncols() != n {
        return Err(GeometryError::Dimension(
            "lattice needs an n × n metric and n period vectors".into(),
        ));
    }
    let ginv = metric
        .clone()
        .try_inverse()
        .ok_or_else(|| GeometryError::SingularMetric { point: Vec::new() })?;
    let binv = periods
        .clone()
        .try_inverse()
        .ok_or_else(|| GeometryError::InvalidParameter("period vectors are degenerate".into()))?;
    // quadratic form on integer vectors
    let q = binv.clone() * ginv * binv.transpose() * (TAU * TAU);
    let qmin = q.clone().symmetric_eigenvalues().min();
    if !(qmin > 0.0) {
        return Err(GeometryError::NotSpacelike { node: Vec::new() });
    }
    let mut radius: i64 = 1;
    loop {
        let side = (2 * radius + 1) as usize;
        let total = side.pow(n as u32);
        let mut values = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let m = nalgebra::DVector::from_fn(n, |_, _| {
                let c = (rest % side) as i64 - radius;
                rest /= side;
                c as f64
            });
            values.push(m.dot(&(&q * &m)));
        }
        values.sort_by(f64::total_cmp);
        values.truncate(k);
        // every integer vector outside the box has |m| > radius
        let bound = qmin * ((radius + 1) * (radius + 1)) as f64;
        if values.len() == k && values[k - 1] < bound {
            return Ok(values);
        }
        radius += 1;
    }
}

/// Lattice spectrum of a closed immersion whose induced metric is constant on
/// its rectangular parameter box.
pub fn flat_lattice_spectrum(f: &Immersion, s: &AmbientStructure, k: usize) -> Result<SpectrumResult> {
    f.require_closed()?;
    let nodes = f.nodes();
    let first = induced_metric_at(f, s, &nodes[0].0)?;
    let scale = first.amax().max(1.0);
    for (u, _) in &nodes[1..] {
        let g = induced_metric_at(f, s, u)?;
        if (&g - &first).amax() > 1e-9 * scale {
            return Err(GeometryError::Structure(
                "induced metric is not constant, no lattice closed form".into(),
            ));
        }
    }
    let periods = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        f.dim(),
        f.axes().iter().map(|a| a.len()),
    ));
    Ok(SpectrumResult {
        eigenvalues: lattice_spectrum(&first, &periods, k)?,
        method: SpectrumMethod::Lattice,
        resolution: Vec::new(),
        error_estimate: 0.0,
        levels: Vec::new(),
        converged: true,
    })
}

/// Band around the threshold inside which `λ₁` counts as marginal.
pub const MARGINAL_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub lambda1: f64,
    /// `A + 2ε`
    pub threshold: f64,
    pub stable: bool,
    /// `|λ₁ − (A + 2ε)|` within the band; reported stable.
    pub marginal: bool,
    /// `A + 2ε ≤ 0` (up to the band): stable regardless of the spectrum.
    pub corollary: bool,
}

impl StabilityVerdict {
    pub fn label(&self) -> &'static str {
        match (self.stable, self.marginal) {
            (true, true) => "marginal",
            (true, false) => "stable",
            (false, _) => "unstable",
        }
    }
}

/// Minimal Legendrian in an η-Einstein manifold with constant `A`: stable iff
/// `λ₁ ≥ A + 2ε`.
pub fn stability_verdict(lambda1: f64, a: f64, epsilon: i8, band: f64) -> StabilityVerdict {
    let threshold = a + 2.0 * epsilon as f64;
    let corollary = threshold <= band;
    let marginal = (lambda1 - threshold).abs() < band;
    StabilityVerdict {
        lambda1,
        threshold,
        stable: corollary || marginal || lambda1 >= threshold,
        marginal,
        corollary,
    }
}
