use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::AmbientStructure;
use crate::error::Result;

/// Least-squares fit of `Ric = A g + B η⊗η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EinsteinFit {
    pub a: f64,
    pub b: f64,
    /// Largest componentwise misfit over all samples.
    pub residual: f64,
    /// `|B − (2n − εA)|`
    pub constraint_residual: f64,
}

impl EinsteinFit {
    pub fn is_eta_einstein(&self, tol: f64) -> bool {
        self.residual <= tol
    }

    /// `A + 2ε`, the threshold for stability of minimal Legendrians.
    pub fn threshold(&self, epsilon: i8) -> f64 {
        self.a + 2.0 * epsilon as f64
    }
}

pub fn eta_einstein_constants(s: &AmbientStructure, sample: &[Vec<f64>]) -> Result<EinsteinFit> {
    let d = s.dim();
    let mut rows: Vec<[f64; 2]> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for p in sample {
        let pt = s.at(p)?;
        let g = &pt.geometry.g;
        let ric = &pt.geometry.curvature.ricci;
        for j in 0..d {
            for k in j..d {
                rows.push([g[(j, k)], pt.eta[j] * pt.eta[k]]);
                rhs.push(ric[(j, k)]);
            }
        }
    }
    let m = DMatrix::from_fn(rows.len(), 2, |i, c| rows[i][c]);
    let b = DVector::from_vec(rhs);
    let sol = m
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| crate::error::GeometryError::Structure(e.to_string()))?;
    let residual = (&m * &sol - &b).amax();
    let (a, bb) = (sol[0], sol[1]);
    let expected_b = 2.0 * s.n() as f64 - s.epsilon() as f64 * a;
    Ok(EinsteinFit {
        a,
        b: bb,
        residual,
        constraint_residual: (bb - expected_b).abs(),
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::contact::model_catalog;

    fn fit(name: &str, n: usize) -> EinsteinFit {
        let s = model_catalog(name, n).unwrap();
        let pts = s.sample_points(10, &mut ChaCha8Rng::seed_from_u64(11));
        eta_einstein_constants(&s, &pts).unwrap()
    }

    #[test]
    fn spheres_are_einstein() {
        for n in 1..=2 {
            let f = fit("round-sphere", n);
            assert!((f.a - 2.0 * n as f64).abs() < 1e-9);
            assert!(f.b.abs() < 1e-9);
            assert!(f.constraint_residual < 1e-9);
        }
    }

    #[test]
    fn deformed_constants_follow_the_map() {
        for (alpha, expected) in [(1.0, 6.0), (0.5, 10.0), (2.0, 4.0)] {
            let f = fit(&format!("tanno(round-sphere, alpha={alpha})"), 1);
            assert!((f.a - expected).abs() < 1e-9, "α = {alpha}: {}", f.a);
            assert!((f.b - (2.0 + f.a)).abs() < 1e-9);
        }
        let f = fit("tanno(heisenberg, alpha=3)", 1);
        assert!((f.a - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_einstein_metric_reports_large_residual() {
        use crate::expr::{ScalarExpr, VarSpace};
        use crate::tensor::MetricField;
        // Sasakian-looking data on a metric that is not η-Einstein
        let s = model_catalog("heisenberg", 1).unwrap();
        let v = VarSpace::chart(3);
        let mut upper: Vec<ScalarExpr> = s.metric().upper().to_vec();
        upper[0] = ScalarExpr::parse("x1^2 + 0.5 + 0.3*x0^2", &v).unwrap();
        let m = MetricField::from_upper(3, upper, vec![1, 1, 1]).unwrap();
        let broken = AmbientStructure::new(
            "bent",
            m,
            s.xi().to_vec(),
            s.eta().to_vec(),
            s.phi_components().to_vec(),
            1,
            s.domain().to_vec(),
        )
        .unwrap();
        let pts = broken.sample_points(10, &mut ChaCha8Rng::seed_from_u64(12));
        let f = eta_einstein_constants(&broken, &pts).unwrap();
        assert!(!f.is_eta_einstein(1e-6), "{f:?}");
    }
}
