//! Central-difference derivative oracle, used to cross-check the jet engine.

use nalgebra::DMatrix;

use super::{EvalError, ScalarExpr};

/// Fourth-order central-difference estimates of first and second partials.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDifferenceJet {
    pub value: f64,
    pub partials: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

const FIRST: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// Estimates partials of `e` at `p` with step `h` using five-point stencils.
///
/// Panics if `h` is not positive.
pub fn derivative_oracle(
    e: &ScalarExpr,
    p: &[f64],
    h: f64,
) -> Result<FiniteDifferenceJet, EvalError> {
    assert!(h > 0.0, "step must be positive");
    let n = p.len();
    let value = e.eval_f64(p)?;
    let at = |shifts: &[(usize, f64)]| -> Result<f64, EvalError> {
        let mut q = p.to_vec();
        for &(i, s) in shifts {
            q[i] += s * h;
        }
        e.eval_f64(&q)
    };

    let mut partials = vec![0.0; n];
    for (i, d) in partials.iter_mut().enumerate() {
        let mut acc = 0.0;
        for &(s, w) in &FIRST {
            acc += w * at(&[(i, s)])?;
        }
        *d = acc / (12.0 * h);
    }

    let mut hessian = DMatrix::zeros(n, n);
    for i in 0..n {
        let diag = -at(&[(i, 2.0)])? + 16.0 * at(&[(i, 1.0)])? - 30.0 * value
            + 16.0 * at(&[(i, -1.0)])?
            - at(&[(i, -2.0)])?;
        hessian[(i, i)] = diag / (12.0 * h * h);
        for j in 0..i {
            let mut acc = 0.0;
            for &(si, wi) in &FIRST {
                for &(sj, wj) in &FIRST {
                    acc += wi * wj * at(&[(i, si), (j, sj)])?;
                }
            }
            let mixed = acc / (144.0 * h * h);
            hessian[(i, j)] = mixed;
            hessian[(j, i)] = mixed;
        }
    }
    Ok(FiniteDifferenceJet {
        value,
        partials,
        hessian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarSpace;

    #[test]
    fn sine_slope_matches_cosine() {
        let e = ScalarExpr::parse("sin(x0)", &VarSpace::chart(1)).unwrap();
        let fd = derivative_oracle(&e, &[1.0], 1e-3).unwrap();
        assert!((fd.partials[0] - 1f64.cos()).abs() < 1e-10);
        let jet = e.eval_jet2(&[1.0]).unwrap();
        assert!((fd.partials[0] - jet.partials[0]).abs() < 1e-10);
    }

    #[test]
    fn constants_have_exactly_zero_partials() {
        let e = ScalarExpr::parse("5", &VarSpace::chart(2)).unwrap();
        let fd = derivative_oracle(&e, &[0.3, 0.7], 1e-2).unwrap();
        assert!(fd.partials.iter().all(|&d| d == 0.0));
        assert!(fd.hessian.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn square_has_curvature_two() {
        let e = ScalarExpr::parse("x0^2", &VarSpace::chart(1)).unwrap();
        let fd = derivative_oracle(&e, &[3.0], 1e-2).unwrap();
        assert!((fd.hessian[(0, 0)] - 2.0).abs() < 1e-8);
    }
}
