//! Model structures in explicit charts.
//!
//! * `round-sphere`: unit `S^{2n+1} ⊂ C^{n+1}` in the stereographic chart
//!   from the south pole, `x_k = p_k / (1 + p_{2n+1})`, complex pairs
//!   `(p_0 + i p_1, …)`. `ξ = Jp`, `φX = (JX)^T`. The chart misses the south
//!   pole only; samples are drawn from `[-1.2, 1.2]^{2n+1}`.
//! * `heisenberg`: coordinates `(x_1, y_1, …, x_n, y_n, z)`,
//!   `η = dz − Σ y_i dx_i`, `g = η⊗η + ½ Σ (dx_i² + dy_i²)`, `ξ = ∂_z`.
//!   Global chart.
//! * `hyperbolic-bundle`: same coordinates with `y_i > 0`,
//!   `η = dz + Σ dx_i / y_i`, `g = η⊗η + ½ Σ (dx_i² + dy_i²) / y_i²`.
//!   Singular along `y_i = 0`; samples keep `y_i ∈ [0.5, 2]`.
//! * `tanno(<model>, alpha=<a>)`: the Lorentzian deformation of a model.

use super::AmbientStructure;
use crate::error::{GeometryError, Result};
use crate::expr::{ScalarExpr, VarSpace};
use crate::tensor::MetricField;

pub const MODEL_NAMES: &[&str] = &["round-sphere", "heisenberg", "hyperbolic-bundle"];

/// Looks up a model by name for `n ∈ {1, 2}`.
pub fn model_catalog(name: &str, n: usize) -> Result<AmbientStructure> {
    if !(1..=2).contains(&n) {
        return Err(GeometryError::InvalidParameter(format!(
            "models are provided for n = 1 or 2, got {n}"
        )));
    }
    let name = name.trim();
    if let Some(inner) = name.strip_prefix("tanno(").and_then(|r| r.strip_suffix(')')) {
        let (base, alpha) = parse_tanno_args(inner)
            .ok_or_else(|| GeometryError::UnknownModel(name.to_string()))?;
        let source = model_catalog(base, n)?;
        return crate::tanno::deformed_structure(&source, alpha);
    }
    match name {
        "round-sphere" => round_sphere(n),
        "heisenberg" => heisenberg(n),
        "hyperbolic-bundle" => hyperbolic_bundle(n),
        _ => Err(GeometryError::UnknownModel(name.to_string())),
    }
}

/// Accepts `base, alpha=a`, `base, α=a` or `base, a`.
fn parse_tanno_args(inner: &str) -> Option<(&str, f64)> {
    let (base, rest) = inner.rsplit_once(',')?;
    let rest = rest.trim();
    let value = match rest.split_once('=') {
        Some((key, v)) if matches!(key.trim(), "alpha" | "α" | "a") => v,
        Some(_) => return None,
        None => rest,
    };
    Some((base.trim(), value.trim().parse().ok()?))
}

fn build(
    name: &str,
    d: usize,
    metric: &[Vec<String>],
    signature: Vec<i8>,
    xi: &[String],
    eta: &[String],
    phi: &[Vec<String>],
    epsilon: i8,
    domain: Vec<(f64, f64)>,
) -> Result<AmbientStructure> {
    let vars = VarSpace::chart(d);
    let p = |s: &String| ScalarExpr::parse(s, &vars);
    let rows = metric
        .iter()
        .map(|r| r.iter().map(p).collect::<std::result::Result<Vec<_>, _>>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let metric = MetricField::from_rows(rows, signature)?;
    let xi = xi.iter().map(p).collect::<std::result::Result<Vec<_>, _>>()?;
    let eta = eta.iter().map(p).collect::<std::result::Result<Vec<_>, _>>()?;
    let phi = phi
        .iter()
        .flatten()
        .map(p)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    AmbientStructure::new(name, metric, xi, eta, phi, epsilon, domain)
}

fn round_sphere(n: usize) -> Result<AmbientStructure> {
    let d = 2 * n + 1;
    let last = 2 * n;
    let r2 = (0..d).map(|k| format!("x{k}^2")).collect::<Vec<_>>().join("+");
    let s = format!("(1+{r2})");
    let conformal = format!("4/{s}^2");
    // complex structure applied to the ambient position (x, 1) before scaling
    let jq = |i: usize| -> String {
        if i == last {
            "(-1)".into()
        } else if i % 2 == 0 {
            format!("(-x{})", i + 1)
        } else {
            format!("x{}", i - 1)
        }
    };
    let xi: Vec<String> = (0..d)
        .map(|i| {
            let w = if i == last {
                format!("(-(1-({r2}))/2)")
            } else {
                jq(i)
            };
            format!("({w}-x{i}*x{last})")
        })
        .collect();
    let eta = xi.iter().map(|x| format!("{conformal}*{x}")).collect::<Vec<_>>();
    let metric = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { conformal.clone() } else { "0".into() })
                .collect()
        })
        .collect::<Vec<Vec<String>>>();
    let phi = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let omega = if i < last && j < last && i / 2 == j / 2 && i != j {
                        if i % 2 == 1 {
                            "1"
                        } else {
                            "-1"
                        }
                    } else {
                        "0"
                    };
                    if i == j {
                        // the antisymmetric correction vanishes on the diagonal
                        return omega.to_string();
                    }
                    format!("{omega}-2/{s}*(x{j}*{}-x{i}*{})", jq(i), jq(j))
                })
                .collect()
        })
        .collect::<Vec<Vec<String>>>();
    build(
        "round-sphere",
        d,
        &metric,
        vec![1; d],
        &xi,
        &eta,
        &phi,
        1,
        vec![(-1.2, 1.2); d],
    )
}

fn heisenberg(n: usize) -> Result<AmbientStructure> {
    let d = 2 * n + 1;
    let z = 2 * n;
    let mut eta = vec!["0".to_string(); d];
    for m in 0..n {
        eta[2 * m] = format!("(-x{})", 2 * m + 1);
    }
    eta[z] = "1".into();
    let metric = contact_metric(d, &eta, |i| if i == z { None } else { Some("0.5".into()) });
    let mut xi = vec!["0".to_string(); d];
    xi[z] = "1".into();
    let mut phi = vec![vec!["0".to_string(); d]; d];
    for m in 0..n {
        let (x, y) = (2 * m, 2 * m + 1);
        phi[y][x] = "1".into();
        phi[x][y] = "-1".into();
        phi[z][y] = format!("(-x{y})");
    }
    let domain = vec![(-1.0, 1.0); d];
    build(
        "heisenberg",
        d,
        &metric,
        vec![1; d],
        &xi,
        &eta,
        &phi,
        1,
        domain,
    )
}

fn hyperbolic_bundle(n: usize) -> Result<AmbientStructure> {
    let d = 2 * n + 1;
    let z = 2 * n;
    let mut eta = vec!["0".to_string(); d];
    for m in 0..n {
        eta[2 * m] = format!("1/x{}", 2 * m + 1);
    }
    eta[z] = "1".into();
    let metric = contact_metric(d, &eta, |i| {
        if i == z {
            None
        } else {
            let y = 2 * (i / 2) + 1;
            Some(format!("0.5/x{y}^2"))
        }
    });
    let mut xi = vec!["0".to_string(); d];
    xi[z] = "1".into();
    let mut phi = vec![vec!["0".to_string(); d]; d];
    for m in 0..n {
        let (x, y) = (2 * m, 2 * m + 1);
        phi[y][x] = "1".into();
        phi[x][y] = "-1".into();
        phi[z][y] = format!("1/x{y}");
    }
    let mut domain = vec![(-1.0, 1.0); d];
    for m in 0..n {
        domain[2 * m + 1] = (0.5, 2.0);
    }
    build(
        "hyperbolic-bundle",
        d,
        &metric,
        vec![1; d],
        &xi,
        &eta,
        &phi,
        1,
        domain,
    )
}

/// `g = η⊗η + Σ_i c_i dx_i²`, with `c_i` absent on the Reeb coordinate.
fn contact_metric(
    d: usize,
    eta: &[String],
    diag: impl Fn(usize) -> Option<String>,
) -> Vec<Vec<String>> {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut terms = Vec::new();
                    if eta[i] != "0" && eta[j] != "0" {
                        terms.push(format!("({})*({})", eta[i], eta[j]));
                    }
                    if i == j {
                        terms.extend(diag(i));
                    }
                    if terms.is_empty() {
                        "0".to_string()
                    } else {
                        terms.join("+")
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for name in MODEL_NAMES {
            for n in 1..=2 {
                let s = model_catalog(name, n).unwrap();
                assert_eq!(s.dim(), 2 * n + 1);
            }
        }
        assert!(matches!(
            model_catalog("torus", 1),
            Err(GeometryError::UnknownModel(_))
        ));
        assert!(model_catalog("round-sphere", 3).is_err());
        assert_eq!(parse_tanno_args("round-sphere, alpha=2"), Some(("round-sphere", 2.0)));
        assert_eq!(parse_tanno_args("heisenberg,α=0.5"), Some(("heisenberg", 0.5)));
        assert_eq!(parse_tanno_args("heisenberg,beta=0.5"), None);
    }

    #[test]
    fn sphere_reeb_field_is_complex_rotation() {
        // chart point of p = (cos t, sin t, 0, 0) is (cos t, sin t, 0)/(1 + 0)
        let s = model_catalog("round-sphere", 1).unwrap();
        let t: f64 = 0.4;
        let pt = s.at(&[t.cos(), t.sin(), 0.0]).unwrap();
        // dp/dt = (−sin t, cos t, 0, 0) = J p, and the chart is linear there
        assert!((pt.xi[0] + t.sin()).abs() < 1e-14);
        assert!((pt.xi[1] - t.cos()).abs() < 1e-14);
        assert!(pt.xi[2].abs() < 1e-14);
    }
}
