//! Concrete immersions into the model charts.
//!
//! Sphere entries are written as curves or surfaces `p(u)` in `C^{n+1}` and
//! pushed through the stereographic chart `x_k = p_k / (1 + p_{2n+1})`.
//!
//! * `great-circle`: `p = (cos u, 0, sin u, 0)` in `S³`; totally geodesic.
//! * `reeb-orbit`: `p = (cos u, sin u, 0, 0)`, an orbit of `ξ`; not Legendrian.
//! * `torus-knot`: `p = (e^{2iu}/√3, √2 e^{−iu}/√3)`; Legendrian, L-minimal,
//!   not minimal.
//! * `wavy-circle`: `p = (r_1 e^{i(u + δ sin 2u)}, r_2 e^{i(−u + δ sin 2u)})`,
//!   `r_{1,2}² = ½ ∓ δ cos 2u`, `δ = 0.1`; Legendrian, not L-minimal.
//! * `slanted-knot`: `p = (e^{2iu}, e^{iu})/√2`; neither Legendrian nor
//!   tangent to `ξ`.
//! * `real-sphere`: the real locus `S² ⊂ S⁵` in polar angles; totally geodesic.
//! * `clifford-torus`: `p = (e^{iu}, e^{iv}, e^{−i(u+v)})/√3` in `S⁵`; the
//!   phases sum to zero so the torus is Legendrian; minimal and flat.
//! * `heisenberg-line`, `heisenberg-plane`: `{y = 0, z = 0}`, closed up by the
//!   isometries `x_i ↦ x_i + 1`.
//! * `figure-eight`: `(sin u, sin 2u, −⅔ cos³u)` in the Heisenberg group.
//! * `hyperbolic-line`, `hyperbolic-plane`: `{x = 0, z = 0}` with `y_i = e^{u_i}`,
//!   closed up by the dilation `(x, y) ↦ e^{2π}(x, y)`.

use std::f64::consts::{PI, TAU};

use super::{Axis, Immersion};
use crate::error::{GeometryError, Result};

pub const IMMERSION_NAMES: &[&str] = &[
    "great-circle",
    "reeb-orbit",
    "torus-knot",
    "wavy-circle",
    "slanted-knot",
    "real-sphere",
    "clifford-torus",
    "heisenberg-line",
    "heisenberg-plane",
    "figure-eight",
    "hyperbolic-line",
    "hyperbolic-plane",
];

#[derive(Debug, Clone)]
pub struct CatalogImmersion {
    pub immersion: Immersion,
    /// Model the map is designed for (also valid for its deformations).
    pub ambient: &'static str,
    pub n: usize,
    pub legendrian: bool,
    pub minimal: bool,
    pub l_minimal: bool,
}

fn sphere_chart(p: &[String]) -> Vec<String> {
    let last = &p[p.len() - 1];
    p[..p.len() - 1]
        .iter()
        .map(|c| format!("({c})/(1+({last}))"))
        .collect()
}

pub fn immersion_catalog(name: &str) -> Result<CatalogImmersion> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let circle = |nodes| vec![Axis::periodic(0.0, TAU, nodes)];
    let (comps, axes, ambient, n, legendrian, minimal, l_minimal) = match name {
        "great-circle" => (
            s(&["cos(u0)", "0", "sin(u0)"]),
            circle(64),
            "round-sphere",
            1,
            true,
            true,
            true,
        ),
        "reeb-orbit" => (
            s(&["cos(u0)", "sin(u0)", "0"]),
            circle(64),
            "round-sphere",
            1,
            false,
            true,
            false,
        ),
        "torus-knot" => {
            let a = (1.0f64 / 3.0).sqrt();
            let b = (2.0f64 / 3.0).sqrt();
            let p = [
                format!("{a:?}*cos(2*u0)"),
                format!("{a:?}*sin(2*u0)"),
                format!("{b:?}*cos(u0)"),
                format!("(-{b:?})*sin(u0)"),
            ];
            (sphere_chart(&p), circle(96), "round-sphere", 1, true, false, true)
        }
        "slanted-knot" => {
            let c = format!("{:?}", 0.5f64.sqrt());
            let p = [
                format!("{c}*cos(2*u0)"),
                format!("{c}*sin(2*u0)"),
                format!("{c}*cos(u0)"),
                format!("{c}*sin(u0)"),
            ];
            (sphere_chart(&p), circle(64), "round-sphere", 1, false, false, false)
        }
        "wavy-circle" => {
            let r1 = "sqrt(0.5-0.1*cos(2*u0))";
            let r2 = "sqrt(0.5+0.1*cos(2*u0))";
            let t1 = "(u0+0.1*sin(2*u0))";
            let t2 = "(-u0+0.1*sin(2*u0))";
            let p = [
                format!("{r1}*cos{t1}"),
                format!("{r1}*sin{t1}"),
                format!("{r2}*cos{t2}"),
                format!("{r2}*sin{t2}"),
            ];
            (sphere_chart(&p), circle(96), "round-sphere", 1, true, false, false)
        }
        "real-sphere" => (
            s(&["sin(u0)*cos(u1)", "0", "sin(u0)*sin(u1)", "0", "cos(u0)"]),
            vec![Axis::interval(0.0, PI, 24), Axis::periodic(0.0, TAU, 32)],
            "round-sphere",
            2,
            true,
            true,
            true,
        ),
        "clifford-torus" => {
            let c = format!("{:?}", 1.0 / 3f64.sqrt());
            let p = [
                format!("{c}*cos(u0)"),
                format!("{c}*sin(u0)"),
                format!("{c}*cos(u1)"),
                format!("{c}*sin(u1)"),
                format!("{c}*cos(u0+u1)"),
                format!("(-{c})*sin(u0+u1)"),
            ];
            (
                sphere_chart(&p),
                vec![Axis::periodic(0.0, TAU, 32), Axis::periodic(0.0, TAU, 32)],
                "round-sphere",
                2,
                true,
                true,
                true,
            )
        }
        "heisenberg-line" => (
            s(&["u0", "0", "0"]),
            vec![Axis::periodic(0.0, 1.0, 32)],
            "heisenberg",
            1,
            true,
            true,
            true,
        ),
        "heisenberg-plane" => (
            s(&["u0", "0", "u1", "0", "0"]),
            vec![Axis::periodic(0.0, 1.0, 16), Axis::periodic(0.0, 1.0, 16)],
            "heisenberg",
            2,
            true,
            true,
            true,
        ),
        "figure-eight" => (
            s(&["sin(u0)", "sin(2*u0)", "(-2/3)*cos(u0)^3"]),
            circle(128),
            "heisenberg",
            1,
            true,
            false,
            false,
        ),
        "hyperbolic-line" => (
            s(&["0", "exp(u0)", "0"]),
            vec![Axis::periodic(-PI, PI, 32)],
            "hyperbolic-bundle",
            1,
            true,
            true,
            true,
        ),
        "hyperbolic-plane" => (
            s(&["0", "exp(u0)", "0", "exp(u1)", "0"]),
            vec![Axis::periodic(-PI, PI, 16), Axis::periodic(-PI, PI, 16)],
            "hyperbolic-bundle",
            2,
            true,
            true,
            true,
        ),
        _ => return Err(GeometryError::UnknownModel(name.to_string())),
    };
    Ok(CatalogImmersion {
        immersion: Immersion::parse(name, &comps, axes)?,
        ambient,
        n,
        legendrian,
        minimal,
        l_minimal,
    })
}
