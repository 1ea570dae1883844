//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [ambient]
//! model = "round-sphere"      # or an [ambient.inline] table
//! n = 1
//!
//! [immersion]
//! name = "great-circle"       # or `components` + `axes`
//!
//! [variation]
//! potentials = ["cos(u0)"]
//! random = 10
//!
//! [tanno]
//! alphas = [0.5, 1.0, 2.0]
//! ```
//!
//! Every section except `[ambient]` is optional and every field has a default.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sasakian_core::contact::{model_catalog, AmbientStructure, Modifiers};
use sasakian_core::expr::{ScalarExpr, VarSpace};
use sasakian_core::submanifold::{immersion_catalog, Axis, Immersion, IMMERSION_NAMES};
use sasakian_core::tanno::CurvatureRoute;
use sasakian_core::tensor::MetricField;
use sasakian_core::variation::Realization;

/// A configuration problem, located by its field path (`tanno.alphas[1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    SecondVariation,
    Tanno,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::SecondVariation => "second-variation",
            Command::Tanno => "tanno",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Overridden by `--seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    pub ambient: AmbientConfig,
    #[serde(default)]
    pub immersion: Option<ImmersionConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub variation: VariationConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub tanno: TannoConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientConfig {
    /// Catalog model, e.g. `round-sphere` or `tanno(heisenberg, alpha=2)`.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default)]
    pub inline: Option<InlineStructure>,
    /// Rescalings of the structure tensors, for sabotage runs.
    #[serde(default)]
    pub modifiers: ModifierConfig,
}

/// A structure written out as chart expressions in `x0, x1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineStructure {
    #[serde(default = "inline_name")]
    pub name: String,
    pub metric: Vec<Vec<String>>,
    /// Signs of the metric's principal directions; all `+1` when omitted.
    #[serde(default)]
    pub signature: Option<Vec<i8>>,
    pub xi: Vec<String>,
    pub eta: Vec<String>,
    /// Rows of `φ^i_j`.
    pub phi: Vec<Vec<String>>,
    #[serde(default = "one_i8")]
    pub epsilon: i8,
    /// Sampling box, one `[lo, hi]` per coordinate.
    pub domain: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModifierConfig {
    #[serde(default = "one_f64")]
    pub eta_scale: f64,
    #[serde(default = "one_f64")]
    pub phi_scale: f64,
    #[serde(default = "one_f64")]
    pub xi_scale: f64,
}

impl Default for ModifierConfig {
    fn default() -> Self {
        Self {
            eta_scale: 1.0,
            phi_scale: 1.0,
            xi_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionConfig {
    /// Catalog immersion.
    #[serde(default)]
    pub name: Option<String>,
    /// Components in `u0, u1, …`, one per ambient coordinate.
    #[serde(default)]
    pub components: Option<Vec<String>>,
    #[serde(default)]
    pub axes: Option<Vec<AxisConfig>>,
    /// Quadrature nodes per axis, replacing the defaults.
    #[serde(default)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    #[serde(default = "yes")]
    pub periodic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Ambient sample points, also used for the η-Einstein fit.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Require the Legendrian suites; needs an `[immersion]`.
    #[serde(default)]
    pub legendrian: bool,
    /// Nodes at which the Gauss equation is checked.
    #[serde(default = "default_gauss_samples")]
    pub gauss_samples: usize,
    /// Parameter step of the intrinsic curvature stencil.
    #[serde(default = "default_gauss_step")]
    pub gauss_step: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            points: default_points(),
            legendrian: false,
            gauss_samples: default_gauss_samples(),
            gauss_step: default_gauss_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationConfig {
    /// Potentials in `u0, u1, …`.
    #[serde(default)]
    pub potentials: Vec<String>,
    /// Additional random trigonometric potentials.
    #[serde(default)]
    pub random: usize,
    #[serde(default = "default_max_freq")]
    pub max_freq: i32,
    /// Base step `h_t` of the volume oracle.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub realization: Realization,
    /// Parameter step used for divergences.
    #[serde(default = "default_stencil")]
    pub stencil: f64,
    /// Attach the spectral verdict when the ambient is η-Einstein.
    #[serde(default = "yes")]
    pub verdict: bool,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            potentials: Vec::new(),
            random: 0,
            max_freq: default_max_freq(),
            step: default_step(),
            levels: default_levels(),
            realization: Realization::default(),
            stencil: default_stencil(),
            verdict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Eigenvalues computed, `λ₀ = 0` included.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Coarsest nodes per axis.
    #[serde(default)]
    pub base: Option<usize>,
    /// Relative change of `λ₁` accepted between refinements.
    #[serde(default = "default_refinement")]
    pub refinement: f64,
    #[serde(default = "default_max_unknowns")]
    pub max_unknowns: usize,
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    /// Compare against the flat-torus closed form when the metric is constant.
    #[serde(default = "yes")]
    pub lattice: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            k: default_k(),
            base: None,
            refinement: default_refinement(),
            max_unknowns: default_max_unknowns(),
            dense_limit: default_dense_limit(),
            lattice: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TannoConfig {
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default = "exact_route")]
    pub curvature: CurvatureRoute,
    /// Stability verdicts in both structures when an immersion is given.
    #[serde(default = "yes")]
    pub equivalence: bool,
    #[serde(default = "default_stencil")]
    pub stencil: f64,
}

impl Default for TannoConfig {
    fn default() -> Self {
        Self {
            alphas: Vec::new(),
            curvature: exact_route(),
            equivalence: true,
            stencil: default_stencil(),
        }
    }
}

/// Record tolerances; all multiplied by `--tolerance-scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "t_algebraic")]
    pub algebraic: f64,
    #[serde(default = "t_differential")]
    pub differential: f64,
    #[serde(default = "t_curvature")]
    pub curvature: f64,
    /// `max |η(∂_a F)|`
    #[serde(default = "t_legendrian")]
    pub legendrian: f64,
    /// Pointwise and shape-operator identities on the immersion.
    #[serde(default = "t_submanifold")]
    pub submanifold: f64,
    #[serde(default = "t_gauss")]
    pub gauss: f64,
    /// Residual of the η-Einstein fit.
    #[serde(default = "t_einstein")]
    pub einstein: f64,
    #[serde(default = "t_l_minimal")]
    pub l_minimal: f64,
    /// `|H|` below which the immersion counts as minimal.
    #[serde(default = "t_minimal")]
    pub minimal: f64,
    /// Relative, closed forms against the volume oracle.
    #[serde(default = "t_oracle")]
    pub oracle: f64,
    /// Relative, closed form against the trace and short forms.
    #[serde(default = "t_trace")]
    pub trace: f64,
    /// Relative, grid `λ₁` against the lattice closed form.
    #[serde(default = "t_lattice")]
    pub lattice: f64,
    #[serde(default)]
    pub deformation: DeformationTolerances,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            algebraic: t_algebraic(),
            differential: t_differential(),
            curvature: t_curvature(),
            legendrian: t_legendrian(),
            submanifold: t_submanifold(),
            gauss: t_gauss(),
            einstein: t_einstein(),
            l_minimal: t_l_minimal(),
            minimal: t_minimal(),
            oracle: t_oracle(),
            trace: t_trace(),
            lattice: t_lattice(),
            deformation: DeformationTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationTolerances {
    #[serde(default = "d_invariant")]
    pub invariant: f64,
    #[serde(default = "d_connection")]
    pub connection: f64,
    #[serde(default = "d_curvature")]
    pub curvature: f64,
    #[serde(default = "d_einstein")]
    pub einstein: f64,
    #[serde(default = "d_homothety")]
    pub homothety: f64,
    #[serde(default = "d_scaling")]
    pub scaling: f64,
    #[serde(default = "d_minimal")]
    pub minimal: f64,
}

impl Default for DeformationTolerances {
    fn default() -> Self {
        Self {
            invariant: d_invariant(),
            connection: d_connection(),
            curvature: d_curvature(),
            einstein: d_einstein(),
            homothety: d_homothety(),
            scaling: d_scaling(),
            minimal: d_minimal(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV of every computed spectrum.
    #[serde(default)]
    pub eigenvalues_csv: Option<PathBuf>,
    /// CSV of the per-α constants of a deformation run.
    #[serde(default)]
    pub constants_csv: Option<PathBuf>,
}

fn one() -> usize {
    1
}
fn one_i8() -> i8 {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn inline_name() -> String {
    "inline".into()
}
fn default_points() -> usize {
    20
}
fn default_gauss_samples() -> usize {
    12
}
fn default_gauss_step() -> f64 {
    1e-3
}
fn default_max_freq() -> i32 {
    2
}
fn default_step() -> f64 {
    0.05
}
fn default_levels() -> usize {
    3
}
fn default_stencil() -> f64 {
    1e-3
}
fn default_k() -> usize {
    4
}
fn default_refinement() -> f64 {
    0.01
}
fn default_max_unknowns() -> usize {
    70_000
}
fn default_dense_limit() -> usize {
    1600
}
fn exact_route() -> CurvatureRoute {
    CurvatureRoute::Exact
}
fn t_algebraic() -> f64 {
    1e-8
}
fn t_differential() -> f64 {
    1e-7
}
fn t_curvature() -> f64 {
    1e-6
}
fn t_legendrian() -> f64 {
    1e-8
}
fn t_submanifold() -> f64 {
    1e-6
}
fn t_gauss() -> f64 {
    1e-5
}
fn t_einstein() -> f64 {
    1e-6
}
fn t_l_minimal() -> f64 {
    1e-6
}
fn t_minimal() -> f64 {
    1e-6
}
fn t_oracle() -> f64 {
    1e-3
}
fn t_trace() -> f64 {
    1e-5
}
fn t_lattice() -> f64 {
    1e-3
}
fn d_invariant() -> f64 {
    1e-9
}
fn d_connection() -> f64 {
    1e-5
}
fn d_curvature() -> f64 {
    1e-4
}
fn d_einstein() -> f64 {
    1e-5
}
fn d_homothety() -> f64 {
    1e-9
}
fn d_scaling() -> f64 {
    1e-6
}
fn d_minimal() -> f64 {
    1e-6
}

impl RunConfig {
    /// Parses TOML text; deserialization errors carry the offending field path.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                ConfigError::new("", inner.to_string().trim().to_string())
            } else {
                ConfigError::new(path, inner.message().trim().to_string())
            }
        })
    }

    /// Checks the configuration for `command` without evaluating any geometry.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        self.ambient.validate()?;
        if let Some(im) = &self.immersion {
            im.validate()?;
        }
        let need_immersion = |what: &str| -> Result<(), ConfigError> {
            if self.immersion.is_none() {
                return Err(ConfigError::new("immersion", format!("{what} needs an [immersion] section")));
            }
            Ok(())
        };
        if self.verify.points == 0 {
            return Err(ConfigError::new("verify.points", "must be at least 1"));
        }
        if self.verify.gauss_samples == 0 {
            return Err(ConfigError::new("verify.gauss_samples", "must be at least 1"));
        }
        positive("verify.gauss_step", self.verify.gauss_step)?;
        if self.verify.legendrian {
            need_immersion("verify.legendrian")?;
        }
        let v = &self.variation;
        positive("variation.step", v.step)?;
        positive("variation.stencil", v.stencil)?;
        if v.levels < 3 {
            return Err(ConfigError::new(
                "variation.levels",
                format!("the order estimate needs at least 3 levels, got {}", v.levels),
            ));
        }
        if v.max_freq < 1 {
            return Err(ConfigError::new("variation.max_freq", "must be at least 1"));
        }
        let sp = &self.spectrum;
        if sp.k < 2 {
            return Err(ConfigError::new("spectrum.k", format!("must be at least 2, got {}", sp.k)));
        }
        if let Some(b) = sp.base {
            if b < 4 {
                return Err(ConfigError::new("spectrum.base", format!("must be at least 4, got {b}")));
            }
        }
        positive("spectrum.refinement", sp.refinement)?;
        if sp.max_unknowns < 16 {
            return Err(ConfigError::new("spectrum.max_unknowns", "must be at least 16"));
        }
        for (i, &a) in self.tanno.alphas.iter().enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return Err(ConfigError::new(
                    format!("tanno.alphas[{i}]"),
                    format!("must be a positive finite number, got {a}"),
                ));
            }
        }
        if let CurvatureRoute::Differenced { step } = self.tanno.curvature {
            positive("tanno.curvature.step", step)?;
        }
        positive("tanno.stencil", self.tanno.stencil)?;
        self.tolerances.validate()?;
        match command {
            Command::Verify => {}
            Command::SecondVariation => {
                need_immersion("second-variation")?;
                if v.potentials.is_empty() && v.random == 0 {
                    return Err(ConfigError::new(
                        "variation.potentials",
                        "second-variation needs at least one potential (or variation.random > 0)",
                    ));
                }
            }
            Command::Spectrum => need_immersion("spectrum")?,
            Command::Tanno => {
                if self.tanno.alphas.is_empty() {
                    return Err(ConfigError::new("tanno.alphas", "tanno needs at least one α"));
                }
            }
        }
        Ok(())
    }

    /// The ambient structure, with modifiers applied.
    pub fn build_ambient(&self) -> Result<AmbientStructure, ConfigError> {
        self.ambient.build()
    }

    pub fn build_immersion(&self) -> Result<Option<Immersion>, ConfigError> {
        self.immersion.as_ref().map(|c| c.build()).transpose()
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be a positive finite number, got {v}")))
    }
}

impl AmbientConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        match (&self.model, &self.inline) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new("ambient", "give either `model` or `inline`, not both"))
            }
            (None, None) => return Err(ConfigError::new("ambient", "missing `model` or `inline`")),
            (Some(_), None) if !(1..=2).contains(&self.n) => {
                return Err(ConfigError::new("ambient.n", format!("models exist for n = 1 or 2, got {}", self.n)))
            }
            _ => {}
        }
        for (name, v) in [
            ("eta_scale", self.modifiers.eta_scale),
            ("phi_scale", self.modifiers.phi_scale),
            ("xi_scale", self.modifiers.xi_scale),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::new(format!("ambient.modifiers.{name}"), "must be finite"));
            }
        }
        if let Some(s) = &self.inline {
            s.validate()?;
        }
        Ok(())
    }

    fn build(&self) -> Result<AmbientStructure, ConfigError> {
        let s = match (&self.model, &self.inline) {
            (Some(model), _) => {
                model_catalog(model, self.n).map_err(|e| ConfigError::new("ambient.model", e.to_string()))?
            }
            (None, Some(inline)) => inline.build()?,
            (None, None) => return Err(ConfigError::new("ambient", "missing `model` or `inline`")),
        };
        let m = Modifiers {
            eta_scale: self.modifiers.eta_scale,
            phi_scale: self.modifiers.phi_scale,
            xi_scale: self.modifiers.xi_scale,
        };
        Ok(if m.is_identity() { s } else { s.modified(&m) })
    }
}

impl InlineStructure {
    fn validate(&self) -> Result<(), ConfigError> {
        let d = self.metric.len();
        let p = "ambient.inline";
        if d < 3 || d % 2 == 0 {
            return Err(ConfigError::new(
                format!("{p}.metric"),
                format!("needs an odd number ≥ 3 of rows, got {d}"),
            ));
        }
        for (i, row) in self.metric.iter().enumerate() {
            if row.len() != d {
                return Err(ConfigError::new(format!("{p}.metric[{i}]"), format!("needs {d} entries")));
            }
        }
        for (name, len) in [("xi", self.xi.len()), ("eta", self.eta.len()), ("domain", self.domain.len())] {
            if len != d {
                return Err(ConfigError::new(format!("{p}.{name}"), format!("needs {d} entries, got {len}")));
            }
        }
        if self.phi.len() != d {
            return Err(ConfigError::new(format!("{p}.phi"), format!("needs {d} rows")));
        }
        for (i, row) in self.phi.iter().enumerate() {
            if row.len() != d {
                return Err(ConfigError::new(format!("{p}.phi[{i}]"), format!("needs {d} entries")));
            }
        }
        if let Some(sig) = &self.signature {
            if sig.len() != d || sig.iter().any(|s| s.abs() != 1) {
                return Err(ConfigError::new(format!("{p}.signature"), format!("needs {d} entries of ±1")));
            }
        }
        if self.epsilon.abs() != 1 {
            return Err(ConfigError::new(format!("{p}.epsilon"), "must be 1 or -1"));
        }
        for (i, [lo, hi]) in self.domain.iter().enumerate() {
            if !(lo < hi) {
                return Err(ConfigError::new(format!("{p}.domain[{i}]"), "needs lo < hi"));
            }
        }
        Ok(())
    }

    fn build(&self) -> Result<AmbientStructure, ConfigError> {
        let d = self.metric.len();
        let vars = VarSpace::chart(d);
        let p = "ambient.inline";
        let parse = |path: String, src: &str| {
            ScalarExpr::parse(src, &vars).map_err(|e| ConfigError::new(path, e.to_string()))
        };
        let mut rows = Vec::with_capacity(d);
        for (i, row) in self.metric.iter().enumerate() {
            let mut r = Vec::with_capacity(d);
            for (j, src) in row.iter().enumerate() {
                r.push(parse(format!("{p}.metric[{i}][{j}]"), src)?);
            }
            rows.push(r);
        }
        let signature = self.signature.clone().unwrap_or_else(|| vec![1; d]);
        let metric =
            MetricField::from_rows(rows, signature).map_err(|e| ConfigError::new(format!("{p}.metric"), e.to_string()))?;
        let list = |name: &str, v: &[String]| -> Result<Vec<ScalarExpr>, ConfigError> {
            v.iter().enumerate().map(|(i, s)| parse(format!("{p}.{name}[{i}]"), s)).collect()
        };
        let xi = list("xi", &self.xi)?;
        let eta = list("eta", &self.eta)?;
        let mut phi = Vec::with_capacity(d * d);
        for (i, row) in self.phi.iter().enumerate() {
            for (j, src) in row.iter().enumerate() {
                phi.push(parse(format!("{p}.phi[{i}][{j}]"), src)?);
            }
        }
        let domain = self.domain.iter().map(|[a, b]| (*a, *b)).collect();
        AmbientStructure::new(&self.name, metric, xi, eta, phi, self.epsilon, domain)
            .map_err(|e| ConfigError::new(p, e.to_string()))
    }
}

impl ImmersionConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        match (&self.name, &self.components) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new("immersion", "give either `name` or `components`, not both"))
            }
            (None, None) => return Err(ConfigError::new("immersion", "missing `name` or `components`")),
            (Some(name), None) => {
                if !IMMERSION_NAMES.contains(&name.as_str()) {
                    return Err(ConfigError::new(
                        "immersion.name",
                        format!("unknown immersion {name:?} (known: {})", IMMERSION_NAMES.join(", ")),
                    ));
                }
                if self.axes.is_some() {
                    return Err(ConfigError::new("immersion.axes", "catalog immersions carry their own axes"));
                }
            }
            (None, Some(_)) => match &self.axes {
                None => return Err(ConfigError::new("immersion.axes", "required with `components`")),
                Some(axes) if axes.is_empty() => {
                    return Err(ConfigError::new("immersion.axes", "needs at least one axis"))
                }
                Some(axes) => {
                    for (i, a) in axes.iter().enumerate() {
                        if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                            return Err(ConfigError::new(format!("immersion.axes[{i}]"), "needs finite lo < hi"));
                        }
                        if a.nodes < 4 {
                            return Err(ConfigError::new(
                                format!("immersion.axes[{i}].nodes"),
                                format!("must be at least 4, got {}", a.nodes),
                            ));
                        }
                    }
                }
            },
        }
        if let Some(n) = self.nodes {
            if n < 4 {
                return Err(ConfigError::new("immersion.nodes", format!("must be at least 4, got {n}")));
            }
        }
        Ok(())
    }

    fn build(&self) -> Result<Immersion, ConfigError> {
        let f = match (&self.name, &self.components, &self.axes) {
            (Some(name), _, _) => {
                immersion_catalog(name)
                    .map_err(|e| ConfigError::new("immersion.name", e.to_string()))?
                    .immersion
            }
            (None, Some(comps), Some(axes)) => {
                let axes = axes
                    .iter()
                    .map(|a| Axis {
                        lo: a.lo,
                        hi: a.hi,
                        periodic: a.periodic,
                        nodes: a.nodes,
                    })
                    .collect();
                Immersion::parse("inline", comps, axes)
                    .map_err(|e| ConfigError::new("immersion.components", e.to_string()))?
            }
            _ => return Err(ConfigError::new("immersion", "missing `name` or `components`")),
        };
        Ok(match self.nodes {
            Some(n) => f.with_resolution(n),
            None => f,
        })
    }
}

impl ToleranceConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.deformation;
        for (name, v) in [
            ("algebraic", self.algebraic),
            ("differential", self.differential),
            ("curvature", self.curvature),
            ("legendrian", self.legendrian),
            ("submanifold", self.submanifold),
            ("gauss", self.gauss),
            ("einstein", self.einstein),
            ("l_minimal", self.l_minimal),
            ("minimal", self.minimal),
            ("oracle", self.oracle),
            ("trace", self.trace),
            ("lattice", self.lattice),
            ("deformation.invariant", d.invariant),
            ("deformation.connection", d.connection),
            ("deformation.curvature", d.curvature),
            ("deformation.einstein", d.einstein),
            ("deformation.homothety", d.homothety),
            ("deformation.scaling", d.scaling),
            ("deformation.minimal", d.minimal),
        ] {
            positive(&format!("tolerances.{name}"), v)?;
        }
        Ok(())
    }

    /// Every tolerance multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let d = &self.deformation;
        Self {
            algebraic: self.algebraic * s,
            differential: self.differential * s,
            curvature: self.curvature * s,
            legendrian: self.legendrian * s,
            submanifold: self.submanifold * s,
            gauss: self.gauss * s,
            einstein: self.einstein * s,
            l_minimal: self.l_minimal * s,
            minimal: self.minimal * s,
            oracle: self.oracle * s,
            trace: self.trace * s,
            lattice: self.lattice * s,
            deformation: DeformationTolerances {
                invariant: d.invariant * s,
                connection: d.connection * s,
                curvature: d.curvature * s,
                einstein: d.einstein * s,
                homothety: d.homothety * s,
                scaling: d.scaling * s,
                minimal: d.minimal * s,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml(text)
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse("[ambient]\nmodel = \"round-sphere\"\n").unwrap();
        assert_eq!(c.ambient.n, 1);
        assert_eq!(c.verify.points, 20);
        assert_eq!(c.tolerances, ToleranceConfig::default());
        assert!(c.validate(Command::Verify).is_ok());
        assert_eq!(c.validate(Command::Tanno).unwrap_err().path, "tanno.alphas");
    }

    #[test]
    fn unknown_fields_are_located() {
        let e = parse("[ambient]\nmodel = \"round-sphere\"\n[tanno]\nalpha = [1.0]\n").unwrap_err();
        assert_eq!(e.path, "tanno.alpha");
        assert!(e.message.contains("alpha"), "{e}");
        let e = parse("[ambient]\nmodel = \"round-sphere\"\n[spectrum]\nk = \"four\"\n").unwrap_err();
        assert_eq!(e.path, "spectrum.k");
        let e = parse("[ambient\nmodel = 1\n").unwrap_err();
        assert!(e.path.is_empty() && e.message.contains("line 1"), "{e}");
    }

    #[test]
    fn invalid_values_are_located() {
        let c = parse("[ambient]\nmodel = \"round-sphere\"\n[tanno]\nalphas = [0.5, -1.0]\n").unwrap();
        let e = c.validate(Command::Tanno).unwrap_err();
        assert_eq!(e.path, "tanno.alphas[1]");
        let c = parse("[ambient]\nmodel = \"round-sphere\"\n[verify]\nlegendrian = true\n").unwrap();
        assert_eq!(c.validate(Command::Verify).unwrap_err().path, "immersion");
        let c = parse("[ambient]\nmodel = \"round-sphere\"\n[immersion]\nname = \"great-circle\"\n").unwrap();
        assert_eq!(c.validate(Command::SecondVariation).unwrap_err().path, "variation.potentials");
        let c = parse("[ambient]\nmodel = \"round-sphere\"\nn = 3\n").unwrap();
        assert_eq!(c.validate(Command::Verify).unwrap_err().path, "ambient.n");
        let c = parse("[ambient]\nmodel = \"round-sphere\"\n[immersion]\nname = \"circle\"\n").unwrap();
        assert_eq!(c.validate(Command::Verify).unwrap_err().path, "immersion.name");
        let c = parse("[ambient]\nmodel = \"round-sphere\"\n[tolerances]\noracle = 0.0\n").unwrap();
        assert_eq!(c.validate(Command::Verify).unwrap_err().path, "tolerances.oracle");
    }

    #[test]
    fn inline_structure_matches_the_catalog() {
        let text = r#"
            [ambient.inline]
            metric = [["1.5", "0", "0"], ["0", "0.5", "0"], ["0", "0", "1"]]
            xi = ["0", "0", "1"]
            eta = ["0", "0", "1"]
            phi = [["0", "1", "0"], ["-1", "0", "0"], ["0", "0", "0"]]
            domain = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]
        "#;
        let c = parse(text).unwrap();
        c.validate(Command::Verify).unwrap();
        let s = c.build_ambient().unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.epsilon(), 1);
        let bad = text.replace("[\"0\", \"0\", \"1\"]]\n            xi", "[\"0\", \"0\"]]\n            xi");
        let e = parse(&bad).unwrap().validate(Command::Verify).unwrap_err();
        assert_eq!(e.path, "ambient.inline.metric[2]");
    }

    #[test]
    fn expression_errors_name_the_component() {
        let text = r#"
            [ambient]
            model = "round-sphere"
            [immersion]
            components = ["cos(u0)", "sin(", "0"]
            axes = [{ lo = 0.0, hi = 6.283185307179586, nodes = 32 }]
        "#;
        let c = parse(text).unwrap();
        c.validate(Command::Verify).unwrap();
        assert_eq!(c.build_immersion().unwrap_err().path, "immersion.components");
    }

    #[test]
    fn route_and_realization_parse() {
        let text = r#"
            [ambient]
            model = "heisenberg"
            [variation]
            realization = "contact-flow"
            [tanno]
            alphas = [2.0]
            curvature = { kind = "differenced", step = 0.001 }
        "#;
        let c = parse(text).unwrap();
        assert_eq!(c.variation.realization, Realization::ContactFlow);
        assert_eq!(c.tanno.curvature, CurvatureRoute::Differenced { step: 1e-3 });
    }

    #[test]
    fn scaling_multiplies_every_tolerance() {
        let t = ToleranceConfig::default().scaled(10.0);
        assert_eq!(t.oracle, 1e-2);
        assert_eq!(t.deformation.homothety, 1e-8);
    }
}
