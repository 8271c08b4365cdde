//! Strict TOML run configuration with per-scenario defaults.
//!
//! The user's table is laid over the scenario's default table and the result
//! is deserialized into fully populated structs, so the resolved config
//! serializes back into a file that parses to the same value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anisotropy::{Anisotropy, RegularizationMode, RegularizedAnisotropy};
use crate::forcing::{Forcing, Shape, Tent, TimeProfile};
use crate::grid::{Boundary, Grid, ScalarField};
use crate::levelset::{CurvatureForm, GradientNorm, Mobility, SchemeOptions};
use crate::tvprox::{MinimalDivergenceOptions, ProxOptions, Solver};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("key `{key}`: {message}")]
    Key { key: String, message: String },
    #[error("scenario `{scenario}` does not use key `{key}`")]
    Unused { scenario: Scenario, key: String },
}

impl ConfigError {
    fn key(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Key { key: key.into(), message: message.into() }
    }

    /// The offending key, when the error names one.
    pub fn key_name(&self) -> Option<&str> {
        match self {
            ConfigError::Key { key, .. } | ConfigError::Unused { key, .. } => Some(key),
            ConfigError::Syntax(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Prox,
    Facet1d,
    Evolve,
    Explicit1d,
    Nonexistence,
    WulffShrink,
    LipBound,
    ProxProperties,
    OrderedPairs,
    /// Every named scenario with its defaults.
    All,
}

impl Scenario {
    /// Scenarios run by `scenario = "all"`.
    pub const REGISTRY: [Scenario; 7] = [
        Scenario::Explicit1d,
        Scenario::Nonexistence,
        Scenario::ProxProperties,
        Scenario::LipBound,
        Scenario::WulffShrink,
        Scenario::OrderedPairs,
        Scenario::Prox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Prox => "prox",
            Scenario::Facet1d => "facet1d",
            Scenario::Evolve => "evolve",
            Scenario::Explicit1d => "explicit1d",
            Scenario::Nonexistence => "nonexistence",
            Scenario::WulffShrink => "wulff_shrink",
            Scenario::LipBound => "lip_bound",
            Scenario::ProxProperties => "prox_properties",
            Scenario::OrderedPairs => "ordered_pairs",
            Scenario::All => "all",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Scenario::Prox,
            Scenario::Facet1d,
            Scenario::Evolve,
            Scenario::Explicit1d,
            Scenario::Nonexistence,
            Scenario::WulffShrink,
            Scenario::LipBound,
            Scenario::ProxProperties,
            Scenario::OrderedPairs,
            Scenario::All,
        ]
        .into_iter()
        .find(|s| s.name() == name)
    }

    /// CLI command that owns the scenario.
    pub fn command(self) -> Command {
        match self {
            Scenario::Prox | Scenario::ProxProperties => Command::Prox,
            Scenario::Facet1d | Scenario::Explicit1d | Scenario::Nonexistence => Command::Facet1d,
            Scenario::Evolve | Scenario::WulffShrink | Scenario::LipBound | Scenario::OrderedPairs => Command::Evolve,
            Scenario::All => Command::Suite,
        }
    }

    /// Top-level sections the scenario reads.
    fn sections(self) -> &'static [&'static str] {
        match self {
            Scenario::Prox => &["grid", "anisotropy", "forcing", "initial", "prox"],
            Scenario::ProxProperties => &["anisotropy", "prox", "properties"],
            Scenario::Facet1d | Scenario::Explicit1d | Scenario::Nonexistence => {
                &["grid", "forcing", "time", "facet1d", "certificate"]
            }
            Scenario::Evolve | Scenario::WulffShrink | Scenario::LipBound => &[
                "grid",
                "anisotropy",
                "forcing",
                "initial",
                "regularization",
                "mobility",
                "scheme",
                "time",
                "checks",
                "output",
            ],
            Scenario::OrderedPairs => {
                &["grid", "anisotropy", "forcing", "regularization", "mobility", "scheme", "time", "pairs"]
            }
            Scenario::All => &[],
        }
    }

    fn defaults(self) -> &'static str {
        match self {
            Scenario::Prox => PROX,
            Scenario::ProxProperties => PROX_PROPERTIES,
            Scenario::Facet1d | Scenario::Explicit1d => FACET1D,
            Scenario::Nonexistence => NONEXISTENCE,
            Scenario::Evolve => EVOLVE,
            Scenario::WulffShrink => WULFF_SHRINK,
            Scenario::LipBound => LIP_BOUND,
            Scenario::OrderedPairs => ORDERED_PAIRS,
            Scenario::All => "",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Prox,
    Facet1d,
    Evolve,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Prox => "prox",
            Command::Facet1d => "facet1d",
            Command::Evolve => "evolve",
            Command::Suite => "suite",
        }
    }

    /// Scenario used when the config does not name one.
    pub fn default_scenario(self) -> Scenario {
        match self {
            Command::Prox => Scenario::Prox,
            Command::Facet1d => Scenario::Facet1d,
            Command::Evolve => Scenario::Evolve,
            Command::Suite => Scenario::All,
        }
    }
}

const PROX: &str = r#"
anisotropy = "interval"
[grid]
dim = 1
n = 256
size = 4.0
[forcing]
kind = "tent"
c = 3.0
r = 1.0
center = [0.0]
[initial]
kind = "valley"
radius = 0.5
slope = 1.0
[prox]
a_schedule = [1e-3, 1e-4, 1e-5]
tol = 1e-9
cauchy_tol = 1e-7
max_iters = 200000
solver = "dual"
facet_threshold = 1e-12
"#;

const PROX_PROPERTIES: &str = r#"
anisotropy = "interval"
[prox]
a_schedule = [1e-3, 1e-4, 1e-5]
tol = 1e-9
cauchy_tol = 1e-7
max_iters = 200000
solver = "dual"
facet_threshold = 1e-12
[properties]
size = 4.0
min_cells = 64
max_cells = 256
shift_cases = 20
comparison_cases = 50
sensitivity_cases = 20
oracle_cases = 20
"#;

const FACET1D: &str = r#"
[grid]
dim = 1
h = 1e-3
size = 4.0
[forcing]
kind = "tent"
c = 3.0
r = 1.0
center = [0.0]
[time]
T = 0.1
dt = 1e-4
emit_every = 0.01
[facet1d]
string_h = 1e-3
ell_tol = 1e-6
constancy_tol = 1e-3
speed_tol = 1e-3
trajectory_tol = 1e-3
[certificate]
cells = 2000
test_factor = 1.25
margin = 1e-3
"#;

const NONEXISTENCE: &str = r#"
[grid]
dim = 1
h = 1e-3
size = 4.0
[forcing]
kind = "tent"
c = 0.9
r = 1.0
center = [0.0]
[time]
T = 0.1
dt = 1e-4
emit_every = 0.01
[facet1d]
string_h = 1e-3
ell_tol = 1e-6
constancy_tol = 1e-3
speed_tol = 1e-3
trajectory_tol = 1e-3
[certificate]
cells = 2000
test_factor = 1.25
margin = 1e-3
"#;

const EVOLVE: &str = r#"
anisotropy = "square"
[grid]
dim = 2
n = 128
size = 4.0
[forcing]
kind = "tent"
c = 3.0
r = 1.0
center = [0.0, 0.0]
[initial]
kind = "wulff"
radius = 0.5
slope = 1.0
top = 0.3
[regularization]
mode = "A"
m = 16
[mobility]
form = "linear"
beta = 1.0
[scheme]
safety = 4.0
guard = 3
curvature = "divergence"
gradient = "upwind"
[time]
T = 0.05
emit_every = 0.0025
[checks]
lip_factor = 1.05
[output]
svg = true
"#;

const WULFF_SHRINK: &str = r#"
anisotropy = "square"
[grid]
dim = 2
n = 256
size = 3.5
[forcing]
kind = "zero"
[initial]
kind = "wulff"
radius = 0.5
slope = 1.0
top = 0.3
[regularization]
mode = "A"
m = 32
[mobility]
form = "linear"
beta = 1.0
[scheme]
safety = 1.0
guard = 3
curvature = "divergence"
gradient = "upwind"
[time]
T = 0.11375
emit_every = 0.0056875
[checks]
lip_factor = 1.05
radius_tol = 0.02
band_tol = 0.05
stop_ratio = 0.3
[output]
svg = true
"#;

const LIP_BOUND: &str = r#"
anisotropy = "square"
[grid]
dim = 2
n = 128
size = 4.0
[forcing]
kind = "tent"
c = 3.0
r = 1.0
center = [0.0, 0.0]
[initial]
kind = "wulff"
radius = 0.5
slope = 1.0
top = 0.3
[regularization]
mode = "A"
m = 16
[mobility]
form = "linear"
beta = 1.0
[scheme]
safety = 4.0
guard = 3
curvature = "divergence"
gradient = "upwind"
[time]
T = 0.05
emit_every = 0.0025
[checks]
lip_factor = 1.05
holder_min = 0.45
probes = [[0.0, 0.0], [0.5, 0.0], [0.0, -0.5], [0.35, 0.35], [-0.3, 0.2]]
[output]
svg = false
"#;

const ORDERED_PAIRS: &str = r#"
anisotropy = "square"
[grid]
dim = 2
n = 64
size = 3.0
[forcing]
kind = "tent"
c = 3.0
r = 1.0
center = [0.0, 0.0]
[regularization]
mode = "A"
m = 16
[mobility]
form = "linear"
beta = 1.0
[scheme]
safety = 4.0
guard = 3
curvature = "divergence"
gradient = "upwind"
[time]
T = 0.02
[pairs]
cases = 20
top = 0.3
tolerance = 1e-12
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: Option<usize>,
    pub size: Option<f64>,
    pub h: Option<f64>,
}

impl GridConfig {
    /// Cells per axis, side length and spacing; any two of `n`, `size`, `h`
    /// determine the third, and all three must agree when given.
    pub fn resolve(&self) -> Result<(usize, f64, f64)> {
        if self.dim != 1 && self.dim != 2 {
            return Err(ConfigError::key("grid.dim", format!("must be 1 or 2, got {}", self.dim)));
        }
        let positive = |key: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ConfigError::key(key, format!("must be positive, got {x}"))),
            _ => Ok(v),
        };
        let size = positive("grid.size", self.size)?;
        let h = positive("grid.h", self.h)?;
        let (n, size, h) = match (self.n, size, h) {
            (Some(0), _, _) => return Err(ConfigError::key("grid.n", "must be at least 1")),
            (Some(n), Some(s), Some(h)) => {
                if (n as f64 * h - s).abs() > 1e-9 * s {
                    return Err(ConfigError::key("grid.h", format!("n·h = {} disagrees with size = {s}", n as f64 * h)));
                }
                (n, s, h)
            }
            (Some(n), Some(s), None) => (n, s, s / n as f64),
            (Some(n), None, Some(h)) => (n, n as f64 * h, h),
            (None, Some(s), Some(h)) => {
                let n = (s / h).round();
                if (n * h - s).abs() > 1e-9 * s || n < 1.0 {
                    return Err(ConfigError::key("grid.h", format!("size {s} is not a whole number of cells of width {h}")));
                }
                (n as usize, s, h)
            }
            (None, _, _) => return Err(ConfigError::key("grid.n", "missing (give two of n, size, h)")),
            (Some(_), None, None) => return Err(ConfigError::key("grid.size", "missing (give two of n, size, h)")),
        };
        Ok((n, size, h))
    }

    /// Grid centered at the origin.
    pub fn build(&self) -> Result<Grid> {
        let (n, size, h) = self.resolve()?;
        let lo = -0.5 * size;
        let g = if self.dim == 1 { Grid::new(1, [n, 1], h, [lo, 0.0]) } else { Grid::new(2, [n, n], h, [lo, lo]) };
        g.map_err(|e| ConfigError::key("grid", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Square,
    Diamond,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnisotropyConfig {
    Preset(Preset),
    Vertices(VertexList),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexList {
    pub vertices: Vec<Vec<f64>>,
}

impl AnisotropyConfig {
    pub fn build(&self) -> Result<Anisotropy> {
        let r = match self {
            AnisotropyConfig::Preset(Preset::Square) => Ok(Anisotropy::square()),
            AnisotropyConfig::Preset(Preset::Diamond) => Ok(Anisotropy::diamond()),
            AnisotropyConfig::Preset(Preset::Interval) => Anisotropy::interval(-1.0, 1.0),
            AnisotropyConfig::Vertices(v) => {
                let dim = v.vertices.first().map_or(0, Vec::len);
                Anisotropy::new(dim, &v.vertices)
            }
        };
        r.map_err(|e| ConfigError::key("anisotropy", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    Zero,
    Tent,
    Plateau,
    SumOfTents,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TentConfig {
    pub c: f64,
    pub r: f64,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeProfileConfig {
    pub breaks: Vec<f64>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub kind: ForcingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tents: Option<Vec<TentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeProfileConfig>,
}

fn center(key: &str, c: &[f64], dim: usize) -> Result<[f64; 2]> {
    if c.len() != dim {
        return Err(ConfigError::key(key, format!("needs {dim} coordinate(s), got {}", c.len())));
    }
    Ok([c[0], if dim == 2 { c[1] } else { 0.0 }])
}

impl ForcingConfig {
    pub fn build(&self, dim: usize) -> Result<Forcing> {
        let present: [(&str, bool); 7] = [
            ("c", self.c.is_some()),
            ("r", self.r.is_some()),
            ("center", self.center.is_some()),
            ("inner", self.inner.is_some()),
            ("outer", self.outer.is_some()),
            ("tents", self.tents.is_some()),
            ("x", self.x.is_some() || self.values.is_some()),
        ];
        let allowed: &[&str] = match self.kind {
            ForcingKind::Zero => &[],
            ForcingKind::Tent => &["c", "r", "center"],
            ForcingKind::Plateau => &["c", "inner", "outer", "center"],
            ForcingKind::SumOfTents => &["tents"],
            ForcingKind::Tabulated => &["x"],
        };
        for (key, given) in present {
            if given && !allowed.contains(&key) {
                let key = if key == "x" && self.x.is_none() { "values" } else { key };
                return Err(ConfigError::key(format!("forcing.{key}"), format!("not used by kind = {:?}", self.kind)));
            }
        }
        let need = |key: &str, v: Option<f64>| v.ok_or_else(|| ConfigError::key(format!("forcing.{key}"), "missing"));
        let need_center = || {
            let c = self.center.as_ref().ok_or_else(|| ConfigError::key("forcing.center", "missing"))?;
            center("forcing.center", c, dim)
        };
        let shape = match self.kind {
            ForcingKind::Zero => Shape::Zero,
            ForcingKind::Tent => Shape::Tent(Tent { c: need("c", self.c)?, r: need("r", self.r)?, center: need_center()? }),
            ForcingKind::Plateau => Shape::Plateau {
                c: need("c", self.c)?,
                inner: need("inner", self.inner)?,
                outer: need("outer", self.outer)?,
                center: need_center()?,
            },
            ForcingKind::SumOfTents => {
                let tents = self.tents.as_ref().ok_or_else(|| ConfigError::key("forcing.tents", "missing"))?;
                let mut out = Vec::with_capacity(tents.len());
                for (k, t) in tents.iter().enumerate() {
                    out.push(Tent { c: t.c, r: t.r, center: center(&format!("forcing.tents[{k}].center"), &t.center, dim)? });
                }
                Shape::SumOfTents(out)
            }
            ForcingKind::Tabulated => Shape::Tabulated {
                x: self.x.clone().ok_or_else(|| ConfigError::key("forcing.x", "missing"))?,
                values: self.values.clone().ok_or_else(|| ConfigError::key("forcing.values", "missing"))?,
            },
        };
        let mut f = Forcing::new(dim, shape).map_err(|e| ConfigError::key("forcing", e.to_string()))?;
        if let Some(c) = self.offset {
            f = f.with_offset(c);
        }
        if let Some(t) = &self.time {
            f = f
                .with_time_profile(TimeProfile::PiecewiseConstant { breaks: t.breaks.clone(), scales: t.scales.clone() })
                .map_err(|e| ConfigError::key("forcing.time", e.to_string()))?;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `slope·max(σ°(x − center) − radius, 0)`: a facet at the bottom.
    Valley,
    /// Negative of the valley.
    Hill,
    /// `min(slope·(σ°(x − center) − radius), top)`.
    Wulff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub radius: f64,
    pub slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

impl InitialConfig {
    /// Initial datum on `grid`, periodic for the prox and constant-exterior
    /// for the evolver.
    pub fn build(&self, grid: Grid, aniso: &Anisotropy, periodic: bool) -> Result<ScalarField> {
        if !(self.radius >= 0.0 && self.slope > 0.0) {
            return Err(ConfigError::key("initial.slope", "slope must be positive and radius nonnegative"));
        }
        if aniso.dim() != grid.dim {
            return Err(ConfigError::key("anisotropy", format!("is {}D but the grid is {}D", aniso.dim(), grid.dim)));
        }
        let c = match &self.center {
            Some(c) => center("initial.center", c, grid.dim)?,
            None => [0.0, 0.0],
        };
        let gauge = |x: [f64; 2]| {
            let d = [x[0] - c[0], x[1] - c[1]];
            aniso.eval_polar(&d[..grid.dim]).expect("validated anisotropy has a finite gauge")
        };
        if aniso.inradius() <= 0.0 {
            return Err(ConfigError::key("anisotropy", "the Wulff shape must contain the origin"));
        }
        let (slope, radius) = (self.slope, self.radius);
        let field = match (self.kind, periodic) {
            (InitialKind::Valley | InitialKind::Hill, false) | (InitialKind::Wulff, true) => {
                return Err(ConfigError::key("initial.kind", "not available for this scenario"));
            }
            (InitialKind::Valley, true) => ScalarField::from_fn(grid, Boundary::Periodic, |x| slope * (gauge(x) - radius).max(0.0)),
            (InitialKind::Hill, true) => ScalarField::from_fn(grid, Boundary::Periodic, |x| -slope * (gauge(x) - radius).max(0.0)),
            (InitialKind::Wulff, false) => {
                let top = self.top.ok_or_else(|| ConfigError::key("initial.top", "missing"))?;
                ScalarField::from_fn(grid, Boundary::Exterior(top), |x| (slope * (gauge(x) - radius)).min(top))
            }
        };
        field.map_err(|e| ConfigError::key("initial", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxConfig {
    pub a_schedule: Vec<f64>,
    /// Resolvent residual tolerance.
    pub tol: f64,
    /// Tolerance of the Richardson Cauchy check.
    pub cauchy_tol: f64,
    pub max_iters: usize,
    pub solver: Solver,
    pub facet_threshold: f64,
}

impl ProxConfig {
    pub fn build(&self) -> Result<MinimalDivergenceOptions> {
        let s = &self.a_schedule;
        if s.len() < 3 || s.iter().any(|a| !(*a > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::key("prox.a_schedule", "needs at least three strictly decreasing positive steps"));
        }
        for (key, v) in [("prox.tol", self.tol), ("prox.cauchy_tol", self.cauchy_tol)] {
            if !(v > 0.0) {
                return Err(ConfigError::key(key, "must be positive"));
            }
        }
        if !(self.facet_threshold >= 0.0) {
            return Err(ConfigError::key("prox.facet_threshold", "must be nonnegative"));
        }
        Ok(MinimalDivergenceOptions {
            a_schedule: s.clone(),
            tol: self.cauchy_tol,
            facet_threshold: self.facet_threshold,
            prox: ProxOptions { tol: self.tol, max_iters: self.max_iters, solver: self.solver, ..ProxOptions::default() },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesConfig {
    /// Torus length.
    pub size: f64,
    pub min_cells: usize,
    pub max_cells: usize,
    pub shift_cases: usize,
    pub comparison_cases: usize,
    pub sensitivity_cases: usize,
    pub oracle_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit_every: Option<f64>,
    /// Fixed step; the level-set evolver otherwise uses its stable step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Facet1dConfig {
    /// Cell width of the string on `[−ℓ, ℓ]`.
    pub string_h: f64,
    pub ell_tol: f64,
    pub constancy_tol: f64,
    pub speed_tol: f64,
    pub trajectory_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub cells: usize,
    pub test_factor: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeConfig {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    pub mode: ModeConfig,
    pub m: u32,
}

impl RegularizationConfig {
    pub fn build(&self, aniso: &Anisotropy) -> Result<RegularizedAnisotropy> {
        let mode = match self.mode {
            ModeConfig::A => RegularizationMode::A,
            ModeConfig::B => RegularizationMode::B,
        };
        if self.m == 0 {
            return Err(ConfigError::key("regularization.m", "must be at least 1"));
        }
        let reg = aniso.regularize(mode, self.m).map_err(|e| ConfigError::key("regularization.mode", e.to_string()))?;
        if mode == RegularizationMode::B {
            return Err(ConfigError::key("regularization.mode", "the evolver runs on mode A"));
        }
        Ok(reg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityFormConfig {
    Linear,
    Clamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    pub form: MobilityFormConfig,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl MobilityConfig {
    pub fn build(&self) -> Result<Mobility> {
        let m = match (self.form, self.cap) {
            (MobilityFormConfig::Linear, None) => Mobility::linear(self.beta),
            (MobilityFormConfig::Linear, Some(_)) => return Err(ConfigError::key("mobility.cap", "only for form = clamped")),
            (MobilityFormConfig::Clamped, Some(cap)) => Mobility::clamped(self.beta, cap),
            (MobilityFormConfig::Clamped, None) => return Err(ConfigError::key("mobility.cap", "missing")),
        };
        m.map_err(|e| ConfigError::key("mobility", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub safety: f64,
    pub guard: usize,
    pub curvature: CurvatureForm,
    pub gradient: GradientNorm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grad: Option<f64>,
}

impl SchemeConfig {
    pub fn build(&self, dt: Option<f64>) -> Result<SchemeOptions> {
        if !(self.safety > 0.0 && self.safety.is_finite()) {
            return Err(ConfigError::key("scheme.safety", "must be positive"));
        }
        if let Some(d) = self.delta_grad {
            if !(d >= 0.0) {
                return Err(ConfigError::key("scheme.delta_grad", "must be nonnegative"));
            }
        }
        if let Some(dt) = dt {
            if !(dt > 0.0) {
                return Err(ConfigError::key("time.dt", "must be positive"));
            }
        }
        Ok(SchemeOptions {
            safety: self.safety,
            delta_grad: self.delta_grad,
            guard: self.guard,
            dt,
            curvature: self.curvature,
            gradient: self.gradient,
            ..SchemeOptions::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub lip_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_tol: Option<f64>,
    /// Radius checks stop once `R < stop_ratio·R₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsConfig {
    pub cases: usize,
    /// Plateau height of the random initial data.
    pub top: f64,
    pub tolerance: f64,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anisotropy: Option<AnisotropyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prox: Option<ProxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<PropertiesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet1d: Option<Facet1dConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<RegularizationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility: Option<MobilityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairsConfig>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl RunConfig {
    /// Defaults of a registered scenario.
    pub fn defaults(scenario: Scenario, seed: u64) -> RunConfig {
        let text = format!("scenario = \"{}\"\nseed = {seed}\n", scenario.name());
        parse_config(&text).expect("built-in defaults parse")
    }

    /// The section, or an error naming it.
    pub fn need<'a, T>(&self, section: &'a Option<T>, key: &str) -> Result<&'a T> {
        section.as_ref().ok_or_else(|| ConfigError::key(key, format!("required by scenario {}", self.scenario)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses `text` for the `command`'s default scenario when it names none.
pub fn parse_config_for(text: &str, command: Command) -> Result<RunConfig> {
    let mut user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let scenario = match user.get("scenario") {
        None => command.default_scenario(),
        Some(toml::Value::String(s)) => Scenario::from_name(s)
            .ok_or_else(|| ConfigError::key("scenario", format!("unknown scenario `{s}`")))?,
        Some(_) => return Err(ConfigError::key("scenario", "must be a string")),
    };
    if command != Command::Suite && scenario.command() != command {
        return Err(ConfigError::key(
            "scenario",
            format!("`{scenario}` runs under `facetflow {}`, not `{}`", scenario.command().name(), command.name()),
        ));
    }
    user.insert("scenario".into(), toml::Value::String(scenario.name().into()));
    user.entry("seed").or_insert(toml::Value::Integer(DEFAULT_SEED as i64));
    for key in user.keys() {
        // unknown keys get the deserializer's message instead
        if is_known_section(key) && !scenario.sections().contains(&key.as_str()) {
            return Err(ConfigError::Unused { scenario, key: key.clone() });
        }
    }
    let defaults: toml::Table = scenario.defaults().parse().expect("built-in defaults are valid TOML");
    let merged = merge(defaults, user);
    let de = toml::Value::Table(merged);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // the path already ends in an unknown field, except at the top level
        let key = match unknown_field(&inner) {
            Some(f) if path == "." => f,
            _ => path,
        };
        ConfigError::Key { key, message: inner }
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

/// Parses a config that names its scenario (or defaults to the suite).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_for(text, Command::Suite)
}

fn is_known_section(key: &str) -> bool {
    [
        "grid",
        "anisotropy",
        "forcing",
        "initial",
        "prox",
        "properties",
        "time",
        "facet1d",
        "certificate",
        "regularization",
        "mobility",
        "scheme",
        "checks",
        "output",
        "pairs",
    ]
    .contains(&key)
}

/// Extracts the field name from serde's "unknown field `x`" message.
fn unknown_field(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

/// Lays `user` over `defaults`. Tables merge key by key, except that a user
/// table whose `kind` differs from the default's replaces it, and grid sizing
/// keys from the defaults only fill in up to two of `n`, `size`, `h`.
fn merge(mut defaults: toml::Table, user: toml::Table) -> toml::Table {
    for (key, value) in user {
        let replace = match (defaults.get(&key), &value) {
            (Some(toml::Value::Table(d)), toml::Value::Table(u)) => u.get("kind").is_some_and(|k| Some(k) != d.get("kind")),
            _ => true,
        };
        if replace {
            defaults.insert(key, value);
            continue;
        }
        let (Some(toml::Value::Table(mut d)), toml::Value::Table(u)) = (defaults.remove(&key), value) else {
            unreachable!("both sides are tables")
        };
        if key == "grid" {
            trim_grid_sizing(&mut d, &u);
        }
        defaults.insert(key, toml::Value::Table(merge(d, u)));
    }
    defaults
}

fn trim_grid_sizing(d: &mut toml::Table, u: &toml::Table) {
    const KEYS: [&str; 3] = ["n", "size", "h"];
    let given: Vec<&str> = KEYS.into_iter().filter(|k| u.contains_key(*k)).collect();
    let keep: &[&str] = match given.as_slice() {
        [] => return,
        ["n"] => &["size", "h"],
        ["size"] => &["n", "h"],
        ["h"] => &["n", "size"],
        _ => &[],
    };
    let kept = keep.iter().find(|k| d.contains_key(**k)).copied();
    for k in KEYS {
        if Some(k) != kept {
            d.remove(k);
        }
    }
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if let Some(g) = &cfg.grid {
        g.resolve()?;
    }
    if let Some(p) = &cfg.prox {
        p.build()?;
    }
    if let Some(t) = &cfg.time {
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            return Err(ConfigError::key("time.T", "must be nonnegative"));
        }
        if let Some(e) = t.emit_every {
            if !(e > 0.0) {
                return Err(ConfigError::key("time.emit_every", "must be positive"));
            }
        }
        if let Some(dt) = t.dt {
            if !(dt > 0.0) {
                return Err(ConfigError::key("time.dt", "must be positive"));
            }
        }
    }
    if let Some(p) = &cfg.properties {
        if !(p.min_cells >= 8 && p.min_cells <= p.max_cells) {
            return Err(ConfigError::key("properties.min_cells", "needs 8 ≤ min_cells ≤ max_cells"));
        }
        if !(p.size > 0.0) {
            return Err(ConfigError::key("properties.size", "must be positive"));
        }
    }
    if let Some(a) = &cfg.anisotropy {
        a.build()?;
    }
    if let (Some(f), Some(g)) = (&cfg.forcing, &cfg.grid) {
        f.build(g.dim)?;
    }
    if let Some(m) = &cfg.mobility {
        m.build()?;
    }
    if let Some(s) = &cfg.scheme {
        s.build(None)?;
    }
    if let Some(c) = &cfg.certificate {
        if c.cells < 2 || !(c.test_factor > 1.0) {
            return Err(ConfigError::key("certificate.test_factor", "needs cells ≥ 2 and test_factor > 1"));
        }
    }
    Ok(())
}
