//! Scenario files: TOML with one table per block.
//!
//! ```toml
//! [geometry]
//! kind = "euclidean"        # euclidean | helicoidal | exp_warp | custom
//! # r_min = 0.5             # helicoidal
//! # lambda = 1.0            # exp_warp
//! # sigma11, sigma12, sigma22, gamma = "<expr>"   # custom
//!
//! [domain]
//! lo = [-1.0]               # one entry per axis
//! hi = [1.0]
//! resolution = [65]         # nodes per axis, at least 8
//!
//! [problem]
//! u0 = "-log(cos(x1))"
//! hcal = "0"
//! phi = "sin(1)"            # default contact data on every side
//! # phi_x1_lower, phi_x1_upper, phi_x2_lower, phi_x2_upper override per side
//! # speed = 1.0             # translation speed for `soliton`
//!
//! [run]                     # every key optional
//! scheme = "semi_implicit"  # semi_implicit | explicit
//! dt = 1e-3
//! t_end = 1.0
//! steady_tol = 1e-8
//! auto_cfl = true
//! method = "newton"         # newton | pseudo_time
//! tol = 1e-10
//! max_iter = 50
//! pseudo_dt = 0.05
//!
//! [output]
//! dir = "out"
//! snapshot_every = 0        # 0: first and last snapshot only
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use killing_flow::ambient::{AmbientGeometry, BuiltinGeometry, MetricField};
use killing_flow::chart::{Chart, NodeField, Side};
use killing_flow::flow::{BoundaryData, FlowConfig, FlowSetup, Scheme};
use killing_flow::stationary::{SolitonMethod, SolveOptions};
use killing_flow::tensor::{Mat2, Vec2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Euclidean,
    Helicoidal,
    ExpWarp,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub kind: GeometryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma11: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma12: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma22: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub u0: String,
    #[serde(default = "zero_expr")]
    pub hcal: String,
    #[serde(default = "zero_expr")]
    pub phi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_x1_lower: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_x1_upper: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_x2_lower: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_x2_upper: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Newton,
    PseudoTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub scheme: SchemeName,
    pub dt: f64,
    pub t_end: f64,
    pub steady_tol: f64,
    pub auto_cfl: bool,
    pub method: MethodName,
    pub tol: f64,
    pub max_iter: usize,
    pub pseudo_dt: f64,
}

impl Default for RunBlock {
    fn default() -> Self {
        let flow = FlowConfig::default();
        let solve = SolveOptions::default();
        Self {
            scheme: SchemeName::SemiImplicit,
            dt: flow.dt,
            t_end: flow.t_end,
            steady_tol: flow.steady_tol,
            auto_cfl: true,
            method: MethodName::Newton,
            tol: solve.tol,
            max_iter: solve.max_iter,
            pseudo_dt: solve.pseudo_dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub snapshot_every: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometryBlock,
    pub domain: DomainBlock,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// A validated scenario with every expression evaluated on the grid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub setup: FlowSetup,
    pub u0: NodeField,
    pub u0_expr: Expr,
    pub phi0: f64,
}

impl Scenario {
    pub fn flow_config(&self) -> FlowConfig {
        let run = &self.config.run;
        FlowConfig {
            scheme: match run.scheme {
                SchemeName::SemiImplicit => Scheme::SemiImplicit,
                SchemeName::Explicit => Scheme::Explicit,
            },
            dt: run.dt,
            auto_cfl: run.auto_cfl,
            t_end: run.t_end,
            steady_tol: run.steady_tol,
            snapshot_every: self.config.output.snapshot_every,
            ..FlowConfig::default()
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        let run = &self.config.run;
        SolveOptions {
            method: match run.method {
                MethodName::Newton => SolitonMethod::Newton,
                MethodName::PseudoTime => SolitonMethod::PseudoTime,
            },
            tol: run.tol,
            max_iter: run.max_iter,
            pseudo_dt: run.pseudo_dt,
        }
    }

    pub fn speed(&self) -> f64 {
        self.config.problem.speed.unwrap_or(0.0)
    }
}

/// Metric given by expressions `σ11, σ12, σ22, γ`.
#[derive(Debug, Clone)]
pub struct ExprMetric {
    dim: usize,
    sigma: [Expr; 3],
    gamma: Expr,
}

impl MetricField for ExprMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sigma(&self, x: &Vec2) -> Mat2 {
        if self.dim == 1 {
            return [[self.sigma[0].eval(x), 0.0], [0.0, 1.0]];
        }
        let off = self.sigma[1].eval(x);
        [[self.sigma[0].eval(x), off], [off, self.sigma[2].eval(x)]]
    }

    fn gamma(&self, x: &Vec2) -> f64 {
        self.gamma.eval(x)
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = parse_config(&text)?;
    config.resolve()?;
    Ok(config)
}

pub fn write_config(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("scenario configs always serialize")
}

struct Violations(Vec<String>);

impl Violations {
    fn push(&mut self, field: &str, msg: impl fmt::Display) {
        self.0.push(format!("{field}: {msg}"));
    }

    fn expr(&mut self, field: &str, src: &str, dim: usize) -> Option<Expr> {
        match Expr::parse(src) {
            Ok(e) if e.arity() > dim => {
                self.push(
                    field,
                    format!("uses x{} but the domain is {dim}-dimensional", e.arity()),
                );
                None
            }
            Ok(e) => Some(e),
            Err(err) => {
                self.push(field, format!("'{src}': {err}"));
                None
            }
        }
    }
}

fn positive(v: &mut Violations, field: &str, x: f64) {
    if !(x > 0.0 && x.is_finite()) {
        v.push(field, format!("must be positive and finite, got {x}"));
    }
}

impl ScenarioConfig {
    /// Validates every field and evaluates the expressions on the grid,
    /// reporting all violations at once.
    pub fn resolve(&self) -> Result<Scenario, ConfigError> {
        let mut v = Violations(Vec::new());
        let d = &self.domain;
        let dim = d.lo.len();
        if !(1..=2).contains(&dim) {
            v.push("domain.lo", format!("must have 1 or 2 entries, got {dim}"));
        }
        if d.hi.len() != dim {
            v.push("domain.hi", format!("must have {dim} entries, got {}", d.hi.len()));
        }
        if d.resolution.len() != dim {
            v.push(
                "domain.resolution",
                format!("must have {dim} entries, got {}", d.resolution.len()),
            );
        }
        for (a, &n) in d.resolution.iter().enumerate() {
            if n < MIN_RESOLUTION {
                v.push(
                    &format!("domain.resolution[{a}]"),
                    format!("at least {MIN_RESOLUTION} nodes required, got {n}"),
                );
            }
        }
        for (a, (lo, hi)) in d.lo.iter().zip(&d.hi).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                v.push(
                    &format!("domain[{a}]"),
                    format!("bounds must satisfy lo < hi, got [{lo}, {hi}]"),
                );
            }
        }
        let run = &self.run;
        positive(&mut v, "run.dt", run.dt);
        positive(&mut v, "run.steady_tol", run.steady_tol);
        positive(&mut v, "run.tol", run.tol);
        positive(&mut v, "run.pseudo_dt", run.pseudo_dt);
        if !(run.t_end >= 0.0 && run.t_end.is_finite()) {
            v.push(
                "run.t_end",
                format!("must be finite and nonnegative, got {}", run.t_end),
            );
        }
        if run.max_iter == 0 {
            v.push("run.max_iter", "must be at least 1");
        }
        if let Some(c) = self.problem.speed {
            if !c.is_finite() {
                v.push("problem.speed", "must be finite");
            }
        }

        let g = &self.geometry;
        let p = &self.problem;
        let dim_ok = (1..=2).contains(&dim);
        let edim = if dim_ok { dim } else { 2 };
        let u0 = v.expr("problem.u0", &p.u0, edim);
        let hcal = v.expr("problem.hcal", &p.hcal, edim);
        let phi_default = v.expr("problem.phi", &p.phi, edim);
        let side_keys = [
            ("problem.phi_x1_lower", &p.phi_x1_lower),
            ("problem.phi_x1_upper", &p.phi_x1_upper),
            ("problem.phi_x2_lower", &p.phi_x2_lower),
            ("problem.phi_x2_upper", &p.phi_x2_upper),
        ];
        let mut phi_sides: Vec<Option<Expr>> = Vec::new();
        for (a, (key, src)) in side_keys.iter().enumerate() {
            if a >= 2 * edim && src.is_some() {
                v.push(key, "refers to an axis the domain does not have");
            }
            phi_sides.push(src.as_ref().and_then(|s| v.expr(key, s, edim)));
        }
        let custom = if g.kind == GeometryKind::Custom {
            let mut get = |key: &str, src: &Option<String>, default: Option<&str>| match (src, default) {
                (Some(s), _) => v.expr(&format!("geometry.{key}"), s, edim),
                (None, Some(d)) => Expr::parse(d).ok(),
                (None, None) => {
                    v.push(&format!("geometry.{key}"), "required for custom geometry");
                    None
                }
            };
            let s11 = get("sigma11", &g.sigma11, None);
            let s12 = get("sigma12", &g.sigma12, Some("0"));
            let s22 = get("sigma22", &g.sigma22, Some("1"));
            let gamma = get("gamma", &g.gamma, None);
            match (s11, s12, s22, gamma) {
                (Some(a), Some(b), Some(c), Some(gm)) => Some(ExprMetric {
                    dim: edim,
                    sigma: [a, b, c],
                    gamma: gm,
                }),
                _ => None,
            }
        } else {
            for (key, set) in [
                ("sigma11", g.sigma11.is_some()),
                ("sigma12", g.sigma12.is_some()),
                ("sigma22", g.sigma22.is_some()),
                ("gamma", g.gamma.is_some()),
            ] {
                if set {
                    v.push(&format!("geometry.{key}"), "only allowed with kind = \"custom\"");
                }
            }
            None
        };
        if g.r_min.is_some() && g.kind != GeometryKind::Helicoidal {
            v.push("geometry.r_min", "only allowed with kind = \"helicoidal\"");
        }
        if g.lambda.is_some() && g.kind != GeometryKind::ExpWarp {
            v.push("geometry.lambda", "only allowed with kind = \"exp_warp\"");
        }

        if !v.0.is_empty() {
            return Err(ConfigError::Invalid(v.0));
        }

        let lo = [d.lo[0], d.lo.get(1).copied().unwrap_or(0.0)];
        let hi = [d.hi[0], d.hi.get(1).copied().unwrap_or(1.0)];
        let n = [d.resolution[0], d.resolution.get(1).copied().unwrap_or(1)];
        let chart = Chart::new(dim, n, lo, hi).map_err(|e| ConfigError::Invalid(vec![format!("domain: {e}")]))?;
        let geometry = match g.kind {
            GeometryKind::Euclidean => AmbientGeometry::builtin(BuiltinGeometry::EuclideanProduct { dim }, &chart),
            GeometryKind::Helicoidal => AmbientGeometry::builtin(
                BuiltinGeometry::Helicoidal {
                    r_min: g.r_min.unwrap_or(killing_flow::ambient::DEFAULT_R_MIN),
                },
                &chart,
            ),
            GeometryKind::ExpWarp => AmbientGeometry::builtin(
                BuiltinGeometry::ExponentialWarp {
                    lambda: g.lambda.unwrap_or(1.0),
                },
                &chart,
            ),
            GeometryKind::Custom => AmbientGeometry::custom(Arc::new(custom.expect("validated above")), &chart),
        };
        let geometry = match geometry {
            Ok(gm) => gm,
            Err(e) => return Err(ConfigError::Invalid(vec![format!("geometry: {e}")])),
        };
        let (u0, hcal, phi_default) = (u0.unwrap(), hcal.unwrap(), phi_default.unwrap());

        let u0_nodes = chart.sample(|x| u0.eval(&x));
        if !u0_nodes.is_finite() {
            v.push("problem.u0", format!("'{u0}' is not finite on the grid"));
        }
        let hcal_nodes = chart.sample(|x| hcal.eval(&x));
        if !hcal_nodes.is_finite() {
            v.push("problem.hcal", format!("'{hcal}' is not finite on the grid"));
        }
        let side_expr = |s: Side| {
            phi_sides[2 * s.axis + usize::from(s.upper)]
                .as_ref()
                .unwrap_or(&phi_default)
        };
        let phi = BoundaryData::from_fn(&chart, |x, s| side_expr(s).eval(&x));
        for s in chart.sides() {
            let key = match side_expr(s) {
                e if std::ptr::eq(e, &phi_default) => "problem.phi".to_string(),
                _ => format!("problem.phi_{}", s.name()),
            };
            let vals: Vec<f64> = (0..chart.side_len(s)).map(|m| phi.value(s, m)).collect();
            if let Some(bad) = vals.iter().find(|x| !x.is_finite()) {
                v.push(&key, format!("evaluates to {bad} on side {}", s.name()));
            } else if let Some(bad) = vals.iter().find(|x| x.abs() >= 1.0) {
                v.push(
                    &key,
                    format!(
                        "|φ| = {} on side {}; the contact angle hypothesis requires |φ| ≤ φ₀ < 1",
                        bad.abs(),
                        s.name()
                    ),
                );
            }
        }
        if !v.0.is_empty() {
            return Err(ConfigError::Invalid(v.0));
        }
        let setup = FlowSetup::new(chart, geometry, phi, hcal_nodes)
            .map_err(|e| ConfigError::Invalid(vec![format!("geometry: {e}")]))?;
        let phi0 = setup.phi0;
        Ok(Scenario {
            config: self.clone(),
            setup,
            u0: u0_nodes,
            u0_expr: u0,
            phi0,
        })
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, out: Option<PathBuf>, resolution: Option<usize>, dt: Option<f64>) -> Self {
        if let Some(dir) = out {
            self.output.dir = dir;
        }
        if let Some(n) = resolution {
            for r in &mut self.domain.resolution {
                *r = n;
            }
        }
        if let Some(dt) = dt {
            self.run.dt = dt;
        }
        self
    }
}
