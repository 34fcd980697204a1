//! Subcommand drivers and the run report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use killing_flow::chart::Chart;
use killing_flow::flow::{energy, run_flow, FlowConfig, StopReason};
use killing_flow::geometry::{
    mean_curvature_divergence, mean_curvature_trace, second_fundamental_form, theta_gradient_check, GraphState, Jet,
    KappaTerm, SecondFormExpr, ShapePoint,
};
use killing_flow::stationary::{
    flux_balance_residual, soliton_speed, solve_soliton_from, speed_bound_check, SolitonProblem,
};
use killing_flow::tensor::Vec2;
use killing_flow::Error;
use serde::Serialize;

use crate::config::{Scenario, ScenarioConfig};
use crate::output::{emit_series, emit_snapshot, emit_table, fmt_g17};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Flow,
    Soliton,
    Speed,
    Verify,
}

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    ConfigError,
    NonConvergence,
    Divergence,
    CheckFailed,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ConfigError => 1,
            Outcome::NonConvergence => 2,
            Outcome::Divergence => 3,
            Outcome::CheckFailed => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub outcome: Outcome,
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<String>,
    pub manifest: Vec<PathBuf>,
    pub config: ScenarioConfig,
}

/// One row of the `verify` table; `threshold = None` is informational.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: Option<f64>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.threshold.is_none_or(|t| self.value <= t)
    }
}

struct Writer {
    dir: PathBuf,
    manifest: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.manifest.push(p.clone());
        p
    }
}

pub fn run(scenario: &Scenario, command: Command) -> Result<RunReport> {
    let mut w = Writer::new(&scenario.config.output.dir)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("phi0".to_string(), scenario.phi0);
    let (outcome, stop_reason) = match command {
        Command::Flow => flow(scenario, &mut w, &mut diagnostics)?,
        Command::Soliton => (soliton(scenario, &mut w, &mut diagnostics)?, None),
        Command::Speed => (speed(scenario, &mut w, &mut diagnostics)?, None),
        Command::Verify => (verify_cmd(scenario, &mut w, &mut diagnostics)?, None),
    };
    let report = RunReport {
        command,
        outcome,
        diagnostics,
        stop_reason,
        manifest: w.manifest.clone(),
        config: scenario.config.clone(),
    };
    let text = toml::to_string(&report).context("cannot serialize run report")?;
    let path = w.dir.join("report.toml");
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(report)
}

fn flow(s: &Scenario, w: &mut Writer, diag: &mut BTreeMap<String, f64>) -> Result<(Outcome, Option<String>)> {
    let config = s.flow_config();
    let result = run_flow(&s.setup, &s.u0, &config)?;
    emit_series(&result.series, &w.path("series.csv"))?;
    for (k, (_, u)) in result.snapshots.iter().enumerate() {
        emit_snapshot(&s.setup.chart, u, &w.path(&format!("snapshot_{k:05}.csv")))?;
    }
    let times: Vec<Vec<String>> = result
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, (t, _))| vec![k.to_string(), fmt_g17(*t), format!("snapshot_{k:05}.csv")])
        .collect();
    emit_table(&["index", "t", "file"], &times, &w.path("snapshots.csv"))?;
    let first = &result.series[0];
    let last = result.final_record();
    diag.insert("final_t".into(), last.t);
    diag.insert("final_max_ut".into(), last.max_ut);
    diag.insert("initial_max_ut".into(), first.max_ut);
    diag.insert("max_ut_over_run".into(), result.max_ut_over_run());
    diag.insert("max_w_over_run".into(), result.max_w_over_run());
    diag.insert("energy_initial".into(), first.energy);
    diag.insert("energy_final".into(), last.energy);
    diag.insert("energy_weighted_initial".into(), first.energy_weighted);
    diag.insert("energy_weighted_final".into(), last.energy_weighted);
    diag.insert(
        "max_dissipation_residual".into(),
        result.series.iter().map(|r| r.dissipation_residual).fold(0.0, f64::max),
    );
    diag.insert("final_contact_defect".into(), last.contact_defect);
    diag.insert(
        "initial_compatibility_defect".into(),
        result.initial_compatibility_defect,
    );
    diag.insert("steps".into(), (result.series.len() - 1) as f64);
    let outcome = if result.stop_reason == StopReason::Diverged {
        Outcome::Divergence
    } else {
        Outcome::Success
    };
    log::info!("flow stopped: {} at t = {}", result.stop_reason.as_str(), last.t);
    Ok((outcome, Some(result.stop_reason.as_str().to_string())))
}

fn soliton(s: &Scenario, w: &mut Writer, diag: &mut BTreeMap<String, f64>) -> Result<Outcome> {
    let problem = SolitonProblem::new(s.setup.clone(), s.speed())?;
    let sol = match solve_soliton_from(&problem, &s.solve_options(), &s.u0) {
        Ok(sol) => sol,
        Err(Error::Solver {
            message,
            residual_history,
        }) => {
            log::error!("soliton solver failed: {message}");
            let rows: Vec<Vec<String>> = residual_history
                .iter()
                .enumerate()
                .map(|(k, r)| vec![k.to_string(), fmt_g17(*r)])
                .collect();
            emit_table(&["iteration", "residual"], &rows, &w.path("residual_history.csv"))?;
            diag.insert("iterations".into(), residual_history.len() as f64);
            return Ok(Outcome::NonConvergence);
        }
        Err(e) => return Err(e.into()),
    };
    emit_snapshot(&s.setup.chart, &sol.v, &w.path("soliton.csv"))?;
    let row = vec![
        fmt_g17(sol.prescribed_speed),
        fmt_g17(sol.speed()),
        fmt_g17(sol.speed_defect),
        fmt_g17(sol.residual_pde),
        fmt_g17(sol.residual_bc),
        fmt_g17(sol.flux_residual),
        sol.iterations.to_string(),
    ];
    emit_table(
        &[
            "prescribed_speed",
            "speed",
            "speed_defect",
            "residual_pde",
            "residual_bc",
            "flux_residual",
            "iterations",
        ],
        &[row],
        &w.path("speed.csv"),
    )?;
    diag.insert("speed".into(), sol.speed());
    diag.insert("speed_defect".into(), sol.speed_defect);
    diag.insert("residual_pde".into(), sol.residual_pde);
    diag.insert("residual_bc".into(), sol.residual_bc);
    diag.insert("flux_residual".into(), sol.flux_residual);
    diag.insert("iterations".into(), sol.iterations as f64);
    Ok(Outcome::Success)
}

fn speed(s: &Scenario, w: &mut Writer, diag: &mut BTreeMap<String, f64>) -> Result<Outcome> {
    let field = s.setup.closed_field(&s.u0);
    let c = soliton_speed(&s.setup, &field)?;
    let w_max = max_w(s, &field);
    let bound = speed_bound_check(&s.setup, c, w_max);
    let flux = flux_balance_residual(&s.setup, &field, c);
    emit_table(
        &["speed", "flux_residual", "speed_bound", "bound_holds"],
        &[vec![
            fmt_g17(c),
            fmt_g17(flux),
            fmt_g17(bound.bound),
            bound.holds.to_string(),
        ]],
        &w.path("speed.csv"),
    )?;
    diag.insert("speed".into(), c);
    diag.insert("speed_bound".into(), bound.bound);
    diag.insert("flux_residual".into(), flux);
    Ok(Outcome::Success)
}

fn max_w(s: &Scenario, field: &killing_flow::chart::Field) -> f64 {
    (0..s.setup.chart.len())
        .map(|k| killing_flow::geometry::tilt(&s.setup.amb[k], &s.setup.jet(field, k)))
        .fold(0.0, f64::max)
}

fn verify_cmd(s: &Scenario, w: &mut Writer, diag: &mut BTreeMap<String, f64>) -> Result<Outcome> {
    let checks = verify(s)?;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                fmt_g17(c.value),
                c.threshold.map_or("-".into(), fmt_g17),
                if c.passed() { "pass" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    emit_table(&["check", "value", "threshold", "status"], &rows, &w.path("verify.csv"))?;
    println!("{:<28} {:>24} {:>24}  status", "check", "value", "threshold");
    for r in &rows {
        println!("{:<28} {:>24} {:>24}  {}", r[0], r[1], r[2], r[3]);
    }
    for c in &checks {
        diag.insert(c.name.to_string(), c.value);
    }
    Ok(if checks.iter().all(Check::passed) {
        Outcome::Success
    } else {
        Outcome::CheckFailed
    })
}

/// Number of flow steps taken by the dynamic checks of `verify`.
pub const VERIFY_STEPS: usize = 20;

/// Smooth distance-like extension vanishing on the box boundary with
/// `|∇d| ≤ 1/2`.
fn box_distance(chart: &Chart) -> impl Fn(&Vec2) -> Jet {
    let (lo, hi, dim) = (chart.lo(), chart.hi(), chart.dim());
    move |x: &Vec2| {
        let mut jet = Jet {
            value: 0.0,
            grad: [0.0; 2],
            hess: [[0.0; 2]; 2],
        };
        let scale = 2.0 * (dim as f64).sqrt();
        for a in 0..dim {
            let l = hi[a] - lo[a];
            jet.value += (x[a] - lo[a]) * (hi[a] - x[a]) / (l * scale);
            jet.grad[a] = (l - 2.0 * (x[a] - lo[a])) / (l * scale);
            jet.hess[a][a] = -2.0 / (l * scale);
        }
        jet
    }
}

/// Evaluates every module invariant on the scenario's initial data.
pub fn verify(s: &Scenario) -> Result<Vec<Check>> {
    let setup = &s.setup;
    let chart = &setup.chart;
    let n = chart.dim();
    let h = chart.h_max();
    let field = setup.closed_field(&s.u0);
    let mut checks = Vec::new();

    let mut chris: f64 = 0.0;
    for k in 0..chart.len() {
        let (i, j) = chart.ij(k);
        if !chart.on_boundary(i, j) {
            chris = chris.max(setup.geometry.christoffel_consistency(&chart.node_coord(k), 1e-4)?);
        }
    }
    checks.push(Check {
        name: "christoffel_fd",
        value: chris,
        threshold: Some(1e-6),
    });

    let (mut forms, mut second, mut unit, mut scale) = (0.0f64, 0.0f64, 0.0f64, 1.0f64);
    for k in 0..chart.len() {
        let amb = &setup.amb[k];
        let jet = setup.jet(&field, k);
        let tr = mean_curvature_trace(amb, &jet);
        scale = scale.max(tr.abs());
        forms = forms.max((tr - mean_curvature_divergence(amb, &jet)).abs());
        let a1 = second_fundamental_form(amb, &jet, SecondFormExpr::WarpingGradient);
        let a2 = second_fundamental_form(amb, &jet, SecondFormExpr::KillingAcceleration);
        for r in 0..n {
            for c in 0..n {
                second = second.max((a1[r][c] - a2[r][c]).abs());
            }
        }
        let sp = ShapePoint::new(amb, &jet)?;
        unit = unit.max((sp.normal_norm2(amb) - 1.0).abs());
    }
    checks.push(Check {
        name: "mean_curvature_forms",
        value: forms / scale,
        threshold: Some(1e-10),
    });
    checks.push(Check {
        name: "second_form_exprs",
        value: second / scale,
        threshold: Some(1e-10),
    });
    checks.push(Check {
        name: "normal_unit_length",
        value: unit,
        threshold: Some(1e-12),
    });
    checks.push(Check {
        name: "phi0",
        value: s.phi0,
        threshold: Some(1.0 - f64::EPSILON),
    });
    checks.push(Check {
        name: "initial_contact_defect",
        value: setup.contact_defect(&field),
        threshold: Some(10.0 * h),
    });

    // Ghost values from the expression itself when it extends past the box.
    let state = GraphState::from_function(chart, |x| s.u0_expr.eval(&x), 0.0);
    let state = if state.u.is_finite() {
        state
    } else {
        GraphState::new(chart.clone(), field.clone(), 0.0)
    };
    let ext = box_distance(chart);
    match theta_gradient_check(&setup.geometry, &state, &ext, KappaTerm::Plus) {
        Ok(r) => checks.push(Check {
            name: "theta_gradient_identity",
            value: r.max_abs(),
            threshold: Some(20.0 * h * h),
        }),
        Err(Error::Unsupported(msg)) => log::info!("skipping θ-gradient identity: {msg}"),
        Err(e) => return Err(e.into()),
    }

    let dt = s.config.run.dt;
    let config = FlowConfig {
        t_end: dt * VERIFY_STEPS as f64,
        ..s.flow_config()
    };
    let result = run_flow(setup, &s.u0, &config)?;
    let tol = h * h + dt;
    let dissipation = result.series.iter().map(|r| r.dissipation).fold(1.0, f64::max);
    checks.push(Check {
        name: "dissipation_residual",
        value: result.series.iter().map(|r| r.dissipation_residual).fold(0.0, f64::max),
        threshold: Some(20.0 * tol * dissipation),
    });
    checks.push(Check {
        name: "max_principle_ratio",
        value: result.max_ut_over_run() / (result.initial_max_ut() * 1.01 + 10.0 * tol),
        threshold: Some(1.0),
    });
    let gamma_const = setup
        .amb
        .iter()
        .all(|a| (a.gamma - setup.amb[0].gamma).abs() <= 1e-14 * a.gamma.abs());
    let increase = result
        .series
        .windows(2)
        .map(|p| p[1].energy - p[0].energy)
        .reduce(f64::max)
        .unwrap_or(0.0);
    checks.push(Check {
        name: "energy_increase_per_step",
        value: increase,
        threshold: gamma_const.then_some(tol * dt),
    });
    let e0 = energy(setup, &field);
    checks.push(Check {
        name: "energy_initial",
        value: e0.lyapunov(),
        threshold: None,
    });

    let c_formula = soliton_speed(setup, &field)?;
    let bound = speed_bound_check(setup, c_formula, max_w(s, &field));
    checks.push(Check {
        name: "speed_formula",
        value: c_formula,
        threshold: None,
    });
    checks.push(Check {
        name: "speed_bound_ratio",
        value: c_formula.abs() / bound.bound,
        threshold: Some(1.0),
    });
    if let Some(c) = s.config.problem.speed {
        checks.push(Check {
            name: "speed_formula_defect",
            value: (c_formula - c).abs(),
            threshold: Some(10.0 * h * h),
        });
        checks.push(Check {
            name: "flux_identity",
            value: flux_balance_residual(setup, &field, c),
            threshold: Some(5.0 * h * h),
        });
    }
    Ok(checks)
}
