//! Nonparametric mean curvature flow with prescribed contact angle.
//!
//! The unknown is the height `u(x, t)` of the Killing graph. It evolves by
//! `u_t = W div(∇u/W) − ⟨∇γ, ∇u⟩/(2γ) − W𝓗`, i.e. `u_t = W(nH − 𝓗)`, with
//! `⟨N, ν⟩ = φ` on the boundary enforced through a ghost layer.

pub mod closure;
pub mod energy;
pub mod operator;
pub mod stepper;

pub use closure::BoundaryData;
pub use energy::{energy, EnergyParts};
pub use operator::{flow_rhs, FlowSetup};
pub use stepper::step;

use crate::chart::{Field, NodeField};
use crate::error::{Error, Result};
use crate::geometry::tilt;

/// Abort threshold on `max W`.
pub const DIVERGENCE_W: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub scheme: Scheme,
    pub dt: f64,
    /// Explicit only: cap each step at the stability limit.
    pub auto_cfl: bool,
    pub t_end: f64,
    pub steady_tol: f64,
    /// Record a snapshot every this many steps (0: first and last only).
    pub snapshot_every: usize,
    /// Speed of the comoving frame: the state evolves by `u_t − frame_speed`.
    pub frame_speed: f64,
    /// Steadiness measured on `max|u_t − mean u_t|` instead of `max|u_t|`
    /// (used when seeking translating solutions).
    pub steady_on_spread: bool,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::SemiImplicit,
            dt: 1e-3,
            auto_cfl: false,
            t_end: 1.0,
            steady_tol: 1e-8,
            snapshot_every: 0,
            frame_speed: 0.0,
            steady_on_spread: false,
            max_steps: usize::MAX,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            problems.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.steady_tol > 0.0) {
            problems.push(format!("steady_tol must be positive, got {}", self.steady_tol));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            problems.push(format!("t_end must be finite and nonnegative, got {}", self.t_end));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedTEnd,
    Steady,
    Diverged,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ReachedTEnd => "reached_t_end",
            Self::Steady => "steady",
            Self::Diverged => "diverged",
        }
    }
}

/// Diagnostics recorded after every step (and at `t = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub t: f64,
    pub max_ut: f64,
    pub max_w: f64,
    pub min_w: f64,
    /// Leaf-measure Lyapunov functional `∫W + ∫𝓗u − ∫_∂uφ`.
    pub energy: f64,
    /// Ambient-area functional (weighted by `1/√γ`).
    pub energy_weighted: f64,
    /// `∫ u_t²/W`.
    pub dissipation: f64,
    /// Balance residual of the leaf-measure functional over the last step
    /// (zero for the initial record).
    pub dissipation_residual: f64,
    pub dissipation_residual_weighted: f64,
    /// Balance residual in the quoted grouping, for comparison.
    pub dissipation_residual_quoted: f64,
    /// `max |⟨N, ν⟩ − φ|` over non-corner boundary nodes.
    pub contact_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub snapshots: Vec<(f64, NodeField)>,
    pub series: Vec<FlowRecord>,
    pub stop_reason: StopReason,
    /// Mismatch of `u₀` with the contact condition before closure.
    pub initial_compatibility_defect: f64,
    pub incompatible_initial_data: bool,
    pub final_state: Field,
    pub final_ut: NodeField,
}

impl FlowResult {
    pub fn initial_max_ut(&self) -> f64 {
        self.series[0].max_ut
    }

    pub fn max_ut_over_run(&self) -> f64 {
        self.series.iter().map(|r| r.max_ut).fold(0.0, f64::max)
    }

    pub fn max_w_over_run(&self) -> f64 {
        self.series.iter().map(|r| r.max_w).fold(0.0, f64::max)
    }

    pub fn final_record(&self) -> &FlowRecord {
        self.series.last().expect("series is never empty")
    }
}

struct Observed {
    ut: NodeField,
    energy: EnergyParts,
    terms: energy::DissipationTerms,
    max_w: f64,
    min_w: f64,
}

fn observe(setup: &FlowSetup, field: &Field, frame_speed: f64) -> Result<Observed> {
    let mut ut = flow_rhs(setup, field)?;
    for v in &mut ut.values {
        *v -= frame_speed;
    }
    let (mut max_w, mut min_w) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..setup.chart.len() {
        let w = tilt(&setup.amb[k], &setup.jet(field, k));
        max_w = max_w.max(w);
        min_w = min_w.min(w);
    }
    Ok(Observed {
        energy: energy(setup, field),
        terms: energy::dissipation_terms(setup, field, &ut),
        ut,
        max_w,
        min_w,
    })
}

fn steadiness(ut: &NodeField, spread: bool) -> f64 {
    if spread {
        let m = ut.mean();
        ut.values.iter().fold(0.0, |a, v| a.max((v - m).abs()))
    } else {
        ut.max_abs()
    }
}

/// Runs the initial-boundary value problem from `u0`.
pub fn run_flow(setup: &FlowSetup, u0: &NodeField, config: &FlowConfig) -> Result<FlowResult> {
    config.validate()?;
    if u0.values.len() != setup.chart.len() {
        return Err(Error::GridMismatch("initial data does not match the chart".into()));
    }
    if !u0.is_finite() {
        return Err(Error::Numeric("initial data is not finite".into()));
    }
    let compat = closure::compatibility_defect(&setup.chart, &setup.amb, &setup.phi, u0);
    let incompatible = compat > 10.0 * setup.chart.h_max();
    if incompatible {
        log::warn!("initial data violates the contact condition (defect {compat:.3e})");
    }
    let mut field = setup.closed_field(u0);
    let mut obs = observe(setup, &field, config.frame_speed)?;
    let mut t = 0.0;
    let record = |t: f64, o: &Observed, res: energy::DissipationResiduals, f: &Field| FlowRecord {
        t,
        max_ut: o.ut.max_abs(),
        max_w: o.max_w,
        min_w: o.min_w,
        energy: o.energy.lyapunov(),
        energy_weighted: o.energy.weighted,
        dissipation: o.terms.dissipation,
        dissipation_residual: res.leaf,
        dissipation_residual_weighted: res.weighted,
        dissipation_residual_quoted: res.quoted,
        contact_defect: setup.contact_defect(f),
    };
    let zero = energy::DissipationResiduals {
        leaf: 0.0,
        weighted: 0.0,
        quoted: 0.0,
    };
    let mut series = vec![record(0.0, &obs, zero, &field)];
    let mut snapshots = vec![(0.0, field.nodes())];
    let mut stop = StopReason::ReachedTEnd;
    let mut steps = 0usize;
    if steadiness(&obs.ut, config.steady_on_spread) < config.steady_tol {
        stop = StopReason::Steady;
    }
    let t_tol = 1e-12 * config.t_end.max(1.0);
    while stop != StopReason::Steady && t < config.t_end - t_tol && steps < config.max_steps {
        let mut dt = config.dt.min(config.t_end - t);
        if config.auto_cfl && config.scheme == Scheme::Explicit {
            dt = dt.min(operator::explicit_dt_limit(setup, &field));
        }
        let next = match step(setup, &field, config.scheme, dt, config.frame_speed) {
            Ok(f) => f,
            Err(Error::Numeric(msg)) => {
                log::warn!("flow diverged at t = {t}: {msg}");
                stop = StopReason::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        let next_obs = match observe(setup, &next, config.frame_speed) {
            Ok(o) if next.is_finite() && o.max_w.is_finite() && o.max_w <= DIVERGENCE_W => o,
            _ => {
                stop = StopReason::Diverged;
                break;
            }
        };
        let res = energy::dissipation_residual((&obs.energy, &obs.terms), (&next_obs.energy, &next_obs.terms), dt);
        t += dt;
        steps += 1;
        field = next;
        obs = next_obs;
        series.push(record(t, &obs, res, &field));
        if config.snapshot_every > 0 && steps.is_multiple_of(config.snapshot_every) {
            snapshots.push((t, field.nodes()));
        }
        if steadiness(&obs.ut, config.steady_on_spread) < config.steady_tol {
            stop = StopReason::Steady;
        }
    }
    if snapshots.last().map(|s| s.0) != Some(t) {
        snapshots.push((t, field.nodes()));
    }
    Ok(FlowResult {
        snapshots,
        series,
        stop_reason: stop,
        initial_compatibility_defect: compat,
        incompatible_initial_data: incompatible,
        final_state: field,
        final_ut: obs.ut,
    })
}
