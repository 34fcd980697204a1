//! Steady and translating solutions `u = v + Ct`, the speed formula, the
//! flux balance, and the comparison bound for flows.
//!
//! A translating solution satisfies `W(nH − 𝓗) = C` with the contact
//! condition on the boundary. The discrete problem inherits the invariance
//! `v ↦ v + const`, so it is posed for `(v, μ)` with `F(v) − C = μ`: the
//! uniform defect `μ` absorbs the `O(h²)` mismatch between the prescribed
//! `C` and the speed the discretization actually supports, and `v` is
//! reported with zero mean.

use crate::banded::BandedMatrix;
use crate::chart::{Field, NodeField};
use crate::error::{Error, Result};
use crate::flow::operator::{flow_rhs, jacobian_rows, FlowSetup};
use crate::flow::{run_flow, FlowConfig, FlowResult, Scheme, StopReason};
use crate::geometry::tilt;

/// Halvings allowed in the Newton line search.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone)]
pub struct SolitonProblem {
    pub setup: FlowSetup,
    /// Translation speed; zero for the steady problem.
    pub speed: f64,
}

impl SolitonProblem {
    pub fn new(setup: FlowSetup, speed: f64) -> Result<Self> {
        if !speed.is_finite() {
            return Err(Error::Config("translation speed must be finite".into()));
        }
        Ok(Self { setup, speed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolitonMethod {
    PseudoTime,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: SolitonMethod,
    pub tol: f64,
    pub max_iter: usize,
    /// Pseudo-time step of the semi-implicit stepper.
    pub pseudo_dt: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolitonMethod::Newton,
            tol: 1e-10,
            max_iter: 50,
            pseudo_dt: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSolution {
    pub v: NodeField,
    /// `max |F(v) − C − μ|` in velocity units.
    pub residual_pde: f64,
    /// `max |⟨N, ν⟩ − φ|` over non-corner boundary nodes.
    pub residual_bc: f64,
    /// Flux balance residual at the prescribed speed.
    pub flux_residual: f64,
    /// Uniform defect `μ`; the discrete translation speed is `C + μ`.
    pub speed_defect: f64,
    pub prescribed_speed: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

impl SolitonSolution {
    /// Speed at which the discrete solution translates under the flow.
    pub fn speed(&self) -> f64 {
        self.prescribed_speed + self.speed_defect
    }
}

fn residual(setup: &FlowSetup, field: &Field, speed: f64, mu: f64) -> Result<NodeField> {
    let mut r = flow_rhs(setup, field)?;
    for v in &mut r.values {
        *v -= speed + mu;
    }
    Ok(r)
}

fn l2(v: &NodeField) -> f64 {
    (v.values.iter().map(|x| x * x).sum::<f64>() / v.values.len() as f64).sqrt()
}

fn centered(v: &NodeField) -> NodeField {
    let m = v.mean();
    NodeField::new(v.values.iter().map(|x| x - m).collect())
}

pub fn solve_soliton(problem: &SolitonProblem, opts: &SolveOptions) -> Result<SolitonSolution> {
    let zero = NodeField::zeros(problem.setup.chart.len());
    solve_soliton_from(problem, opts, &zero)
}

pub fn solve_soliton_from(problem: &SolitonProblem, opts: &SolveOptions, guess: &NodeField) -> Result<SolitonSolution> {
    if guess.values.len() != problem.setup.chart.len() {
        return Err(Error::GridMismatch("initial guess does not match the chart".into()));
    }
    let (v, mu, iterations, history) = match opts.method {
        SolitonMethod::Newton => newton(problem, opts, guess)?,
        SolitonMethod::PseudoTime => pseudo_time(problem, opts, guess)?,
    };
    finish(problem, centered(&v), mu, iterations, history)
}

fn finish(
    problem: &SolitonProblem,
    v: NodeField,
    mu: f64,
    iterations: usize,
    history: Vec<f64>,
) -> Result<SolitonSolution> {
    let setup = &problem.setup;
    let field = setup.closed_field(&v);
    let r = residual(setup, &field, problem.speed, mu)?;
    Ok(SolitonSolution {
        residual_pde: r.max_abs(),
        residual_bc: setup.contact_defect(&field),
        flux_residual: flux_balance_residual(setup, &field, problem.speed),
        speed_defect: mu,
        prescribed_speed: problem.speed,
        v,
        iterations,
        residual_history: history,
    })
}

type Solve = (NodeField, f64, usize, Vec<f64>);

/// Damped Newton on `(v, μ)`. The unknown `v` at the pinned node is traded
/// for `μ`; the bordered matrix is a rank-one update of a banded one and is
/// solved with Sherman–Morrison.
fn newton(problem: &SolitonProblem, opts: &SolveOptions, guess: &NodeField) -> Result<Solve> {
    let setup = &problem.setup;
    let n = setup.chart.len();
    let pin = 0usize;
    let mut v = guess.clone();
    let mut field = setup.closed_field(&v);
    let mut mu = flow_rhs(setup, &field)?.mean() - problem.speed;
    let mut r = residual(setup, &field, problem.speed, mu)?;
    let mut history = vec![r.max_abs()];
    for it in 0..opts.max_iter {
        if r.max_abs() < opts.tol {
            return Ok((v, mu, it, history));
        }
        let mut rows = jacobian_rows(setup, &field);
        for row in &mut rows {
            row.retain(|&(c, _)| c != pin);
        }
        rows[pin].push((pin, 1.0));
        let lu = BandedMatrix::from_rows(&rows).factor().map_err(|e| Error::Solver {
            message: format!("Jacobian factorization failed: {e}"),
            residual_history: history.clone(),
        })?;
        let mut y: Vec<f64> = r.values.iter().map(|x| -x).collect();
        lu.solve(&mut y);
        let mut z = vec![-1.0; n];
        z[pin] -= 1.0;
        lu.solve(&mut z);
        let denom = 1.0 + z[pin];
        if denom.abs() < 1e-14 {
            return Err(Error::Solver {
                message: "bordered Newton system is singular".into(),
                residual_history: history,
            });
        }
        let s = y[pin] / denom;
        let x: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b * s).collect();
        let dmu = x[pin];
        let base = l2(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = NodeField::new(
                (0..n)
                    .map(|k| v.values[k] + if k == pin { 0.0 } else { lambda * x[k] })
                    .collect(),
            );
            let tf = setup.closed_field(&trial);
            if let Ok(tr) = residual(setup, &tf, problem.speed, mu + lambda * dmu) {
                if tr.is_finite() && l2(&tr) < base {
                    v = trial;
                    field = tf;
                    mu += lambda * dmu;
                    r = tr;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        history.push(r.max_abs());
        if !accepted {
            if r.max_abs() < opts.tol {
                return Ok((v, mu, it + 1, history));
            }
            return Err(Error::Solver {
                message: format!("line search failed after {MAX_HALVINGS} halvings"),
                residual_history: history,
            });
        }
    }
    if r.max_abs() < opts.tol {
        return Ok((v, mu, opts.max_iter, history));
    }
    Err(Error::Solver {
        message: "Newton did not converge".into(),
        residual_history: history,
    })
}

/// Runs the flow in the frame translating with speed `C` until `u_t` is
/// uniform.
fn pseudo_time(problem: &SolitonProblem, opts: &SolveOptions, guess: &NodeField) -> Result<Solve> {
    let cfg = FlowConfig {
        scheme: Scheme::SemiImplicit,
        dt: opts.pseudo_dt,
        t_end: opts.pseudo_dt * opts.max_iter as f64,
        steady_tol: opts.tol,
        frame_speed: problem.speed,
        steady_on_spread: true,
        ..FlowConfig::default()
    };
    let res = run_flow(&problem.setup, guess, &cfg)?;
    let history: Vec<f64> = res.series.iter().map(|r| r.max_ut).collect();
    if res.stop_reason != StopReason::Steady {
        return Err(Error::Solver {
            message: format!("pseudo-time iteration stopped: {}", res.stop_reason.as_str()),
            residual_history: history,
        });
    }
    let mu = res.final_ut.mean();
    Ok((res.final_state.nodes(), mu, res.series.len() - 1, history))
}

/// `C = (∫_Γ φ√γ − ∫_Ω 𝓗√γ) / ∫_Ω √γ/W`.
pub fn soliton_speed(setup: &FlowSetup, field: &Field) -> Result<f64> {
    let w: Vec<f64> = (0..setup.chart.len())
        .map(|k| tilt(&setup.amb[k], &setup.jet(field, k)))
        .collect();
    let sg = |k: usize| setup.amb[k].gamma.sqrt();
    let denom = setup.integrate(|k| sg(k) / w[k]);
    if !(denom > 1e-14) {
        return Err(Error::Numeric(format!("degenerate speed denominator {denom}")));
    }
    let num = setup.integrate_boundary(|k, p| p * sg(k)) - setup.integrate(|k| setup.hcal.values[k] * sg(k));
    Ok(num / denom)
}

/// `|∫_Ω (C√γ/W + √γ𝓗) − ∫_Γ φ√γ|`.
pub fn flux_balance_residual(setup: &FlowSetup, field: &Field, speed: f64) -> f64 {
    let sg = |k: usize| setup.amb[k].gamma.sqrt();
    let lhs = setup.integrate(|k| {
        let w = tilt(&setup.amb[k], &setup.jet(field, k));
        speed * sg(k) / w + sg(k) * setup.hcal.values[k]
    });
    (lhs - setup.integrate_boundary(|k, p| p * sg(k))).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedBound {
    pub bound: f64,
    pub holds: bool,
}

/// Checks `|C| ≤ (|Γ| + sup|𝓗||Ω|)/|Ω| · W_max/√γ_min`, with the observed
/// `W_max` standing in for the a priori gradient bound.
pub fn speed_bound_check(setup: &FlowSetup, speed: f64, w_max: f64) -> SpeedBound {
    let boundary = setup.integrate_boundary(|_, _| 1.0);
    let volume = setup.integrate(|_| 1.0);
    let h_sup = setup.hcal.max_abs();
    let gamma_min = setup.amb.iter().map(|a| a.gamma).fold(f64::INFINITY, f64::min);
    let bound = (boundary + h_sup * volume) / volume * w_max / gamma_min.sqrt();
    SpeedBound {
        bound,
        holds: speed.abs() <= bound,
    }
}

/// Largest violation of `v₁ + Ct − tol ≤ u(·, t) ≤ v₂ + Ct + tol` over all
/// snapshots, where `v₁ = v + inf(u₀ − v)`, `v₂ = v + sup(u₀ − v)` and
/// `tol = tol_coef · t`. Nonpositive values mean the ordering holds everywhere.
pub fn sandwich_check(result: &FlowResult, soliton: &SolitonSolution, speed: f64, tol_coef: f64) -> Result<f64> {
    let v = &soliton.v.values;
    let u0 = &result.snapshots[0].1.values;
    if u0.len() != v.len() {
        return Err(Error::GridMismatch(format!(
            "flow has {} nodes, soliton has {}",
            u0.len(),
            v.len()
        )));
    }
    let diffs = u0.iter().zip(v).map(|(a, b)| a - b);
    let lo = diffs.clone().fold(f64::INFINITY, f64::min);
    let hi = diffs.fold(f64::NEG_INFINITY, f64::max);
    let mut worst = f64::NEG_INFINITY;
    for (t, u) in &result.snapshots {
        let tol = tol_coef * t;
        for (uk, vk) in u.values.iter().zip(v) {
            let below = (vk + lo + speed * t - tol) - uk;
            let above = uk - (vk + hi + speed * t + tol);
            worst = worst.max(below).max(above);
        }
    }
    Ok(worst)
}
