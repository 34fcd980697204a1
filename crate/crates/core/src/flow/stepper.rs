//! Explicit and frozen-coefficient semi-implicit time steps.

use crate::banded::BandedMatrix;
use crate::chart::{Field, NodeField, Side};
use crate::error::{Error, Result};
use crate::flow::closure::Target;
use crate::flow::operator::{coefficients, expand_row, flow_rhs, stencil, FlowSetup, GhostMode, GhostResolver};
use crate::flow::Scheme;

/// Outer fixed-point tolerance on the ghost update.
pub const CLOSURE_TOL: f64 = 1e-10;
pub const CLOSURE_MAX_ITER: usize = 50;

/// Advances a closed field by `dt` for `u_t = F(u) − frame_speed`; the
/// result is closed.
pub fn step(setup: &FlowSetup, field: &Field, scheme: Scheme, dt: f64, frame_speed: f64) -> Result<Field> {
    match scheme {
        Scheme::Explicit => {
            let ut = flow_rhs(setup, field)?;
            let nodes = NodeField::new(
                (0..setup.chart.len())
                    .map(|k| field.node(k) + dt * (ut.values[k] - frame_speed))
                    .collect(),
            );
            Ok(setup.closed_field(&nodes))
        }
        Scheme::SemiImplicit => semi_implicit(setup, field, dt, frame_speed),
    }
}

fn ghost_gap(chart: &crate::chart::Chart, a: &[(Side, Vec<Target>)], b: &[(Side, Vec<Target>)]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|((s, ta), (_, tb))| {
            let h = chart.h(s.axis);
            ta.iter().zip(tb).map(move |(x, y)| 2.0 * h * (x.g - y.g).abs())
        })
        .fold(0.0, f64::max)
}

fn semi_implicit(setup: &FlowSetup, field: &Field, dt: f64, frame_speed: f64) -> Result<Field> {
    let chart = &setup.chart;
    let len = chart.len();
    let stencils: Vec<_> = (0..len)
        .map(|k| {
            let jet = setup.jet(field, k);
            let co = coefficients(&setup.amb[k], &jet, setup.hcal.values[k]);
            (co.source, stencil(chart, &co.a, &co.drift))
        })
        .collect();
    let mut targets = setup.targets(field);
    let assemble = |targets: &[(Side, Vec<Target>)]| {
        let resolver = GhostResolver::new(chart, targets, GhostMode::Frozen);
        (0..len)
            .map(|k| {
                let (i, j) = chart.ij(k);
                expand_row(&resolver, i, j, &stencils[k].1)
            })
            .collect::<Vec<_>>()
    };
    let rows0 = assemble(&targets);
    let matrix_rows: Vec<Vec<(usize, f64)>> = rows0
        .iter()
        .enumerate()
        .map(|(k, (row, _))| {
            let mut r: Vec<(usize, f64)> = row.iter().map(|&(c, w)| (c, -dt * w)).collect();
            r.push((k, 1.0));
            r
        })
        .collect();
    let lu = BandedMatrix::from_rows(&matrix_rows).factor()?;
    let mut history = Vec::new();
    let mut rows = rows0;
    for _ in 0..CLOSURE_MAX_ITER {
        let mut rhs: Vec<f64> = (0..len)
            .map(|k| field.node(k) + dt * (stencils[k].0 - frame_speed) + dt * rows[k].1)
            .collect();
        lu.solve(&mut rhs);
        let next = NodeField::new(rhs);
        if !next.is_finite() {
            return Err(Error::Numeric("non-finite semi-implicit update".into()));
        }
        let mut out = Field::from_nodes(chart, &next);
        let new_targets = setup.targets(&out);
        let gap = ghost_gap(chart, &targets, &new_targets);
        history.push(gap);
        crate::flow::closure::apply(chart, &new_targets, &mut out);
        if gap < CLOSURE_TOL {
            return Ok(out);
        }
        targets = new_targets;
        rows = assemble(&targets);
    }
    Err(Error::Solver {
        message: "boundary closure fixed point did not converge".into(),
        residual_history: history,
    })
}
