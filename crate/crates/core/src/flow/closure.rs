//! Contact-angle closure of the ghost layer.
//!
//! On a side with inward unit normal `ν`, the condition `⟨N, ν⟩ = φ` reads
//! `u_ν = −φW`. With `W² = γ + |∇_T u|² + u_ν²` this has the closed form
//!
//! ```text
//! u_ν = −φ √((γ + |∇_T u|²) / (1 − φ²)),
//! ```
//!
//! which, given the tangential coordinate derivative along the side, fixes the
//! normal coordinate derivative `u_a`. The ghost value is then chosen so the
//! centered difference across the side reproduces `u_a`.

use crate::ambient::AmbientPoint;
use crate::chart::{Chart, Field, NodeField, Side};
use crate::error::{Error, Result};
use crate::tensor::Vec2;

/// Boundary values of `φ`, one vector per side in [`Chart::sides`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    sides: Vec<(Side, Vec<f64>)>,
}

impl BoundaryData {
    pub fn from_fn<F: Fn(Vec2, Side) -> f64>(chart: &Chart, f: F) -> Self {
        let sides = chart
            .sides()
            .into_iter()
            .map(|s| {
                let vals = (0..chart.side_len(s))
                    .map(|m| {
                        let (i, j) = chart.side_node(s, m);
                        f(chart.coord(i as isize, j as isize), s)
                    })
                    .collect();
                (s, vals)
            })
            .collect();
        Self { sides }
    }

    pub fn uniform(chart: &Chart, phi: f64) -> Self {
        Self::from_fn(chart, |_, _| phi)
    }

    pub fn sides(&self) -> impl Iterator<Item = (Side, &[f64])> {
        self.sides.iter().map(|(s, v)| (*s, v.as_slice()))
    }

    pub fn value(&self, side: Side, m: usize) -> f64 {
        self.sides
            .iter()
            .find(|(s, _)| *s == side)
            .map(|(_, v)| v[m])
            .expect("side present")
    }

    /// `φ₀ = sup |φ|`.
    pub fn phi0(&self) -> f64 {
        self.sides
            .iter()
            .flat_map(|(_, v)| v.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Enforces the standing hypothesis `|φ| ≤ φ₀ < 1`.
    pub fn validate(&self) -> Result<f64> {
        for (s, v) in &self.sides {
            for (m, p) in v.iter().enumerate() {
                if !p.is_finite() || p.abs() >= 1.0 {
                    return Err(Error::Config(format!(
                        "contact data φ = {p} at node {m} of side {} violates |φ| ≤ φ₀ < 1",
                        s.name()
                    )));
                }
            }
        }
        Ok(self.phi0())
    }

    pub fn matches(&self, chart: &Chart) -> bool {
        let sides = chart.sides();
        self.sides.len() == sides.len()
            && self
                .sides
                .iter()
                .zip(&sides)
                .all(|((s, v), t)| s == t && v.len() == chart.side_len(*t))
    }
}

/// Normal coordinate derivative enforced at one side node, its derivative
/// with respect to the tangential derivative, and the stencil producing the
/// tangential derivative from physical nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub g: f64,
    pub dg_dt: f64,
    pub tangent: Vec<(usize, f64)>,
}

/// Solves the contact condition for `u_a` given the tangential coordinate
/// derivative `t`. Returns `(u_a, ∂u_a/∂t)`.
pub fn normal_derivative(amb: &AmbientPoint, side: Side, phi: f64, t: f64) -> (f64, f64) {
    let a = side.axis;
    let sgn = side.inward_sign();
    if amb.dim == 1 {
        let s_aa = amb.sigma_inv[0][0];
        let u_nu = -phi * (amb.gamma / (1.0 - phi * phi)).sqrt();
        return (sgn * u_nu / s_aa.sqrt(), 0.0);
    }
    let b = side.tangent_axis();
    let s_aa = amb.sigma_inv[a][a];
    let s_ab = amb.sigma_inv[a][b];
    let sig_bb = amb.sigma[b][b];
    let root = ((amb.gamma + t * t / sig_bb) / (1.0 - phi * phi)).sqrt();
    let u_nu = -phi * root;
    let du_nu = if root > 0.0 {
        -phi * t / (sig_bb * (1.0 - phi * phi) * root)
    } else {
        0.0
    };
    let g = (sgn * u_nu * s_aa.sqrt() - s_ab * t) / s_aa;
    let dg = (sgn * du_nu * s_aa.sqrt() - s_ab) / s_aa;
    (g, dg)
}

/// Inward normal derivative `u_ν` from the coordinate gradient at a side node.
pub fn inward_normal_derivative(amb: &AmbientPoint, side: Side, grad: &Vec2) -> f64 {
    let a = side.axis;
    let up_a: f64 = (0..amb.dim).map(|j| amb.sigma_inv[a][j] * grad[j]).sum();
    side.inward_sign() * up_a / amb.sigma_inv[a][a].sqrt()
}

/// Stencil of the tangential coordinate derivative at node `m` of `side`:
/// centered inside the side, one-sided second order at its ends.
pub fn tangent_stencil(chart: &Chart, side: Side, m: usize) -> Vec<(usize, f64)> {
    if chart.dim() == 1 {
        return Vec::new();
    }
    let len = chart.side_len(side);
    let h = chart.h(side.tangent_axis());
    let node = |q: usize| {
        let (i, j) = chart.side_node(side, q);
        chart.index(i, j)
    };
    if m == 0 {
        vec![(node(0), -1.5 / h), (node(1), 2.0 / h), (node(2), -0.5 / h)]
    } else if m + 1 == len {
        vec![
            (node(len - 1), 1.5 / h),
            (node(len - 2), -2.0 / h),
            (node(len - 3), 0.5 / h),
        ]
    } else {
        vec![(node(m + 1), 0.5 / h), (node(m - 1), -0.5 / h)]
    }
}

/// Closure targets for every side node, evaluated on the physical values of
/// `field`.
pub fn targets(chart: &Chart, amb: &[AmbientPoint], phi: &BoundaryData, field: &Field) -> Vec<(Side, Vec<Target>)> {
    phi.sides()
        .map(|(side, vals)| {
            let ts = vals
                .iter()
                .enumerate()
                .map(|(m, &p)| {
                    let tangent = tangent_stencil(chart, side, m);
                    let t: f64 = tangent.iter().map(|&(k, w)| w * field.node(k)).sum();
                    let (i, j) = chart.side_node(side, m);
                    let (g, dg_dt) = normal_derivative(&amb[chart.index(i, j)], side, p, t);
                    Target { g, dg_dt, tangent }
                })
                .collect();
            (side, ts)
        })
        .collect()
}

/// Physical node mirrored across the side from the ghost of node `m`.
pub(crate) fn inner_neighbour(chart: &Chart, side: Side, m: usize) -> (usize, usize) {
    let (i, j) = chart.side_node(side, m);
    let step = |v: usize| if side.upper { v - 1 } else { v + 1 };
    if side.axis == 0 {
        (step(i), j)
    } else {
        (i, step(j))
    }
}

/// Writes edge ghosts from `targets` and then the 2D corner ghosts.
pub fn apply(chart: &Chart, targets: &[(Side, Vec<Target>)], field: &mut Field) {
    for (side, ts) in targets {
        let h = chart.h(side.axis);
        for (m, t) in ts.iter().enumerate() {
            let (ii, jj) = inner_neighbour(chart, *side, m);
            let (gi, gj) = chart.ghost_of(*side, m);
            let v = field.get(ii as isize, jj as isize) - side.inward_sign() * 2.0 * h * t.g;
            field.set(gi, gj, v);
        }
    }
    if chart.dim() == 2 {
        let [n0, n1] = chart.shape();
        for (ci, cj) in [(0, 0), (0, n1 - 1), (n0 - 1, 0), (n0 - 1, n1 - 1)] {
            let gi = if ci == 0 { -1 } else { n0 as isize };
            let gj = if cj == 0 { -1 } else { n1 as isize };
            let (ci, cj) = (ci as isize, cj as isize);
            let v = field.get(gi, cj) + field.get(ci, gj) - field.get(ci, cj);
            field.set(gi, gj, v);
        }
    }
}

/// Recomputes and applies the exact nonlinear closure.
pub fn close(chart: &Chart, amb: &[AmbientPoint], phi: &BoundaryData, field: &mut Field) {
    let t = targets(chart, amb, phi, field);
    apply(chart, &t, field);
}

/// Largest `|⟨N, ν⟩ − φ|` over boundary nodes that are not corners, using
/// the nodal centered gradient.
pub fn contact_defect(chart: &Chart, amb: &[AmbientPoint], phi: &BoundaryData, field: &Field) -> f64 {
    contact_values(chart, amb, phi, field)
        .into_iter()
        .fold(0.0, |m, (v, p)| m.max((v - p).abs()))
}

/// `(⟨N, ν⟩, φ)` at every non-corner boundary node.
pub fn contact_values(chart: &Chart, amb: &[AmbientPoint], phi: &BoundaryData, field: &Field) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (side, vals) in phi.sides() {
        for (m, &p) in vals.iter().enumerate() {
            let (i, j) = chart.side_node(side, m);
            if chart.is_corner(i, j) {
                continue;
            }
            let k = chart.index(i, j);
            let jet = crate::geometry::jet_at(chart, field, i as isize, j as isize);
            let a = &amb[k];
            let w = crate::geometry::tilt(a, &jet);
            out.push((-inward_normal_derivative(a, side, &jet.grad) / w, p));
        }
    }
    out
}

/// Largest mismatch between the one-sided normal difference of the physical
/// data and the closure target; large values mean the initial data does not
/// satisfy the contact condition.
pub fn compatibility_defect(chart: &Chart, amb: &[AmbientPoint], phi: &BoundaryData, nodes: &NodeField) -> f64 {
    let field = Field::from_nodes(chart, nodes);
    let t = targets(chart, amb, phi, &field);
    let mut worst: f64 = 0.0;
    for (side, ts) in &t {
        let h = chart.h(side.axis);
        for (m, target) in ts.iter().enumerate() {
            let (i0, j0) = chart.side_node(*side, m);
            let (i1, j1) = inner_neighbour(chart, *side, m);
            let (i2, j2) = (2 * i1 as isize - i0 as isize, 2 * j1 as isize - j0 as isize);
            let u0 = field.get(i0 as isize, j0 as isize);
            let u1 = field.get(i1 as isize, j1 as isize);
            let u2 = field.get(i2, j2);
            // one-sided derivative in the inward direction, converted to +axis
            let inward = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h);
            worst = worst.max((side.inward_sign() * inward - target.g).abs());
        }
    }
    worst
}
