//! Discrete flow operator `u_t = A^{ij}u_{i;j} − (1/2γ + 1/2W²)γⁱu_i − W𝓗`
//! with `A^{ij} = σ^{ij} − uⁱuʲ/W²`, and its linearizations.

use crate::ambient::{AmbientGeometry, AmbientPoint};
use crate::chart::{Chart, Field, NodeField};
use crate::error::{Error, Result};
use crate::flow::closure::{self, BoundaryData, Target};
use crate::geometry::{covariant_hessian, jet_at, tilt, Jet};
use crate::tensor::{self, Mat2, Vec2, ZERO2};

/// A discretized flow problem: chart, cached ambient data, contact data and
/// prescribed curvature.
#[derive(Debug, Clone)]
pub struct FlowSetup {
    pub chart: Chart,
    pub geometry: AmbientGeometry,
    pub amb: Vec<AmbientPoint>,
    pub phi: BoundaryData,
    pub hcal: NodeField,
    pub phi0: f64,
}

impl FlowSetup {
    pub fn new(chart: Chart, geometry: AmbientGeometry, phi: BoundaryData, hcal: NodeField) -> Result<Self> {
        if geometry.dim() != chart.dim() {
            return Err(Error::Config("geometry and chart dimensions differ".into()));
        }
        if !phi.matches(&chart) {
            return Err(Error::GridMismatch("contact data does not match the chart".into()));
        }
        if hcal.values.len() != chart.len() {
            return Err(Error::GridMismatch(
                "prescribed curvature does not match the chart".into(),
            ));
        }
        if !hcal.is_finite() {
            return Err(Error::Config("prescribed curvature is not finite".into()));
        }
        let phi0 = phi.validate()?;
        let amb = geometry.eval_nodes(&chart)?;
        Ok(Self {
            chart,
            geometry,
            amb,
            phi,
            hcal,
            phi0,
        })
    }

    /// Physical values copied into a field with the exact closure applied.
    pub fn closed_field(&self, nodes: &NodeField) -> Field {
        let mut f = Field::from_nodes(&self.chart, nodes);
        self.close(&mut f);
        f
    }

    pub fn close(&self, field: &mut Field) {
        closure::close(&self.chart, &self.amb, &self.phi, field);
    }

    pub fn targets(&self, field: &Field) -> Vec<(crate::chart::Side, Vec<Target>)> {
        closure::targets(&self.chart, &self.amb, &self.phi, field)
    }

    pub fn contact_defect(&self, field: &Field) -> f64 {
        closure::contact_defect(&self.chart, &self.amb, &self.phi, field)
    }

    pub fn jet(&self, field: &Field, k: usize) -> Jet {
        let (i, j) = self.chart.ij(k);
        jet_at(&self.chart, field, i as isize, j as isize)
    }

    /// Trapezoid integral of nodal values against `√det σ dx`.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.chart.len())
            .map(|k| {
                let (i, j) = self.chart.ij(k);
                self.chart.volume_weight(i, j) * self.amb[k].sqrt_det_sigma() * f(k)
            })
            .sum()
    }

    /// Trapezoid integral over the boundary against the `σ`-induced line
    /// element; in one dimension the two end points carry unit weight.
    /// `f` receives the flat node index and the local `φ`.
    pub fn integrate_boundary(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        let mut s = 0.0;
        for (side, vals) in self.phi.sides() {
            for (m, &p) in vals.iter().enumerate() {
                let (i, j) = self.chart.side_node(side, m);
                let k = self.chart.index(i, j);
                let len = if self.chart.dim() == 1 {
                    1.0
                } else {
                    let b = side.tangent_axis();
                    self.amb[k].sigma[b][b].sqrt()
                };
                s += self.chart.side_weight(side, m) * len * f(k, p);
            }
        }
        s
    }
}

/// Frozen quasilinear coefficients at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    /// `A^{ij} = σ^{ij} − uⁱuʲ/W²`.
    pub a: Mat2,
    /// Coefficient of the coordinate gradient: `−A^{ij}Γ^k_ij − (1/2γ + 1/2W²)γ^k`.
    pub drift: Vec2,
    /// `−W𝓗`.
    pub source: f64,
    pub w: f64,
}

pub fn coefficients(amb: &AmbientPoint, jet: &Jet, hcal: f64) -> Coefficients {
    let n = amb.dim;
    let w = tilt(amb, jet);
    let w2 = w * w;
    let up = amb.raise(&jet.grad);
    let mut a = amb.sigma_inv;
    for i in 0..n {
        for j in 0..n {
            a[i][j] -= up[i] * up[j] / w2;
        }
    }
    let c = 0.5 / amb.gamma + 0.5 / w2;
    let gup = amb.grad_gamma_up();
    let mut drift = ZERO2;
    for k in 0..n {
        let gam: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * amb.christoffel[k][i][j])
            .sum();
        drift[k] = -gam - c * gup[k];
    }
    Coefficients {
        a,
        drift,
        source: -w * hcal,
        w,
    }
}

/// `∂(u_t)/∂(∂_m u)` holding the coordinate Hessian fixed.
pub fn gradient_sensitivity(amb: &AmbientPoint, jet: &Jet, hcal: f64) -> Vec2 {
    let n = amb.dim;
    let w = tilt(amb, jet);
    let w2 = w * w;
    let w4 = w2 * w2;
    let p = &jet.grad;
    let up = amb.raise(p);
    let s = covariant_hessian(amb, jet);
    let co = coefficients(amb, jet, hcal);
    let gup = amb.grad_gamma_up();
    let gp = tensor::dot(&gup, p, n);
    let c = 0.5 / amb.gamma + 0.5 / w2;
    let mut out = ZERO2;
    for m in 0..n {
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                let da = -(amb.sigma_inv[i][m] * up[j] + up[i] * amb.sigma_inv[j][m]) / w2
                    + 2.0 * up[i] * up[j] * up[m] / w4;
                v += da * s[i][j] - co.a[i][j] * amb.christoffel[m][i][j];
            }
        }
        v += up[m] / w4 * gp - c * gup[m] - hcal * up[m] / w;
        out[m] = v;
    }
    out
}

/// Nodal `u_t` on a closed field.
pub fn flow_rhs(setup: &FlowSetup, field: &Field) -> Result<NodeField> {
    let n = setup.chart.dim();
    let mut out = Vec::with_capacity(setup.chart.len());
    for k in 0..setup.chart.len() {
        let jet = setup.jet(field, k);
        if !jet.is_finite() {
            return Err(Error::Numeric(format!("non-finite derivatives at node {k}")));
        }
        let amb = &setup.amb[k];
        let co = coefficients(amb, &jet, setup.hcal.values[k]);
        let mut v = co.source;
        for i in 0..n {
            v += co.drift[i] * jet.grad[i];
            for j in 0..n {
                v += co.a[i][j] * jet.hess[i][j];
            }
        }
        out.push(v);
    }
    Ok(NodeField::new(out))
}

/// Five/nine-point stencil of `A^{ij}∂_ij + b^m∂_m` at a node, as
/// `((di, dj), weight)`.
pub fn stencil(chart: &Chart, a: &Mat2, b: &Vec2) -> Vec<((isize, isize), f64)> {
    let h0 = chart.h(0);
    let mut st = vec![
        ((-1, 0), a[0][0] / (h0 * h0) - b[0] / (2.0 * h0)),
        ((1, 0), a[0][0] / (h0 * h0) + b[0] / (2.0 * h0)),
        ((0, 0), -2.0 * a[0][0] / (h0 * h0)),
    ];
    if chart.dim() == 2 {
        let h1 = chart.h(1);
        st[2].1 -= 2.0 * a[1][1] / (h1 * h1);
        st.push(((0, -1), a[1][1] / (h1 * h1) - b[1] / (2.0 * h1)));
        st.push(((0, 1), a[1][1] / (h1 * h1) + b[1] / (2.0 * h1)));
        let x = (a[0][1] + a[1][0]) / (4.0 * h0 * h1);
        st.push(((1, 1), x));
        st.push(((-1, -1), x));
        st.push(((1, -1), -x));
        st.push(((-1, 1), -x));
    }
    st
}

/// How ghost values depend on the physical unknowns during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhostMode {
    /// Targets held fixed: ghosts are affine with unit dependence on the
    /// mirrored node.
    Frozen,
    /// Targets differentiated through the tangential derivative (Newton).
    Linearized,
}

/// Affine expansion of a padded-grid value in physical unknowns.
#[derive(Debug, Clone, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    fn scaled_add(&mut self, other: &Affine, s: f64) {
        self.terms.extend(other.terms.iter().map(|&(k, w)| (k, w * s)));
        self.constant += other.constant * s;
    }
}

/// Per-side targets indexed for ghost lookup.
pub struct GhostResolver<'a> {
    chart: &'a Chart,
    targets: &'a [(crate::chart::Side, Vec<Target>)],
    mode: GhostMode,
}

impl<'a> GhostResolver<'a> {
    pub fn new(chart: &'a Chart, targets: &'a [(crate::chart::Side, Vec<Target>)], mode: GhostMode) -> Self {
        Self { chart, targets, mode }
    }

    fn edge_ghost(&self, axis: usize, upper: bool, m: usize) -> Affine {
        let (side, ts) = self
            .targets
            .iter()
            .find(|(s, _)| s.axis == axis && s.upper == upper)
            .expect("side targets");
        let t = &ts[m];
        let (ii, jj) = closure::inner_neighbour(self.chart, *side, m);
        let scale = -side.inward_sign() * 2.0 * self.chart.h(axis);
        let mut out = Affine {
            terms: vec![(self.chart.index(ii, jj), 1.0)],
            constant: 0.0,
        };
        match self.mode {
            GhostMode::Frozen => out.constant = scale * t.g,
            GhostMode::Linearized => {
                out.terms
                    .extend(t.tangent.iter().map(|&(k, w)| (k, scale * t.dg_dt * w)));
            }
        }
        out
    }

    pub fn resolve(&self, i: isize, j: isize) -> Affine {
        let [n0, n1] = self.chart.shape();
        let (n0, n1) = (n0 as isize, n1 as isize);
        let out_i = i < 0 || i >= n0;
        let out_j = self.chart.dim() == 2 && (j < 0 || j >= n1);
        match (out_i, out_j) {
            (false, false) => Affine {
                terms: vec![(self.chart.index(i as usize, j as usize), 1.0)],
                constant: 0.0,
            },
            (true, false) => self.edge_ghost(0, i >= n0, j as usize),
            (false, true) => self.edge_ghost(1, j >= n1, i as usize),
            (true, true) => {
                let ci = if i < 0 { 0 } else { n0 - 1 };
                let cj = if j < 0 { 0 } else { n1 - 1 };
                let mut a = self.resolve(i, cj);
                a.scaled_add(&self.resolve(ci, j), 1.0);
                a.terms.push((self.chart.index(ci as usize, cj as usize), -1.0));
                a
            }
        }
    }
}

/// Sparse row of `Σ weight · value(i+di, j+dj)` with ghosts expanded; the
/// affine constant is returned separately.
pub fn expand_row(
    resolver: &GhostResolver<'_>,
    i: usize,
    j: usize,
    st: &[((isize, isize), f64)],
) -> (Vec<(usize, f64)>, f64) {
    let mut acc = Affine::default();
    for &((di, dj), w) in st {
        if w == 0.0 {
            continue;
        }
        acc.scaled_add(&resolver.resolve(i as isize + di, j as isize + dj), w);
    }
    let mut terms = acc.terms;
    terms.sort_by_key(|&(k, _)| k);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (k, w) in terms {
        match merged.last_mut() {
            Some((lk, lw)) if *lk == k => *lw += w,
            _ => merged.push((k, w)),
        }
    }
    (merged, acc.constant)
}

/// Jacobian rows of the discrete `u_t` with respect to the physical
/// unknowns, ghosts linearized through the exact closure.
pub fn jacobian_rows(setup: &FlowSetup, field: &Field) -> Vec<Vec<(usize, f64)>> {
    let targets = setup.targets(field);
    let resolver = GhostResolver::new(&setup.chart, &targets, GhostMode::Linearized);
    (0..setup.chart.len())
        .map(|k| {
            let (i, j) = setup.chart.ij(k);
            let jet = setup.jet(field, k);
            let amb = &setup.amb[k];
            let hc = setup.hcal.values[k];
            let co = coefficients(amb, &jet, hc);
            let b = gradient_sensitivity(amb, &jet, hc);
            let st = stencil(&setup.chart, &co.a, &b);
            expand_row(&resolver, i, j, &st).0
        })
        .collect()
}

/// Conservative explicit step: `0.2 h² min(1, min W²) / max tr A`.
pub fn explicit_dt_limit(setup: &FlowSetup, field: &Field) -> f64 {
    let n = setup.chart.dim();
    let mut min_w2 = f64::INFINITY;
    let mut max_tr: f64 = 0.0;
    for k in 0..setup.chart.len() {
        let jet = setup.jet(field, k);
        let co = coefficients(&setup.amb[k], &jet, 0.0);
        min_w2 = min_w2.min(co.w * co.w);
        max_tr = max_tr.max((0..n).map(|i| co.a[i][i]).sum());
    }
    let h = setup.chart.h_min();
    0.2 * h * h * min_w2.min(1.0) / max_tr.max(f64::MIN_POSITIVE)
}
