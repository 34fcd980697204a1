//! Shape quantities of the Killing graph `Σ = {ϑ(u(x), x)}`.
//!
//! Pointwise routines take an [`AmbientPoint`] and a [`Jet`] of coordinate
//! derivatives, so they serve both analytic profiles and grid data. Gridded
//! versions build jets from centered differences (ghost values supply the
//! outer neighbour at boundary nodes).

use crate::ambient::{AmbientGeometry, AmbientPoint};
use crate::chart::{Chart, Field, NodeField};
use crate::error::{Error, Result};
use crate::tensor::{self, Mat2, Vec2, ZERO2, ZERO22};

/// Value, gradient `∂_i f` and coordinate Hessian `∂_i∂_j f` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

impl Jet {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().flatten().all(|v| v.is_finite())
    }
}

/// `u_{i;j} = ∂_i∂_j u − Γ^k_ij ∂_k u`.
pub fn covariant_hessian(amb: &AmbientPoint, jet: &Jet) -> Mat2 {
    let n = amb.dim;
    let mut h = ZERO22;
    for i in 0..n {
        for j in 0..n {
            h[i][j] = jet.hess[i][j] - (0..n).map(|k| amb.christoffel[k][i][j] * jet.grad[k]).sum::<f64>();
        }
    }
    h
}

/// `W = √(γ + |∇u|²)`.
pub fn tilt(amb: &AmbientPoint, jet: &Jet) -> f64 {
    (amb.gamma + amb.inner_co(&jet.grad, &jet.grad)).sqrt()
}

/// Induced metric `g_ij = σ_ij + u_i u_j / γ` and its closed-form inverse
/// `g^{ij} = σ^{ij} − uⁱuʲ / W²`.
pub fn induced_metric(amb: &AmbientPoint, jet: &Jet) -> (Mat2, Mat2) {
    let n = amb.dim;
    let w2 = amb.gamma + amb.inner_co(&jet.grad, &jet.grad);
    let up = amb.raise(&jet.grad);
    let mut g = amb.sigma;
    let mut g_inv = amb.sigma_inv;
    for i in 0..n {
        for j in 0..n {
            g[i][j] += jet.grad[i] * jet.grad[j] / amb.gamma;
            g_inv[i][j] -= up[i] * up[j] / w2;
        }
    }
    (g, g_inv)
}

/// The two equivalent expressions for the second fundamental form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondFormExpr {
    /// Written with derivatives `γ_i` of the warping function.
    WarpingGradient,
    /// Written with the Killing acceleration `∇̄_Y Y`.
    KillingAcceleration,
}

pub fn second_fundamental_form(amb: &AmbientPoint, jet: &Jet, expr: SecondFormExpr) -> Mat2 {
    let n = amb.dim;
    let hess = covariant_hessian(amb, jet);
    let w = tilt(amb, jet);
    let u = &jet.grad;
    let g = amb.gamma;
    let mut a = ZERO22;
    match expr {
        SecondFormExpr::WarpingGradient => {
            let gk = &amb.grad_gamma;
            let up = amb.raise(u);
            let ugamma = tensor::dot(&up, gk, n);
            for i in 0..n {
                for j in 0..n {
                    a[i][j] = hess[i][j] / w
                        - u[i] / w * gk[j] / (2.0 * g)
                        - u[j] / w * gk[i] / (2.0 * g)
                        - u[i] * u[j] / (2.0 * w) * ugamma / (g * g);
                }
            }
        }
        SecondFormExpr::KillingAcceleration => {
            let acc = amb.killing_acceleration();
            let grad_vec = amb.raise(u);
            // ⟨∇̄_Y Y, ∂_j⟩ = σ_jk (∇̄_Y Y)^k
            let acc_co = tensor::mat_vec(&amb.sigma, &acc, n);
            let acc_dot_grad = amb.inner(&acc, &grad_vec);
            for i in 0..n {
                for j in 0..n {
                    a[i][j] = hess[i][j] / w
                        - u[i] / w * g * acc_co[j]
                        - u[j] / w * g * acc_co[i]
                        - u[i] * u[j] / w * acc_dot_grad;
                }
            }
        }
    }
    a
}

/// `nH` as the `g`-trace of the second fundamental form.
pub fn mean_curvature_trace(amb: &AmbientPoint, jet: &Jet) -> f64 {
    let (_, g_inv) = induced_metric(amb, jet);
    let a = second_fundamental_form(amb, jet, SecondFormExpr::WarpingGradient);
    tensor::contract(&g_inv, &a, amb.dim)
}

/// `nH = div(∇u/W) − ⟨∇γ, ∇u⟩/(2γW)`, with the divergence expanded
/// covariantly from the jet: `(uⁱ/W)_{;i} = σ^{ij}u_{i;j}/W − uⁱW_i/W²`,
/// `W_i = (γ_i + 2u^k u_{k;i}) / (2W)`.
pub fn mean_curvature_divergence(amb: &AmbientPoint, jet: &Jet) -> f64 {
    let n = amb.dim;
    let hess = covariant_hessian(amb, jet);
    let w = tilt(amb, jet);
    let up = amb.raise(&jet.grad);
    let lap = tensor::contract(&amb.sigma_inv, &hess, n);
    let mut div = lap / w;
    for i in 0..n {
        let ukuki: f64 = (0..n).map(|k| up[k] * hess[k][i]).sum();
        let wi = (amb.grad_gamma[i] + 2.0 * ukuki) / (2.0 * w);
        div -= up[i] * wi / (w * w);
    }
    div - tensor::dot(&up, &amb.grad_gamma, n) / (2.0 * amb.gamma * w)
}

/// Per-node geometric package of the graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapePoint {
    pub w: f64,
    pub g: Mat2,
    pub g_inv: Mat2,
    /// Coefficient `γ/W` of `Y` in the unit normal.
    pub n_vertical: f64,
    /// Horizontal part `−uⁱ/W` of the unit normal.
    pub n_horizontal: Vec2,
    pub a: Mat2,
    /// `n` times the mean curvature.
    pub nh: f64,
    /// `|A|² = g^{ik} g^{jl} a_ij a_kl`.
    pub norm_a2: f64,
}

impl ShapePoint {
    pub fn new(amb: &AmbientPoint, jet: &Jet) -> Result<Self> {
        if !jet.is_finite() {
            return Err(Error::Numeric("non-finite derivatives of u".into()));
        }
        let n = amb.dim;
        let w = tilt(amb, jet);
        let (g, g_inv) = induced_metric(amb, jet);
        let a = second_fundamental_form(amb, jet, SecondFormExpr::WarpingGradient);
        let up = amb.raise(&jet.grad);
        let mixed = tensor::mat_mul(&g_inv, &a, n);
        let norm_a2 = tensor::contract(&mixed, &tensor::mat_mul(&a, &g_inv, n), n);
        Ok(Self {
            w,
            g,
            g_inv,
            n_vertical: amb.gamma / w,
            n_horizontal: [-up[0] / w, -up[1] / w],
            a,
            nh: tensor::contract(&g_inv, &a, n),
            norm_a2,
        })
    }

    /// Ambient squared length of the normal: `(γ/W)²|Y|² + |N_h|²_σ`.
    pub fn normal_norm2(&self, amb: &AmbientPoint) -> f64 {
        self.n_vertical * self.n_vertical / amb.gamma + amb.inner(&self.n_horizontal, &self.n_horizontal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeData {
    pub points: Vec<ShapePoint>,
}

impl ShapeData {
    pub fn w(&self) -> NodeField {
        NodeField::new(self.points.iter().map(|p| p.w).collect())
    }

    pub fn nh(&self) -> NodeField {
        NodeField::new(self.points.iter().map(|p| p.nh).collect())
    }
}

/// The graph function on a chart at time `t`, with ghost layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub chart: Chart,
    pub u: Field,
    pub t: f64,
}

impl GraphState {
    pub fn new(chart: Chart, u: Field, t: f64) -> Self {
        Self { chart, u, t }
    }

    /// Samples `f` on physical and ghost nodes (ghosts exact rather than
    /// closed); used for analytic profiles defined beyond the chart.
    pub fn from_function<F: Fn(Vec2) -> f64>(chart: &Chart, f: F, t: f64) -> Self {
        let mut u = Field::zeros(chart);
        let [n0, n1] = chart.shape();
        let (jlo, jhi) = if chart.dim() == 2 { (-1, n1 as isize) } else { (0, 0) };
        for i in -1..=n0 as isize {
            for j in jlo..=jhi {
                u.set(i, j, f(chart.coord(i, j)));
            }
        }
        Self::new(chart.clone(), u, t)
    }

    pub fn nodes(&self) -> NodeField {
        self.u.nodes()
    }

    /// Centered-difference jet at physical node `k`.
    pub fn jet(&self, k: usize) -> Jet {
        let (i, j) = self.chart.ij(k);
        jet_at(&self.chart, &self.u, i as isize, j as isize)
    }

    /// Gradient `u_i` at every physical node.
    pub fn du(&self) -> Vec<Vec2> {
        (0..self.chart.len()).map(|k| self.jet(k).grad).collect()
    }

    /// Covariant Hessian `u_{i;j}` at every physical node.
    pub fn d2u(&self, geom: &AmbientGeometry) -> Result<Vec<Mat2>> {
        let amb = geom.eval_nodes(&self.chart)?;
        Ok((0..self.chart.len())
            .map(|k| covariant_hessian(&amb[k], &self.jet(k)))
            .collect())
    }
}

pub(crate) fn jet_at(chart: &Chart, u: &Field, i: isize, j: isize) -> Jet {
    let c = u.get(i, j);
    let h0 = chart.h(0);
    let (e, w) = (u.get(i + 1, j), u.get(i - 1, j));
    let mut jet = Jet {
        value: c,
        grad: [(e - w) / (2.0 * h0), 0.0],
        hess: [[(e - 2.0 * c + w) / (h0 * h0), 0.0], [0.0, 0.0]],
    };
    if chart.dim() == 2 {
        let h1 = chart.h(1);
        let (nn, s) = (u.get(i, j + 1), u.get(i, j - 1));
        jet.grad[1] = (nn - s) / (2.0 * h1);
        jet.hess[1][1] = (nn - 2.0 * c + s) / (h1 * h1);
        let mixed =
            (u.get(i + 1, j + 1) - u.get(i + 1, j - 1) - u.get(i - 1, j + 1) + u.get(i - 1, j - 1)) / (4.0 * h0 * h1);
        jet.hess[0][1] = mixed;
        jet.hess[1][0] = mixed;
    }
    jet
}

fn node_jets(geom: &AmbientGeometry, state: &GraphState) -> Result<(Vec<AmbientPoint>, Vec<Jet>)> {
    let amb = geom.eval_nodes(&state.chart)?;
    let jets: Vec<Jet> = (0..state.chart.len()).map(|k| state.jet(k)).collect();
    if let Some(k) = jets.iter().position(|j| !j.is_finite()) {
        return Err(Error::Numeric(format!("non-finite derivatives of u at node {k}")));
    }
    Ok((amb, jets))
}

pub fn compute_w(geom: &AmbientGeometry, state: &GraphState) -> Result<NodeField> {
    let (amb, jets) = node_jets(geom, state)?;
    Ok(NodeField::new(amb.iter().zip(&jets).map(|(a, j)| tilt(a, j)).collect()))
}

pub fn induced_metric_field(geom: &AmbientGeometry, state: &GraphState) -> Result<Vec<(Mat2, Mat2)>> {
    let (amb, jets) = node_jets(geom, state)?;
    Ok(amb.iter().zip(&jets).map(|(a, j)| induced_metric(a, j)).collect())
}

pub fn second_fundamental_form_field(
    geom: &AmbientGeometry,
    state: &GraphState,
    expr: SecondFormExpr,
) -> Result<Vec<Mat2>> {
    let (amb, jets) = node_jets(geom, state)?;
    Ok(amb
        .iter()
        .zip(&jets)
        .map(|(a, j)| second_fundamental_form(a, j, expr))
        .collect())
}

pub fn shape_data(geom: &AmbientGeometry, state: &GraphState) -> Result<ShapeData> {
    let (amb, jets) = node_jets(geom, state)?;
    let points = amb
        .iter()
        .zip(&jets)
        .map(|(a, j)| ShapePoint::new(a, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShapeData { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanCurvatureForm {
    /// `g^{ij} a_ij` from nodal jets.
    Trace,
    /// Differences of the nodal flux `√σ uⁱ/W`, then the `∇γ` correction.
    Divergence,
}

/// `nH` at every physical node. The divergence form differences the flux
/// field: centered in the interior, one-sided second order on the boundary
/// layer along the normal axis.
pub fn mean_curvature(geom: &AmbientGeometry, state: &GraphState, form: MeanCurvatureForm) -> Result<NodeField> {
    let (amb, jets) = node_jets(geom, state)?;
    match form {
        MeanCurvatureForm::Trace => Ok(NodeField::new(
            amb.iter().zip(&jets).map(|(a, j)| mean_curvature_trace(a, j)).collect(),
        )),
        MeanCurvatureForm::Divergence => {
            let chart = &state.chart;
            let n = chart.dim();
            let flux: Vec<Vec2> = amb
                .iter()
                .zip(&jets)
                .map(|(a, j)| {
                    let up = a.raise(&j.grad);
                    let s = a.sqrt_det_sigma() / tilt(a, j);
                    [up[0] * s, up[1] * s]
                })
                .collect();
            let [n0, n1] = chart.shape();
            let mut out = Vec::with_capacity(chart.len());
            for k in 0..chart.len() {
                let (i, j) = chart.ij(k);
                let mut div = 0.0;
                for axis in 0..n {
                    let (idx, len) = if axis == 0 { (i, n0) } else { (j, n1) };
                    let at = |m: usize| {
                        let kk = if axis == 0 {
                            chart.index(m, j)
                        } else {
                            chart.index(i, m)
                        };
                        flux[kk][axis]
                    };
                    let h = chart.h(axis);
                    div += if idx == 0 {
                        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                    } else if idx + 1 == len {
                        (3.0 * at(len - 1) - 4.0 * at(len - 2) + at(len - 3)) / (2.0 * h)
                    } else {
                        (at(idx + 1) - at(idx - 1)) / (2.0 * h)
                    };
                }
                let a = &amb[k];
                let jet = &jets[k];
                let w = tilt(a, jet);
                let up = a.raise(&jet.grad);
                out.push(div / a.sqrt_det_sigma() - tensor::dot(&up, &a.grad_gamma, n) / (2.0 * a.gamma * w));
            }
            Ok(NodeField::new(out))
        }
    }
}

/// A smooth nonnegative extension `d` of the distance to the boundary,
/// supplied analytically (value, gradient, Hessian).
pub trait DistanceExtension {
    fn jet(&self, x: &Vec2) -> Jet;
}

impl<F: Fn(&Vec2) -> Jet> DistanceExtension for F {
    fn jet(&self, x: &Vec2) -> Jet {
        self(x)
    }
}

/// Nodal `d`, `θ = ⟨∇d, N⟩ = −⟨∇d, ∇u⟩/W` and `κ = ⟨∇γ, ∇d⟩/(2γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceData {
    pub d: NodeField,
    pub theta: NodeField,
    pub kappa: NodeField,
}

pub fn distance_data(geom: &AmbientGeometry, state: &GraphState, ext: &dyn DistanceExtension) -> Result<DistanceData> {
    let (amb, jets) = node_jets(geom, state)?;
    let n = state.chart.dim();
    let mut d = Vec::new();
    let mut theta = Vec::new();
    let mut kappa = Vec::new();
    for k in 0..state.chart.len() {
        let x = state.chart.node_coord(k);
        let dj = ext.jet(&x);
        let a = &amb[k];
        let norm = a.inner_co(&dj.grad, &dj.grad).sqrt();
        if norm > 1.0 + 1e-8 {
            return Err(Error::Geometry(format!(
                "distance extension has |∇d| = {norm} > 1 at {x:?}"
            )));
        }
        let w = tilt(a, &jets[k]);
        d.push(dj.value);
        theta.push(-a.inner_co(&dj.grad, &jets[k].grad) / w);
        kappa.push(tensor::dot(&a.grad_gamma_up(), &dj.grad, n) / (2.0 * a.gamma));
    }
    Ok(DistanceData {
        d: NodeField::new(d),
        theta: NodeField::new(theta),
        kappa: NodeField::new(kappa),
    })
}

/// Sign in front of `κσ_ij N^j` in the gradient identity for `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaTerm {
    /// `θ_i = −a_i^j d_j + (d_{i;j} + κσ_ij)N^j`, the sign confirmed by the
    /// finite-difference oracle.
    Plus,
    /// `θ_i = −a_i^j d_j + (d_{i;j} − κσ_ij)N^j` as commonly quoted; only
    /// agrees when `κ = 0`.
    Minus,
}

/// Right-hand side of the `θ`-gradient identity at one point.
pub fn theta_gradient_rhs(amb: &AmbientPoint, jet: &Jet, d: &Jet, term: KappaTerm) -> Vec2 {
    let n = amb.dim;
    let sp = ShapePoint::new(amb, jet).expect("finite jet");
    let mixed = tensor::mat_mul(&sp.g_inv, &sp.a, n); // a^j_i = g^{jk} a_ki, symmetric indices
    let kappa = tensor::dot(&amb.grad_gamma_up(), &d.grad, n) / (2.0 * amb.gamma);
    let sign = match term {
        KappaTerm::Plus => 1.0,
        KappaTerm::Minus => -1.0,
    };
    let mut out = ZERO2;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s -= mixed[j][i] * d.grad[j];
            s += (d.hess[i][j] + sign * kappa * amb.sigma[i][j]) * sp.n_horizontal[j];
        }
        out[i] = s;
    }
    out
}

/// Per-node `max_i |∂_iθ − rhs_i|`, with `∂_iθ` by centered differences of
/// the nodal `θ`; zero on boundary nodes. Restricted to flat leaf metrics.
pub fn theta_gradient_check(
    geom: &AmbientGeometry,
    state: &GraphState,
    ext: &dyn DistanceExtension,
    term: KappaTerm,
) -> Result<NodeField> {
    let chart = &state.chart;
    let (amb, jets) = node_jets(geom, state)?;
    if amb
        .iter()
        .any(|a| a.christoffel.iter().flatten().flatten().any(|g| g.abs() > 1e-12))
    {
        return Err(Error::Unsupported(
            "θ-gradient identity check requires a flat leaf metric (Γ ≡ 0)".into(),
        ));
    }
    let dd = distance_data(geom, state, ext)?;
    let n = chart.dim();
    let mut out = NodeField::zeros(chart.len());
    for k in 0..chart.len() {
        let (i, j) = chart.ij(k);
        if chart.on_boundary(i, j) {
            continue;
        }
        let dj = ext.jet(&chart.node_coord(k));
        let rhs = theta_gradient_rhs(&amb[k], &jets[k], &dj, term);
        for axis in 0..n {
            let (p, m) = if axis == 0 {
                (chart.index(i + 1, j), chart.index(i - 1, j))
            } else {
                (chart.index(i, j + 1), chart.index(i, j - 1))
            };
            let dtheta = (dd.theta.values[p] - dd.theta.values[m]) / (2.0 * chart.h(axis));
            out.values[k] = out.values[k].max((dtheta - rhs[axis]).abs());
        }
    }
    Ok(out)
}
