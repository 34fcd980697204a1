//! Area-type functionals and the discrete dissipation balance.
//!
//! Along the flow, with `u_t = W(nH − 𝓗)` and `⟨N, ν⟩ = φ`,
//!
//! ```text
//! d/dt ( ∫W + ∫𝓗u − ∫_∂ uφ ) = −∫ u_t²/W − ∫ u_t ⟨∇γ, ∇u⟩ / (2γW)
//! d/dt ( ∫W/√γ + ∫𝓗u/√γ − ∫_∂ uφ/√γ ) = −∫ u_t² / (W√γ)
//! ```
//!
//! The first functional is taken against the leaf measure and is a Lyapunov
//! function when `γ` is constant; the second is the graph area in the
//! ambient metric and decreases for every `γ`.

use crate::chart::{Field, NodeField};
use crate::flow::operator::FlowSetup;
use crate::geometry::tilt;
use crate::tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `∫_Ω W dμ_σ`.
    pub area: f64,
    /// `∫_∂Ω uφ`.
    pub boundary: f64,
    /// `∫_Ω 𝓗u dμ_σ`.
    pub prescribed: f64,
    /// `∫_Ω W/√γ + ∫ 𝓗u/√γ − ∫_∂ uφ/√γ`.
    pub weighted: f64,
}

impl EnergyParts {
    /// `∫W + ∫𝓗u − ∫_∂ uφ`.
    pub fn lyapunov(&self) -> f64 {
        self.area + self.prescribed - self.boundary
    }

    /// `∫W + ∫_∂ uφ`, the grouping with a plus sign on the boundary term.
    pub fn area_plus_boundary(&self) -> f64 {
        self.area + self.boundary
    }
}

pub fn energy(setup: &FlowSetup, field: &Field) -> EnergyParts {
    let w: Vec<f64> = (0..setup.chart.len())
        .map(|k| tilt(&setup.amb[k], &setup.jet(field, k)))
        .collect();
    let u = |k: usize| field.node(k);
    let sg = |k: usize| setup.amb[k].gamma.sqrt();
    let hc = &setup.hcal.values;
    let area = setup.integrate(|k| w[k]);
    let boundary = setup.integrate_boundary(|k, p| u(k) * p);
    let prescribed = setup.integrate(|k| hc[k] * u(k));
    let weighted =
        setup.integrate(|k| (w[k] + hc[k] * u(k)) / sg(k)) - setup.integrate_boundary(|k, p| u(k) * p / sg(k));
    EnergyParts {
        area,
        boundary,
        prescribed,
        weighted,
    }
}

/// Instantaneous integrals entering the dissipation balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationTerms {
    /// `∫ u_t²/W`.
    pub dissipation: f64,
    /// `∫ u_t²/(W√γ)`.
    pub dissipation_weighted: f64,
    /// `∫ u_t ⟨∇γ, ∇u⟩/(2γW)`.
    pub warp_work: f64,
    /// `∫ ⟨∇u, ∇γ⟩/(2W³) + ∫ |∇u|²⟨∇u, ∇γ⟩/(2γW²)`, the warping terms in
    /// the commonly quoted form of the balance.
    pub warp_terms_quoted: f64,
}

pub fn dissipation_terms(setup: &FlowSetup, field: &Field, ut: &NodeField) -> DissipationTerms {
    let n = setup.chart.dim();
    let mut per = Vec::with_capacity(setup.chart.len());
    for k in 0..setup.chart.len() {
        let a = &setup.amb[k];
        let jet = setup.jet(field, k);
        let w = tilt(a, &jet);
        let grad_dot = tensor::dot(&a.grad_gamma_up(), &jet.grad, n);
        let g2 = a.inner_co(&jet.grad, &jet.grad);
        per.push((w, grad_dot, g2));
    }
    let v = &ut.values;
    DissipationTerms {
        dissipation: setup.integrate(|k| v[k] * v[k] / per[k].0),
        dissipation_weighted: setup.integrate(|k| v[k] * v[k] / (per[k].0 * setup.amb[k].gamma.sqrt())),
        warp_work: setup.integrate(|k| v[k] * per[k].1 / (2.0 * setup.amb[k].gamma * per[k].0)),
        warp_terms_quoted: setup.integrate(|k| {
            let (w, gd, g2) = per[k];
            gd / (2.0 * w * w * w) + g2 * gd / (2.0 * setup.amb[k].gamma * w * w)
        }),
    }
}

/// Residuals of the balance laws over one step of length `dt`, with
/// instantaneous integrals averaged over the two end states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationResiduals {
    /// `|−∫u_t²/W − ΔE/Δt − ∫u_t⟨∇γ,∇u⟩/(2γW)|` for the leaf-measure
    /// functional.
    pub leaf: f64,
    /// `|−∫u_t²/(W√γ) − ΔE_w/Δt|` for the ambient-area functional.
    pub weighted: f64,
    /// Same balance in the quoted grouping `d/dt(∫W + ∫_∂uφ)` plus the
    /// quoted warping terms; recorded for comparison only.
    pub quoted: f64,
}

pub fn dissipation_residual(
    before: (&EnergyParts, &DissipationTerms),
    after: (&EnergyParts, &DissipationTerms),
    dt: f64,
) -> DissipationResiduals {
    let avg = |f: fn(&DissipationTerms) -> f64| 0.5 * (f(before.1) + f(after.1));
    let diss = avg(|d| d.dissipation);
    let leaf = (-diss - (after.0.lyapunov() - before.0.lyapunov()) / dt - avg(|d| d.warp_work)).abs();
    let weighted = (-avg(|d| d.dissipation_weighted) - (after.0.weighted - before.0.weighted) / dt).abs();
    let quoted =
        (-diss - (after.0.area_plus_boundary() - before.0.area_plus_boundary()) / dt - avg(|d| d.warp_terms_quoted))
            .abs();
    DissipationResiduals { leaf, weighted, quoted }
}
