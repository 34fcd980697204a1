#![allow(dead_code)]

use killing_flow::ambient::{AmbientGeometry, BuiltinGeometry};
use killing_flow::chart::{Chart, NodeField};
use killing_flow::flow::{BoundaryData, FlowSetup};
use killing_flow::geometry::Jet;
use killing_flow::tensor::Vec2;

pub fn grim_reaper(x: f64) -> f64 {
    -x.cos().ln()
}

pub fn grim_reaper_jet(x: &Vec2) -> Jet {
    let c = x[0].cos();
    Jet {
        value: -c.ln(),
        grad: [x[0].tan(), 0.0],
        hess: [[1.0 / (c * c), 0.0], [0.0, 0.0]],
    }
}

/// Flat product on (−1, 1) with the grim reaper's contact data: the profile
/// meets both end points at angle `sin 1` measured against the inward normal.
pub fn grim_reaper_setup(n: usize) -> FlowSetup {
    let chart = Chart::new_1d(-1.0, 1.0, n).unwrap();
    let geom = AmbientGeometry::builtin(BuiltinGeometry::EuclideanProduct { dim: 1 }, &chart).unwrap();
    let phi = BoundaryData::uniform(&chart, 1f64.sin());
    let hcal = NodeField::zeros(chart.len());
    FlowSetup::new(chart, geom, phi, hcal).unwrap()
}

/// Helicoidal geometry on [1, 2] × [0, 1] with the contact data of the
/// helicoid `θ = z/c` (here c = 1).
pub fn helicoid_setup(n: usize) -> FlowSetup {
    let chart = Chart::new_2d([1.0, 0.0], [2.0, 1.0], [n, n]).unwrap();
    let geom = AmbientGeometry::builtin(BuiltinGeometry::Helicoidal { r_min: 0.5 }, &chart).unwrap();
    let phi = BoundaryData::from_fn(&chart, |x, side| helicoid_phi(x, side.axis, side.upper));
    let hcal = NodeField::zeros(chart.len());
    FlowSetup::new(chart, geom, phi, hcal).unwrap()
}

/// `⟨N, ν⟩ = −u_ν/W` for `u = z`, `W = √(1/r² + 1)`.
pub fn helicoid_phi(x: Vec2, axis: usize, upper: bool) -> f64 {
    if axis == 0 {
        return 0.0;
    }
    let w = (1.0 / (x[0] * x[0]) + 1.0).sqrt();
    let u_nu = if upper { -1.0 } else { 1.0 };
    -u_nu / w
}

pub fn euclid_setup(dim: usize, n: usize, phi: f64, hcal: f64) -> FlowSetup {
    let chart = if dim == 1 {
        Chart::new_1d(0.0, 1.0, n).unwrap()
    } else {
        Chart::new_2d([0.0, 0.0], [1.0, 1.0], [n, n]).unwrap()
    };
    let geom = AmbientGeometry::builtin(BuiltinGeometry::EuclideanProduct { dim }, &chart).unwrap();
    let bd = BoundaryData::uniform(&chart, phi);
    let h = NodeField::new(vec![hcal; chart.len()]);
    FlowSetup::new(chart, geom, bd, h).unwrap()
}

pub fn exp_warp_setup(n: usize, lambda: f64, phi: f64, hcal: f64) -> FlowSetup {
    let chart = Chart::new_1d(0.0, 1.0, n).unwrap();
    let geom = AmbientGeometry::builtin(BuiltinGeometry::ExponentialWarp { lambda }, &chart).unwrap();
    let bd = BoundaryData::uniform(&chart, phi);
    let h = NodeField::new(vec![hcal; chart.len()]);
    FlowSetup::new(chart, geom, bd, h).unwrap()
}

/// Observed orders `log2(e_k / e_{k+1})` for successive halvings of `h`.
pub fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}
