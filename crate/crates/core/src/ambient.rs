//! Warped-product ambient data on a single rectangular chart of the leaf.
//!
//! The ambient metric is `σ_ij dxⁱdxʲ + ds²/γ(x)`, where `s` is the flow
//! parameter of the Killing field `Y` and `γ = 1/|Y|²`. Everything here is a
//! pure function of the chart point.

use std::fmt;
use std::sync::Arc;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::tensor::{self, Christoffel, Mat2, Vec2, IDENTITY, ZERO2};

/// Default lower bound on `r` for the helicoidal chart.
pub const DEFAULT_R_MIN: f64 = 0.5;

/// Step of the central-difference fallback for `∇γ` and `Γ` when a
/// user-supplied field provides only `σ` and `γ`. Truncation error is
/// `O(step²)`.
pub const FD_FALLBACK_STEP: f64 = 1e-4;

/// User-supplied warped-product data. Implementors provide `σ` and `γ`
/// analytically; derivatives fall back to central differences when absent.
pub trait MetricField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn sigma(&self, x: &Vec2) -> Mat2;
    fn gamma(&self, x: &Vec2) -> f64;
    fn grad_gamma(&self, _x: &Vec2) -> Option<Vec2> {
        None
    }
    fn christoffel(&self, _x: &Vec2) -> Option<Christoffel> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinGeometry {
    /// `P × ℝ` with flat `P`: `σ = I`, `γ ≡ 1`.
    EuclideanProduct { dim: usize },
    /// `ℝ³` in cylindrical coordinates `(r, θ, z)` with `Y = ∂_θ`: the chart
    /// is `(r, z)`, `σ = I`, `γ = 1/r²`.
    Helicoidal { r_min: f64 },
    /// One-dimensional leaf with `σ = 1`, `γ = e^{2λx}`.
    ExponentialWarp { lambda: f64 },
}

impl BuiltinGeometry {
    pub fn dim(&self) -> usize {
        match *self {
            Self::EuclideanProduct { dim } => dim,
            Self::Helicoidal { .. } => 2,
            Self::ExponentialWarp { .. } => 1,
        }
    }
}

#[derive(Clone)]
enum Source {
    Builtin(BuiltinGeometry),
    Custom(Arc<dyn MetricField>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Builtin(b) => write!(f, "{b:?}"),
            Source::Custom(m) => write!(f, "Custom({m:?})"),
        }
    }
}

/// Full geometric package at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientPoint {
    pub dim: usize,
    pub sigma: Mat2,
    pub sigma_inv: Mat2,
    pub christoffel: Christoffel,
    pub gamma: f64,
    /// Covariant components `∂_i γ`.
    pub grad_gamma: Vec2,
}

impl AmbientPoint {
    /// `γⁱ = σ^{ij} ∂_j γ`.
    pub fn grad_gamma_up(&self) -> Vec2 {
        tensor::mat_vec(&self.sigma_inv, &self.grad_gamma, self.dim)
    }

    /// `∇̄_Y Y = ∇γ / (2γ²)` as a horizontal vector (contravariant).
    pub fn killing_acceleration(&self) -> Vec2 {
        let up = self.grad_gamma_up();
        let s = 1.0 / (2.0 * self.gamma * self.gamma);
        [up[0] * s, up[1] * s]
    }

    /// `σ(a, b)` for contravariant vectors.
    pub fn inner(&self, a: &Vec2, b: &Vec2) -> f64 {
        tensor::quad(&self.sigma, a, b, self.dim)
    }

    /// `σ^{ij} aᵢ bⱼ` for covectors.
    pub fn inner_co(&self, a: &Vec2, b: &Vec2) -> f64 {
        tensor::quad(&self.sigma_inv, a, b, self.dim)
    }

    pub fn raise(&self, a: &Vec2) -> Vec2 {
        tensor::mat_vec(&self.sigma_inv, a, self.dim)
    }

    pub fn sqrt_det_sigma(&self) -> f64 {
        tensor::det(&self.sigma, self.dim).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct AmbientGeometry {
    source: Source,
    dim: usize,
    lo: Vec2,
    hi: Vec2,
}

impl AmbientGeometry {
    pub fn builtin(kind: BuiltinGeometry, chart: &Chart) -> Result<Self> {
        if kind.dim() != chart.dim() {
            return Err(Error::Geometry(format!(
                "{kind:?} is {}-dimensional but the chart is {}-dimensional",
                kind.dim(),
                chart.dim()
            )));
        }
        match kind {
            BuiltinGeometry::Helicoidal { r_min } => {
                if !(r_min > 0.0) {
                    return Err(Error::Geometry(format!(
                        "helicoidal r_min must be positive, got {r_min}"
                    )));
                }
                if chart.lo()[0] < r_min {
                    return Err(Error::Geometry(format!(
                        "helicoidal chart needs r >= r_min = {r_min}, got r from {}",
                        chart.lo()[0]
                    )));
                }
            }
            BuiltinGeometry::ExponentialWarp { lambda } if !lambda.is_finite() => {
                return Err(Error::Geometry("non-finite warp rate".into()));
            }
            _ => {}
        }
        Ok(Self {
            source: Source::Builtin(kind),
            dim: chart.dim(),
            lo: chart.lo(),
            hi: chart.hi(),
        })
    }

    pub fn custom(field: Arc<dyn MetricField>, chart: &Chart) -> Result<Self> {
        if field.dim() != chart.dim() {
            return Err(Error::Geometry("metric field and chart dimensions differ".into()));
        }
        Ok(Self {
            source: Source::Custom(field),
            dim: chart.dim(),
            lo: chart.lo(),
            hi: chart.hi(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn builtin_kind(&self) -> Option<BuiltinGeometry> {
        match &self.source {
            Source::Builtin(b) => Some(*b),
            Source::Custom(_) => None,
        }
    }

    fn check_domain(&self, x: &Vec2) -> Result<()> {
        let inside = (0..self.dim).all(|a| {
            let slack = 1e-9 * (self.hi[a] - self.lo[a]).abs().max(1.0);
            x[a].is_finite() && x[a] >= self.lo[a] - slack && x[a] <= self.hi[a] + slack
        });
        if inside {
            Ok(())
        } else {
            Err(Error::Domain {
                point: *x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn sigma(&self, x: &Vec2) -> Mat2 {
        match &self.source {
            Source::Builtin(_) => IDENTITY,
            Source::Custom(m) => {
                let mut s = m.sigma(x);
                if self.dim == 1 {
                    s[0][1] = 0.0;
                    s[1][0] = 0.0;
                    s[1][1] = 1.0;
                }
                s
            }
        }
    }

    pub fn gamma(&self, x: &Vec2) -> f64 {
        match &self.source {
            Source::Builtin(BuiltinGeometry::EuclideanProduct { .. }) => 1.0,
            Source::Builtin(BuiltinGeometry::Helicoidal { .. }) => 1.0 / (x[0] * x[0]),
            Source::Builtin(BuiltinGeometry::ExponentialWarp { lambda }) => (2.0 * lambda * x[0]).exp(),
            Source::Custom(m) => m.gamma(x),
        }
    }

    pub fn grad_gamma(&self, x: &Vec2) -> Vec2 {
        match &self.source {
            Source::Builtin(BuiltinGeometry::EuclideanProduct { .. }) => ZERO2,
            Source::Builtin(BuiltinGeometry::Helicoidal { .. }) => [-2.0 / (x[0] * x[0] * x[0]), 0.0],
            Source::Builtin(BuiltinGeometry::ExponentialWarp { lambda }) => {
                [2.0 * lambda * (2.0 * lambda * x[0]).exp(), 0.0]
            }
            Source::Custom(m) => m
                .grad_gamma(x)
                .unwrap_or_else(|| self.fd_grad_gamma(x, FD_FALLBACK_STEP)),
        }
    }

    /// Central-difference gradient of `γ` with step `h`.
    pub fn fd_grad_gamma(&self, x: &Vec2, h: f64) -> Vec2 {
        let mut out = ZERO2;
        for a in 0..self.dim {
            let (mut p, mut m) = (*x, *x);
            p[a] += h;
            m[a] -= h;
            out[a] = (self.gamma(&p) - self.gamma(&m)) / (2.0 * h);
        }
        out
    }

    pub fn christoffel(&self, x: &Vec2) -> Christoffel {
        match &self.source {
            Source::Builtin(_) => [[[0.0; 2]; 2]; 2],
            Source::Custom(m) => m
                .christoffel(x)
                .unwrap_or_else(|| self.fd_christoffel(x, FD_FALLBACK_STEP)),
        }
    }

    /// `Γ^k_ij = ½σ^{kl}(∂_i σ_jl + ∂_j σ_il − ∂_l σ_ij)` with central
    /// differences of step `h` for `∂σ`.
    pub fn fd_christoffel(&self, x: &Vec2, h: f64) -> Christoffel {
        let n = self.dim;
        let mut dsig = [[[0.0; 2]; 2]; 2]; // [l][i][j] = ∂_l σ_ij
        for l in 0..n {
            let (mut p, mut m) = (*x, *x);
            p[l] += h;
            m[l] -= h;
            let (sp, sm) = (self.sigma(&p), self.sigma(&m));
            for i in 0..n {
                for j in 0..n {
                    dsig[l][i][j] = (sp[i][j] - sm[i][j]) / (2.0 * h);
                }
            }
        }
        let inv = tensor::inverse(&self.sigma(x), n).unwrap_or(IDENTITY);
        let mut g = [[[0.0; 2]; 2]; 2];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    g[k][i][j] = 0.5
                        * (0..n)
                            .map(|l| inv[k][l] * (dsig[i][j][l] + dsig[j][i][l] - dsig[l][i][j]))
                            .sum::<f64>();
                }
            }
        }
        g
    }

    /// Evaluate the full package at `x`.
    pub fn eval(&self, x: &Vec2) -> Result<AmbientPoint> {
        self.check_domain(x)?;
        let sigma = self.sigma(x);
        let n = self.dim;
        let symmetric = n == 1 || (sigma[0][1] - sigma[1][0]).abs() <= 1e-14 * sigma[0][0].abs().max(1.0);
        let spd = sigma[0][0] > 0.0 && tensor::det(&sigma, n) > 0.0;
        if !symmetric || !spd {
            return Err(Error::Geometry(format!(
                "σ is not symmetric positive definite at {x:?}: {sigma:?}"
            )));
        }
        let sigma_inv = tensor::inverse(&sigma, n).ok_or_else(|| Error::Geometry(format!("σ singular at {x:?}")))?;
        let gamma = self.gamma(x);
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Geometry(format!(
                "γ must be positive and finite, got {gamma} at {x:?}"
            )));
        }
        let grad_gamma = self.grad_gamma(x);
        if !grad_gamma.iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry(format!("non-finite ∇γ at {x:?}")));
        }
        Ok(AmbientPoint {
            dim: n,
            sigma,
            sigma_inv,
            christoffel: self.christoffel(x),
            gamma,
            grad_gamma,
        })
    }

    /// Evaluate at every physical node of `chart`.
    pub fn eval_nodes(&self, chart: &Chart) -> Result<Vec<AmbientPoint>> {
        (0..chart.len()).map(|k| self.eval(&chart.node_coord(k))).collect()
    }

    /// Largest deviation between the supplied Christoffel symbols and those
    /// obtained by differencing `σ` with step `h`.
    pub fn christoffel_consistency(&self, x: &Vec2, h: f64) -> Result<f64> {
        let p = self.eval(x)?;
        let fd = self.fd_christoffel(x, h);
        let n = self.dim;
        let mut m: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m = m.max((p.christoffel[k][i][j] - fd[k][i][j]).abs());
                }
            }
        }
        Ok(m)
    }
}
