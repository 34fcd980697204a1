//! Mean curvature flow of Killing graphs in warped-product manifolds.
//!
//! A Killing graph is the hypersurface obtained by flowing each point of a
//! domain `Ω` of a leaf `P` along a Killing field `Y` for time `u(x)`. The
//! ambient metric is the warped product `σ + ds²/γ`, with `γ = 1/|Y|²`.
//!
//! The crate is organized bottom-up:
//!
//! * [`ambient`]: leaf metric, Christoffel symbols, warping function.
//! * [`chart`]: structured grids with a ghost layer and quadrature.
//! * [`geometry`]: pointwise and gridded shape quantities of the graph.
//! * [`flow`]: the nonparametric flow with contact-angle boundary data.
//! * [`stationary`]: translating solitons, speed and flux identities.
//! * [`banded`]: banded LU used by the implicit solvers.

pub mod ambient;
pub mod banded;
pub mod chart;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod stationary;
pub mod tensor;

pub use ambient::{AmbientGeometry, AmbientPoint, BuiltinGeometry, MetricField};
pub use chart::{Chart, Field, NodeField, Side};
pub use error::{Error, Result};
pub use flow::{BoundaryData, FlowConfig, FlowRecord, FlowResult, Scheme, StopReason};
pub use geometry::{GraphState, Jet, ShapeData};
pub use stationary::{SolitonMethod, SolitonProblem, SolitonSolution};
