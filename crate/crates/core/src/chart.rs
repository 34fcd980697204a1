//! Rectangular charts over `Ω ⊂ ℝⁿ`, `n ∈ {1, 2}`, with one ghost layer.
//!
//! Physical nodes include the boundary. Node `(i, j)` has flat index
//! `i * n[1] + j` (row-major, `x1` outer); in one dimension `n[1] == 1` and
//! `j` is always zero. Ghost values live one cell outside each side and are
//! owned by the flow module's boundary closure.

use crate::error::{Error, Result};
use crate::tensor::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    dim: usize,
    n: [usize; 2],
    lo: Vec2,
    hi: Vec2,
}

/// A side of the rectangle: the face where coordinate `axis` is minimal
/// (`upper == false`) or maximal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Side {
    pub axis: usize,
    pub upper: bool,
}

impl Side {
    /// Sign of the inward normal along `axis`.
    pub fn inward_sign(&self) -> f64 {
        if self.upper {
            -1.0
        } else {
            1.0
        }
    }

    pub fn tangent_axis(&self) -> usize {
        1 - self.axis
    }

    pub fn name(&self) -> &'static str {
        match (self.axis, self.upper) {
            (0, false) => "x1_lower",
            (0, true) => "x1_upper",
            (1, false) => "x2_lower",
            _ => "x2_upper",
        }
    }
}

impl Chart {
    pub fn new_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(1, [n, 1], [lo, 0.0], [hi, 0.0])
    }

    pub fn new_2d(lo: Vec2, hi: Vec2, n: [usize; 2]) -> Result<Self> {
        Self::new(2, n, lo, hi)
    }

    pub fn new(dim: usize, n: [usize; 2], lo: Vec2, hi: Vec2) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Unsupported(format!("chart dimension {dim}")));
        }
        for a in 0..dim {
            if n[a] < 3 {
                return Err(Error::Config(format!("axis {a}: need at least 3 nodes, got {}", n[a])));
            }
            if !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(Error::Config(format!(
                    "axis {a}: empty or non-finite bounds [{}, {}]",
                    lo[a], hi[a]
                )));
            }
        }
        let n = if dim == 1 { [n[0], 1] } else { n };
        Ok(Self { dim, n, lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 2] {
        self.n
    }

    pub fn lo(&self) -> Vec2 {
        self.lo
    }

    pub fn hi(&self) -> Vec2 {
        self.hi
    }

    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.n[axis] - 1) as f64
    }

    pub fn h_min(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n[1] + j
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.n[1], k % self.n[1])
    }

    /// Coordinates of a (possibly ghost) node.
    pub fn coord(&self, i: isize, j: isize) -> Vec2 {
        let x = self.lo[0] + i as f64 * self.h(0);
        let y = if self.dim == 2 {
            self.lo[1] + j as f64 * self.h(1)
        } else {
            0.0
        };
        [x, y]
    }

    pub fn node_coord(&self, k: usize) -> Vec2 {
        let (i, j) = self.ij(k);
        self.coord(i as isize, j as isize)
    }

    pub fn contains(&self, x: &Vec2, slack: f64) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] - slack && x[a] <= self.hi[a] + slack)
    }

    pub fn sides(&self) -> Vec<Side> {
        (0..self.dim)
            .flat_map(|axis| [false, true].map(|upper| Side { axis, upper }))
            .collect()
    }

    pub fn on_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || i + 1 == self.n[0] || (self.dim == 2 && (j == 0 || j + 1 == self.n[1]))
    }

    pub fn is_corner(&self, i: usize, j: usize) -> bool {
        self.dim == 2 && (i == 0 || i + 1 == self.n[0]) && (j == 0 || j + 1 == self.n[1])
    }

    /// Number of nodes along a side.
    pub fn side_len(&self, side: Side) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.n[side.tangent_axis()]
        }
    }

    /// Physical `(i, j)` of the `m`-th node along `side`.
    pub fn side_node(&self, side: Side, m: usize) -> (usize, usize) {
        let fixed = if side.upper { self.n[side.axis] - 1 } else { 0 };
        match (self.dim, side.axis) {
            (1, _) => (fixed, 0),
            (_, 0) => (fixed, m),
            _ => (m, fixed),
        }
    }

    /// Ghost position just outside the `m`-th node of `side`.
    pub fn ghost_of(&self, side: Side, m: usize) -> (isize, isize) {
        let (i, j) = self.side_node(side, m);
        let (mut gi, mut gj) = (i as isize, j as isize);
        let step = if side.upper { 1 } else { -1 };
        if side.axis == 0 {
            gi += step;
        } else {
            gj += step;
        }
        (gi, gj)
    }

    /// Composite trapezoid weight of node `(i, j)` in coordinate measure.
    pub fn volume_weight(&self, i: usize, j: usize) -> f64 {
        let w = |idx: usize, axis: usize| {
            let edge = idx == 0 || idx + 1 == self.n[axis];
            self.h(axis) * if edge { 0.5 } else { 1.0 }
        };
        let mut out = w(i, 0);
        if self.dim == 2 {
            out *= w(j, 1);
        }
        out
    }

    /// Trapezoid weight of the `m`-th node along `side` (coordinate length);
    /// in one dimension a boundary point carries counting weight one.
    pub fn side_weight(&self, side: Side, m: usize) -> f64 {
        if self.dim == 1 {
            return 1.0;
        }
        let t = side.tangent_axis();
        let edge = m == 0 || m + 1 == self.n[t];
        self.h(t) * if edge { 0.5 } else { 1.0 }
    }

    pub fn same_grid(&self, other: &Chart) -> bool {
        self == other
    }

    pub fn sample<F: Fn(Vec2) -> f64>(&self, f: F) -> NodeField {
        NodeField::new((0..self.len()).map(|k| f(self.node_coord(k))).collect())
    }
}

/// Values on physical nodes, flat-indexed as in [`Chart::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    pub values: Vec<f64>,
}

impl NodeField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![0.0; len])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &NodeField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Physical values plus a ghost layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    dim: usize,
    n: [usize; 2],
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(chart: &Chart) -> Self {
        let n = chart.shape();
        let (px, py) = Self::padded_shape(chart.dim(), n);
        Self {
            dim: chart.dim(),
            n,
            data: vec![0.0; px * py],
        }
    }

    /// Physical values copied in; ghosts zero until closed.
    pub fn from_nodes(chart: &Chart, nodes: &NodeField) -> Self {
        let mut f = Self::zeros(chart);
        f.set_nodes(chart, nodes);
        f
    }

    fn padded_shape(dim: usize, n: [usize; 2]) -> (usize, usize) {
        if dim == 1 {
            (n[0] + 2, 1)
        } else {
            (n[0] + 2, n[1] + 2)
        }
    }

    fn offset(&self, i: isize, j: isize) -> usize {
        if self.dim == 1 {
            debug_assert!(j == 0);
            (i + 1) as usize
        } else {
            (i + 1) as usize * (self.n[1] + 2) + (j + 1) as usize
        }
    }

    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.data[self.offset(i, j)]
    }

    pub fn set(&mut self, i: isize, j: isize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    pub fn node(&self, k: usize) -> f64 {
        let (i, j) = (k / self.n[1], k % self.n[1]);
        self.get(i as isize, j as isize)
    }

    pub fn set_nodes(&mut self, chart: &Chart, nodes: &NodeField) {
        for k in 0..chart.len() {
            let (i, j) = chart.ij(k);
            self.set(i as isize, j as isize, nodes.values[k]);
        }
    }

    pub fn nodes(&self) -> NodeField {
        let len = self.n[0] * self.n[1];
        NodeField::new((0..len).map(|k| self.node(k)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
