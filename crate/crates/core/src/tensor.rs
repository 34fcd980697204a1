//! Fixed-size 2-vectors and 2×2 matrices. One-dimensional charts use only
//! the leading component; the trailing slots stay zero (or identity for
//! metrics) so that loops over `0..dim` are all that callers need.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];
/// Christoffel symbols indexed `[k][i][j]` for `Γ^k_ij`.
pub type Christoffel = [[[f64; 2]; 2]; 2];

pub const ZERO2: Vec2 = [0.0; 2];
pub const ZERO22: Mat2 = [[0.0; 2]; 2];
pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_vec(m: &Mat2, v: &Vec2, dim: usize) -> Vec2 {
    let mut out = ZERO2;
    for i in 0..dim {
        for j in 0..dim {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

pub fn dot(a: &Vec2, b: &Vec2, dim: usize) -> f64 {
    (0..dim).map(|i| a[i] * b[i]).sum()
}

/// `aᵢ m^{ij} bⱼ`.
pub fn quad(m: &Mat2, a: &Vec2, b: &Vec2, dim: usize) -> f64 {
    dot(a, &mat_vec(m, b, dim), dim)
}

pub fn mat_mul(a: &Mat2, b: &Mat2, dim: usize) -> Mat2 {
    let mut out = ZERO22;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn det(m: &Mat2, dim: usize) -> f64 {
    match dim {
        1 => m[0][0],
        _ => m[0][0] * m[1][1] - m[0][1] * m[1][0],
    }
}

/// Inverse of the leading `dim × dim` block; `None` when singular. The unused
/// trailing diagonal slot of a 1×1 inverse is set to one.
pub fn inverse(m: &Mat2, dim: usize) -> Option<Mat2> {
    let d = det(m, dim);
    if !d.is_finite() || d == 0.0 {
        return None;
    }
    Some(match dim {
        1 => [[1.0 / m[0][0], 0.0], [0.0, 1.0]],
        _ => [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]],
    })
}

/// Trace of `a^{ij} b_ij`.
pub fn contract(a: &Mat2, b: &Mat2, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn max_abs_diff(a: &Mat2, b: &Mat2, dim: usize) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}
