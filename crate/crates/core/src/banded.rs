//! Banded LU factorization with partial pivoting.
//!
//! Row `i` stores columns `i − kl ..= i + kl + ku`; the extra `kl` columns
//! hold fill-in produced by row interchanges (the LAPACK `gbtrf` layout,
//! transposed to rows).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    /// Builds a matrix from sparse rows, sizing the band to fit.
    pub fn from_rows(rows: &[Vec<(usize, f64)>]) -> Self {
        let n = rows.len();
        let (mut kl, mut ku) = (0, 0);
        for (i, row) in rows.iter().enumerate() {
            for &(j, _) in row {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let mut m = Self::new(n, kl, ku);
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                m.add(i, j, v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize + self.kl as isize - i as isize;
        (off >= 0 && (off as usize) < self.width).then(|| i * self.width + off as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Accumulates into entry `(i, j)`; panics if outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .filter(|_| j + self.kl >= i && j <= i + self.ku)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku));
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let mut pivots = Vec::with_capacity(n);
        for r in 0..n {
            let last = (r + self.kl + 1).min(n);
            let mut p = r;
            let mut best = self.get(r, r).abs();
            for i in r + 1..last {
                let v = self.get(i, r).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::Numeric(format!(
                    "banded LU: zero or non-finite pivot in column {r}"
                )));
            }
            pivots.push(p);
            let cend = (r + reach + 1).min(n);
            if p != r {
                for c in r..cend {
                    let (a, b) = (self.slot(r, c).unwrap(), self.slot(p, c).unwrap());
                    self.data.swap(a, b);
                }
            }
            let piv = self.get(r, r);
            for i in r + 1..last {
                let s = self.slot(i, r).unwrap();
                let l = self.data[s] / piv;
                self.data[s] = l;
                if l == 0.0 {
                    continue;
                }
                let w = self.width;
                let (head, tail) = self.data.split_at_mut(i * w);
                let src = &head[r * w + self.kl + 1..r * w + self.kl + cend - r];
                let dst = &mut tail[self.kl + r + 1 - i..self.kl + cend - i];
                for (d, u) in dst.iter_mut().zip(src) {
                    *d -= l * u;
                }
            }
        }
        Ok(BandedLu { m: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        let reach = m.kl + m.ku;
        for r in 0..n {
            b.swap(r, self.pivots[r]);
            let br = b[r];
            for i in r + 1..(r + m.kl + 1).min(n) {
                b[i] -= m.get(i, r) * br;
            }
        }
        for r in (0..n).rev() {
            let mut s = b[r];
            for c in r + 1..(r + reach + 1).min(n) {
                s -= m.get(r, c) * b[c];
            }
            b[r] = s / m.get(r, r);
        }
    }
}
