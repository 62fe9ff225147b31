//! Scalar layer over the (i_sd, i_sq) grid; NaN marks undefined nodes.

use crate::interp::Pchip;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub nd: usize,
    pub nq: usize,
    /// Row-major in d: `v[j·nq + k]`.
    pub v: Vec<f64>,
}

impl Grid2 {
    pub fn filled(nd: usize, nq: usize, x: f64) -> Self {
        Grid2 { nd, nq, v: vec![x; nd * nq] }
    }

    pub fn nan(nd: usize, nq: usize) -> Self {
        Self::filled(nd, nq, f64::NAN)
    }

    pub fn from_fn(nd: usize, nq: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let v = (0..nd * nq).map(|i| f(i / nq, i % nq)).collect();
        Grid2 { nd, nq, v }
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.v[j * self.nq + k]
    }

    pub fn set(&mut self, j: usize, k: usize, x: f64) {
        self.v[j * self.nq + k] = x;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.v[j * self.nq..(j + 1) * self.nq]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Grid2 { nd: self.nd, nq: self.nq, v: self.v.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip(&self, o: &Grid2, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.nd, self.nq), (o.nd, o.nq));
        Grid2 { nd: self.nd, nq: self.nq, v: self.v.iter().zip(&o.v).map(|(&a, &b)| f(a, b)).collect() }
    }

    /// Monotone interpolant along q for column `j`, over the contiguous
    /// finite run that contains index `anchor`.
    pub fn column_pchip(&self, q: &[f64], j: usize, anchor: usize) -> Option<Pchip> {
        let col = self.column(j);
        if !col[anchor].is_finite() {
            return None;
        }
        let mut lo = anchor;
        while lo > 0 && col[lo - 1].is_finite() {
            lo -= 1;
        }
        let mut hi = anchor;
        while hi + 1 < col.len() && col[hi + 1].is_finite() {
            hi += 1;
        }
        Pchip::new(&q[lo..=hi], &col[lo..=hi])
    }

    /// Column `j` at `y`, interpolated over the contiguous finite run that
    /// brackets `y`; `None` if a bracketing node is undefined or `y` is off
    /// the grid.
    pub fn column_eval(&self, q: &[f64], j: usize, y: f64) -> Option<f64> {
        let n = q.len();
        if !(y >= q[0] && y <= q[n - 1]) {
            return None;
        }
        let k = q.partition_point(|&v| v <= y).saturating_sub(1).min(n.saturating_sub(2));
        let anchor = if y == q[k] { k } else { k + 1 };
        if !self.get(j, k).is_finite() && anchor != k {
            return None;
        }
        if n == 1 {
            return self.get(j, 0).is_finite().then(|| self.get(j, 0));
        }
        self.column_pchip(q, j, anchor)?.eval(y)
    }

    /// Tensor-product interpolation: PCHIP along q within each column, then
    /// PCHIP across the columns that are defined at `(·, y)`.
    pub fn interp(&self, d: &[f64], q: &[f64], x: f64, y: f64) -> Option<f64> {
        let mut xs = Vec::with_capacity(self.nd);
        let mut vs = Vec::with_capacity(self.nd);
        for j in 0..self.nd {
            if let Some(v) = self.column_eval(q, j, y) {
                xs.push(d[j]);
                vs.push(v);
            }
        }
        if xs.len() == 1 {
            return (xs[0] == x).then_some(vs[0]);
        }
        Pchip::new(&xs, &vs)?.eval(x)
    }
}

pub(crate) fn nearest(xs: &[f64], x: f64) -> usize {
    (0..xs.len()).min_by(|&a, &b| (xs[a] - x).abs().total_cmp(&(xs[b] - x).abs())).unwrap_or(0)
}
