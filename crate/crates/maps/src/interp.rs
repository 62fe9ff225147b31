//! Shape-preserving 1-D interpolation.

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Pchip {
    /// `x` strictly increasing, at least two points, all finite.
    pub fn new(x: &[f64], y: &[f64]) -> Option<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m = vec![d[0]; 2];
        } else {
            for i in 1..n - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m[0] = end_slope(h[0], h[1], d[0], d[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Some(Pchip { x: x.to_vec(), y: y.to_vec(), m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value at `t`; `None` outside the data range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (a, b) = self.range();
        if !(t >= a && t <= b) {
            return None;
        }
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1])
    }

    /// Solve `f(t) = target` on the data range, assuming a monotone
    /// interpolant on the bracketing interval.
    pub fn root(&self, target: f64) -> Option<f64> {
        let idx = (0..self.x.len() - 1).find(|&i| {
            let (a, b) = (self.y[i] - target, self.y[i + 1] - target);
            a == 0.0 || a * b < 0.0 || (i == self.x.len() - 2 && b == 0.0)
        })?;
        let (mut lo, mut hi) = (self.x[idx], self.x[idx + 1]);
        let f = |t: f64| self.eval(t).unwrap() - target;
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if fhi == 0.0 {
            return Some(hi);
        }
        let up = fhi > flo;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (f(mid) < 0.0) == up {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Fill NaN entries by linear interpolation between the nearest finite
/// neighbours (constant extrapolation at the ends). Returns the filled
/// indices.
pub fn fill_linear(y: &mut [f64], x: &[f64]) -> Vec<usize> {
    let known: Vec<usize> = (0..y.len()).filter(|&i| y[i].is_finite()).collect();
    let mut filled = Vec::new();
    if known.is_empty() {
        return filled;
    }
    for i in 0..y.len() {
        if y[i].is_finite() {
            continue;
        }
        let p = known.partition_point(|&k| k < i);
        y[i] = match (p.checked_sub(1).map(|q| known[q]), known.get(p).copied()) {
            (Some(a), Some(b)) => y[a] + (y[b] - y[a]) * (x[i] - x[a]) / (x[b] - x[a]),
            (Some(a), None) => y[a],
            (None, Some(b)) => y[b],
            (None, None) => unreachable!(),
        };
        filled.push(i);
    }
    filled
}
