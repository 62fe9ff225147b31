//! Local weighted quadratic regression (tricube kernel) over a grid layer.

use nalgebra::{DMatrix, DVector};

use crate::grid2::Grid2;

/// Smooth every finite node using the nearest `span` fraction of finite
/// nodes (axes normalised to unit range). Undefined nodes stay undefined.
pub fn smooth(layer: &Grid2, d: &[f64], q: &[f64], span: f64) -> Grid2 {
    assert!(span > 0.0 && span <= 1.0, "span must be in (0, 1]");
    let norm = |xs: &[f64]| {
        let (lo, hi) = xs.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let w = if hi > lo { hi - lo } else { 1.0 };
        xs.iter().map(|x| (x - lo) / w).collect::<Vec<_>>()
    };
    let (x, y) = (norm(d), norm(q));
    let pts: Vec<(f64, f64, f64)> = (0..layer.nd)
        .flat_map(|j| (0..layer.nq).map(move |k| (j, k)))
        .filter(|&(j, k)| layer.get(j, k).is_finite())
        .map(|(j, k)| (x[j], y[k], layer.get(j, k)))
        .collect();
    let n_near = ((span * pts.len() as f64).ceil() as usize).clamp(6.min(pts.len()), pts.len());
    let mut out = layer.clone();
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(pts.len());
    for j in 0..layer.nd {
        for k in 0..layer.nq {
            if !layer.get(j, k).is_finite() {
                continue;
            }
            let (x0, y0) = (x[j], y[k]);
            dist.clear();
            dist.extend(pts.iter().enumerate().map(|(i, p)| ((p.0 - x0).hypot(p.1 - y0), i)));
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let near = &dist[..n_near];
            let h = near[n_near - 1].0 * 1.000_001;
            let mut a = DMatrix::zeros(n_near, 6);
            let mut b = DVector::zeros(n_near);
            for (r, &(dd, i)) in near.iter().enumerate() {
                let w = if h > 0.0 { (1.0 - (dd / h).powi(3)).powi(3).sqrt() } else { 1.0 };
                let s = if h > 0.0 { h } else { 1.0 };
                let (u, v) = ((pts[i].0 - x0) / s, (pts[i].1 - y0) / s);
                for (c, basis) in [1.0, u, v, u * u, u * v, v * v].into_iter().enumerate() {
                    a[(r, c)] = w * basis;
                }
                b[r] = w * pts[i].2;
            }
            let qr = a.qr();
            let qtb = qr.q().transpose() * b;
            if let Some(sol) = qr.r().solve_upper_triangular(&qtb) {
                if sol[0].is_finite() {
                    out.set(j, k, sol[0]);
                }
            }
        }
    }
    out
}
