//! Torque contours on identified maps and the strategy selectors.

use imbench_maps::{MachineMaps, Pchip};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LutError {
    #[error("torque {0} N·m not reachable on the map")]
    TorqueUnreachable(f64),
    #[error("efficiency undefined along the whole contour")]
    EfficiencyUndefined,
    #[error("need at least 4 samples of both signs to fit")]
    TooFewSamples,
    #[error("arctan fit did not converge in 200 iterations")]
    FitDiverged,
    #[error("no maps given")]
    NoMaps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub i_sd: f64,
    pub i_sq: f64,
    pub eta: f64,
    pub xi: f64,
}

impl ContourPoint {
    pub fn i_norm(&self) -> f64 {
        self.i_sd.hypot(self.i_sq)
    }
}

/// Constant-torque line over the positive-i_sd half: one vertex per map
/// column that reaches the target torque.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueContour {
    pub tau: f64,
    pub pts: Vec<ContourPoint>,
}

/// Per column, the root of `τ(i_sd, ·) = tau` by monotone interpolation
/// over the valid run containing i_sq = 0.
pub fn torque_contour(maps: &MachineMaps, tau: f64) -> Result<TorqueContour, LutError> {
    let (d, t) = maps.positive_half("tau_e");
    let (_, eta) = maps.positive_half("eta");
    let (_, xi) = maps.positive_half("xi");
    let q = &maps.q;
    let k0 = maps.zero_q();
    let mut pts = Vec::new();
    for (j, &i_sd) in d.iter().enumerate() {
        let Some(p) = t.column_pchip(q, j, k0) else { continue };
        let Some(i_sq) = p.root(tau) else { continue };
        pts.push(ContourPoint { i_sd, i_sq, eta: eta.column_eval(q, j, i_sq).unwrap_or(f64::NAN), xi: xi.column_eval(q, j, i_sq).unwrap_or(f64::NAN) });
    }
    if pts.is_empty() {
        return Err(LutError::TorqueUnreachable(tau));
    }
    Ok(TorqueContour { tau, pts })
}

/// A selected operating point; `flagged` marks a fallback (constraint not
/// met, value clamped to the contour end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub i_sd: f64,
    pub i_sq: f64,
    pub flagged: bool,
}

impl TorqueContour {
    fn xs(&self) -> Vec<f64> {
        self.pts.iter().map(|p| p.i_sd).collect()
    }

    /// i_sq on the contour at an arbitrary i_sd (clamped to the contour's
    /// i_sd span; the flag reports clamping).
    pub fn i_sq_at(&self, i_sd: f64) -> (f64, f64, bool) {
        let xs = self.xs();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        let x = i_sd.clamp(lo, hi);
        let clamped = x != i_sd;
        if xs.len() == 1 {
            return (x, self.pts[0].i_sq, clamped);
        }
        let ys: Vec<f64> = self.pts.iter().map(|p| p.i_sq).collect();
        let y = Pchip::new(&xs, &ys).and_then(|p| p.eval(x)).expect("contour abscissae increase");
        (x, y, clamped)
    }

    fn at(&self, i_sd: f64, flagged: bool) -> Selection {
        let (x, y, c) = self.i_sq_at(i_sd);
        Selection { i_sd: x, i_sq: y, flagged: flagged || c }
    }

    fn endpoint_nearest(&self, f: impl Fn(&ContourPoint) -> f64, target: f64) -> Selection {
        let (a, b) = (&self.pts[0], &self.pts[self.pts.len() - 1]);
        let p = if (f(a) - target).abs() <= (f(b) - target).abs() { a } else { b };
        Selection { i_sd: p.i_sd, i_sq: p.i_sq, flagged: true }
    }

    /// Point where the V/Hz ratio equals `xi_target` (linear between
    /// vertices); nearest end, flagged, if never reached.
    pub fn select_vhz(&self, xi_target: f64) -> Selection {
        let pts: Vec<&ContourPoint> = self.pts.iter().filter(|p| p.xi.is_finite()).collect();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (a.xi - xi_target, b.xi - xi_target);
            if fa == 0.0 {
                return self.at(a.i_sd, false);
            }
            if fa * fb < 0.0 || fb == 0.0 {
                let s = fa / (fa - fb);
                return self.at(a.i_sd + s * (b.i_sd - a.i_sd), false);
            }
        }
        if pts.len() == 1 && pts[0].xi == xi_target {
            return self.at(pts[0].i_sd, false);
        }
        let valid = TorqueContour { tau: self.tau, pts: pts.into_iter().copied().collect() };
        if valid.pts.is_empty() {
            return Selection { i_sd: self.pts[0].i_sd, i_sq: self.pts[0].i_sq, flagged: true };
        }
        valid.endpoint_nearest(|p| p.xi, xi_target)
    }

    /// Point at the given excitation current.
    pub fn select_cf(&self, i_sd: f64) -> Selection {
        self.at(i_sd, false)
    }

    /// Minimum stator current magnitude.
    pub fn select_mtpc(&self) -> Selection {
        let f: Vec<f64> = self.pts.iter().map(|p| -p.i_norm()).collect();
        let x = refine_max(&self.xs(), &f, |_, _| false);
        self.at(x, false)
    }

    /// Maximum efficiency; ties toward smaller current.
    pub fn select_mept(&self) -> Result<Selection, LutError> {
        let f: Vec<f64> = self.pts.iter().map(|p| p.eta).collect();
        if f.iter().filter(|v| v.is_finite()).count() == 0 {
            return Err(LutError::EfficiencyUndefined);
        }
        let norms: Vec<f64> = self.pts.iter().map(|p| p.i_norm()).collect();
        let x = refine_max(&self.xs(), &f, |a, b| norms[a] < norms[b]);
        Ok(self.at(x, false))
    }
}

/// Abscissa of the maximum of `f` over vertices, refined by the parabola
/// through the best vertex and its neighbours. Exact ties go to the lower
/// index unless `prefer(a, b)` says `a` beats `b`.
fn refine_max(x: &[f64], f: &[f64], prefer: impl Fn(usize, usize) -> bool) -> f64 {
    let mut best: Option<usize> = None;
    for i in 0..f.len() {
        if !f[i].is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if f[i] > f[b] || (f[i] == f[b] && prefer(i, b)) => Some(i),
            keep => keep,
        };
    }
    let i = best.expect("at least one finite value");
    if i == 0 || i + 1 == f.len() || !f[i - 1].is_finite() || !f[i + 1].is_finite() {
        return x[i];
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (f0, f1, f2) = (f[i - 1], f[i], f[i + 1]);
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    let c = (d12 - d01) / (x2 - x0);
    if !(c < 0.0) {
        return x1;
    }
    let b = d01 - c * (x0 + x1);
    (-b / (2.0 * c)).clamp(x0, x2)
}
