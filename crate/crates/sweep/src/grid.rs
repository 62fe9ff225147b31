use imbench_control::ControllerConfig;
use imbench_machine::MachineParams;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Current-reference grid and the speeds it is swept at.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub i_sd_min: f64,
    pub i_sd_max: f64,
    pub i_sq_max: f64,
    pub m: usize,
    pub n: usize,
    pub hold_time: f64,
    pub speeds: Vec<f64>,
}

impl GridSpec {
    /// 8×17 grid over [i_sd_min, î/2] × [−î, î], 2 s holds, speeds at
    /// 0.3/0.5/0.7/0.9 of rated.
    pub fn for_machine(p: &MachineParams, cfg: &ControllerConfig) -> Self {
        let r = p.rated;
        GridSpec {
            i_sd_min: cfg.i_sd_min,
            i_sd_max: r.i_hat_n / 2.0,
            i_sq_max: r.i_hat_n,
            m: 8,
            n: 17,
            hold_time: 2.0,
            speeds: [0.3, 0.5, 0.7, 0.9].iter().map(|s| s * r.omega_m_n).collect(),
        }
    }

    /// Samples recorded per grid point.
    pub fn window_len(&self, f_s: f64) -> usize {
        (self.hold_time * f_s).round() as usize
    }

    pub fn n_points(&self) -> usize {
        self.m * self.n
    }

    /// Structural checks only; see [`GridSpec::validate_for`] for the
    /// controller-dependent hold-time bound.
    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |s: &str| Err(GridError::InvalidGrid(s.to_string()));
        if !(self.i_sd_min > 0.0 && self.i_sd_min.is_finite()) {
            return bad("i_sd_min must be positive");
        }
        if !(self.i_sd_max > self.i_sd_min && self.i_sd_max.is_finite()) {
            return bad("i_sd_max must exceed i_sd_min");
        }
        if !(self.i_sq_max > 0.0 && self.i_sq_max.is_finite()) {
            return bad("i_sq_max must be positive");
        }
        if self.m < 2 {
            return bad("m must be at least 2");
        }
        if self.n < 3 || self.n % 2 == 0 {
            return bad("n must be odd and at least 3");
        }
        if !(self.hold_time > 0.0 && self.hold_time.is_finite()) {
            return bad("hold_time must be positive");
        }
        if self.speeds.iter().any(|w| !w.is_finite()) {
            return bad("speeds must be finite");
        }
        Ok(())
    }

    /// Also requires the hold to exceed five closed-loop current settling
    /// times (4 time constants of the PI-plus-stator-transient loop).
    pub fn validate_for(&self, cfg: &ControllerConfig) -> Result<(), GridError> {
        self.validate()?;
        let m = &cfg.model;
        let tau = m.sigma() * m.ls() / (m.rs + cfg.kp);
        if self.hold_time <= 5.0 * 4.0 * tau {
            return Err(GridError::InvalidGrid(format!(
                "hold_time {} s too short for settling estimate {:.4} s",
                self.hold_time,
                4.0 * tau
            )));
        }
        if self.window_len(cfg.f_s) < 10 {
            return Err(GridError::InvalidGrid("fewer than 10 samples per window".into()));
        }
        Ok(())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + step * i as f64 }).collect()
}

/// Grid vectors: `d` from i_sd_min to i_sd_max, `q` symmetric with an
/// exact zero in the middle.
pub fn build_grid(spec: &GridSpec) -> Result<(Vec<f64>, Vec<f64>), GridError> {
    spec.validate()?;
    let d = linspace(spec.i_sd_min, spec.i_sd_max, spec.m);
    let h = (spec.n - 1) / 2;
    let step = spec.i_sq_max / h as f64;
    let q = (0..spec.n)
        .map(|k| {
            let s = k as isize - h as isize;
            match s.unsigned_abs() {
                0 => 0.0,
                a if a == h => spec.i_sq_max.copysign(s as f64),
                _ => step * s as f64,
            }
        })
        .collect();
    Ok((d, q))
}

/// One grid point of the sweep; indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub j: usize,
    pub k: usize,
    pub i_sd: f64,
    pub i_sq: f64,
}

/// Serpentine order: q ascending for the first d value, then the q
/// direction reverses at every d increment.
pub fn schedule(spec: &GridSpec) -> Result<Vec<Setpoint>, GridError> {
    let (d, q) = build_grid(spec)?;
    let mut out = Vec::with_capacity(spec.n_points());
    for (j, &i_sd) in d.iter().enumerate() {
        for s in 0..q.len() {
            let k = if j % 2 == 0 { s } else { q.len() - 1 - s };
            out.push(Setpoint { j, k, i_sd, i_sq: q[k] });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, n: usize, lo: f64, hi: f64, q: f64) -> GridSpec {
        GridSpec { i_sd_min: lo, i_sd_max: hi, i_sq_max: q, m, n, hold_time: 2.0, speeds: vec![] }
    }

    #[test]
    fn grid_vectors() {
        let (d, _) = build_grid(&spec(2, 3, 1.0, 4.0, 1.0)).unwrap();
        assert_eq!(d, vec![1.0, 4.0]);
        let (_, q) = build_grid(&spec(2, 5, 1.0, 4.0, 8.1)).unwrap();
        assert_eq!(q, vec![-8.1, -4.05, 0.0, 4.05, 8.1]);
        let (_, q) = build_grid(&spec(3, 17, 1.0, 4.0, 8.1)).unwrap();
        assert_eq!(q.iter().filter(|&&x| x == 0.0).count(), 1);
        for k in 0..17 {
            assert_eq!(q[k], -q[16 - k]);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_grid(&spec(2, 4, 1.0, 4.0, 1.0)).is_err());
        assert!(build_grid(&spec(1, 5, 1.0, 4.0, 1.0)).is_err());
        assert!(build_grid(&spec(2, 5, 0.0, 4.0, 1.0)).is_err());
        assert!(build_grid(&spec(2, 5, 4.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn serpentine_order() {
        let s = schedule(&spec(2, 3, 1.0, 4.0, 1.0)).unwrap();
        let jk: Vec<_> = s.iter().map(|p| (p.j + 1, p.k + 1)).collect();
        assert_eq!(jk, vec![(1, 1), (1, 2), (1, 3), (2, 3), (2, 2), (2, 1)]);
        assert_eq!((s[0].i_sd, s[0].i_sq), (1.0, -1.0));
    }

    #[test]
    fn adjacent_points_differ_in_one_axis() {
        let g = spec(8, 17, 0.81, 4.05, 8.1);
        let s = schedule(&g).unwrap();
        let dq = 8.1 / 8.0;
        assert_eq!(s.len(), 136);
        for w in s.windows(2) {
            let dj = w[0].j != w[1].j;
            let dk = w[0].k != w[1].k;
            assert!(dj ^ dk);
            if dk {
                assert!(((w[1].i_sq - w[0].i_sq).abs() - dq).abs() < 1e-12);
            }
        }
        let mut seen = vec![false; 136];
        for p in &s {
            seen[p.j * 17 + p.k] = true;
        }
        assert!(seen.iter().all(|&b| b));
        // Corners lie outside the rated current circle but are still visited.
        assert!((4.05f64.hypot(8.1)) > 8.1);
        assert!(s.iter().any(|p| p.i_sd == 4.05 && p.i_sq.abs() == 8.1));
    }
}
