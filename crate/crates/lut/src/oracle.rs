//! Brute-force optimum search on the closed-loop steady state of the plant,
//! independent of the measured maps.

use imbench_control::{closed_loop_steady, ControllerConfig};
use imbench_machine::{DqVec, MachineParams, PlantError, SteadyState};

/// Search domain; matches the identification grid extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub i_sd_min: f64,
    pub i_sd_max: f64,
    pub i_sq_max: f64,
    /// Number of i_sd columns searched.
    pub n_d: usize,
    /// Bisection iterations per column.
    pub iters: usize,
}

impl OracleConfig {
    pub fn new(i_sd_min: f64, i_sd_max: f64, i_sq_max: f64) -> Self {
        OracleConfig { i_sd_min, i_sd_max, i_sq_max, n_d: 101, iters: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePoint {
    pub i_sd: f64,
    pub i_sq: f64,
    pub tau_e: f64,
    pub eta: Option<f64>,
    pub u_norm: f64,
}

impl OraclePoint {
    pub fn i_norm(&self) -> f64 {
        self.i_sd.hypot(self.i_sq)
    }
}

/// Optima along one torque contour.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub speed: f64,
    pub tau: f64,
    /// Feasible contour points, ascending in i_sd.
    pub contour: Vec<OraclePoint>,
    pub max_eta: Option<OraclePoint>,
    pub min_current: Option<OraclePoint>,
}

/// Closed-loop steady state for a reference pair.
pub fn evaluate_point(
    plant: &MachineParams,
    cfg: &ControllerConfig,
    i_sd: f64,
    i_sq: f64,
    omega_m: f64,
) -> Result<SteadyState, PlantError> {
    closed_loop_steady(plant, cfg, DqVec::new(i_sd, i_sq), omega_m)
}

fn point(st: &SteadyState, i_sd: f64, i_sq: f64) -> OraclePoint {
    OraclePoint { i_sd, i_sq, tau_e: st.tau_e, eta: st.eta, u_norm: st.u.norm() }
}

/// For each i_sd column, the i_sq that produces `tau` exactly (bisection);
/// points above the voltage limit or outside the current range are dropped.
pub fn oracle_contour(
    plant: &MachineParams,
    cfg: &ControllerConfig,
    oc: &OracleConfig,
    omega_m: f64,
    tau: f64,
) -> Result<OracleResult, PlantError> {
    let u_max = cfg.u_max();
    let q_end = oc.i_sq_max.copysign(tau);
    let mut contour = Vec::with_capacity(oc.n_d);
    for j in 0..oc.n_d {
        let d = if oc.n_d == 1 {
            oc.i_sd_min
        } else {
            oc.i_sd_min + (oc.i_sd_max - oc.i_sd_min) * j as f64 / (oc.n_d - 1) as f64
        };
        let at = |q: f64| evaluate_point(plant, cfg, d, q, omega_m);
        let st = if tau == 0.0 {
            Some((at(0.0)?, 0.0))
        } else {
            let hi = at(q_end)?;
            if (hi.tau_e - tau) * tau.signum() < 0.0 {
                None
            } else {
                let (mut a, mut b) = (0.0, q_end);
                for _ in 0..oc.iters {
                    let m = 0.5 * (a + b);
                    if (at(m)?.tau_e - tau) * tau.signum() < 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let q = 0.5 * (a + b);
                Some((at(q)?, q))
            }
        };
        if let Some((st, q)) = st {
            if st.u.norm() <= u_max {
                contour.push(point(&st, d, q));
            }
        }
    }
    let max_eta = contour
        .iter()
        .filter(|p| p.eta.is_some())
        .max_by(|a, b| a.eta.unwrap().total_cmp(&b.eta.unwrap()))
        .copied();
    let min_current = contour.iter().min_by(|a, b| a.i_norm().total_cmp(&b.i_norm())).copied();
    Ok(OracleResult { speed: omega_m, tau, contour, max_eta, min_current })
}
