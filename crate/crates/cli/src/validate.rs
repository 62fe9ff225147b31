//! Torque feed-forward check: table references tracked by the current loop.

use imbench_control::{ControllerConfig, Rig};
use imbench_lut::{lut_query, Lut2d};
use imbench_machine::{DqVec, MachineParams};

use crate::error::CliError;

/// Allowed torque error and settling time.
pub const TORQUE_TOL: f64 = 0.03;
pub const SETTLE_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopReport {
    pub speed: f64,
    pub tau_ref: f64,
    pub i_ref: (f64, f64),
    pub clamped: bool,
    /// Shaft reading at zero torque current, subtracted as friction.
    pub friction: f64,
    /// Mean friction-corrected shaft torque over the last quarter of the run.
    pub tau_measured: f64,
    pub rel_error: f64,
    /// Time after the step at which the torque last left the ±3% band.
    pub settling_time: f64,
    /// (t, friction-corrected torque) after the step, every 10th sample.
    pub trace: Vec<(f64, f64)>,
}

impl ClosedLoopReport {
    pub fn pass(&self) -> bool {
        self.rel_error < TORQUE_TOL && self.settling_time < SETTLE_LIMIT
    }

    pub fn summary(&self) -> String {
        format!(
            "speed {:.3} rad/s, τ* {:.4} N·m, refs ({:.4}, {:.4}) A{}\nmeasured τ {:.4} N·m (error {:+.3}%), settling {:.3} s → {}\n",
            self.speed,
            self.tau_ref,
            self.i_ref.0,
            self.i_ref.1,
            if self.clamped { " [clamped]" } else { "" },
            self.tau_measured,
            100.0 * self.rel_error,
            self.settling_time,
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

/// Pre-flux at (i_sd*, 0) for 5 rotor time constants, read the friction
/// offset, then apply the full reference for `run_time` seconds.
pub fn validate_closed_loop(
    plant: &MachineParams,
    ctrl: &ControllerConfig,
    lut: &Lut2d,
    speed: f64,
    tau_ref: f64,
    run_time: f64,
) -> Result<ClosedLoopReport, CliError> {
    let q = lut_query(lut, tau_ref, speed);
    if !(q.i_sd.is_finite() && q.i_sq.is_finite()) {
        return Err(CliError::Numerical(format!("table has no reference at τ = {tau_ref}, ω = {speed}")));
    }
    let mut rig = Rig::new(*plant, *ctrl, speed, 4);
    let shaft = |tau_e: f64| tau_e + plant.friction.torque(speed);
    let f_s = ctrl.f_s;
    let n_pre = (5.0 * ctrl.model.tr() * f_s).ceil() as usize;
    let n_avg = (0.1 * f_s).ceil() as usize;
    let idle = DqVec::new(q.i_sd, 0.0);
    rig.run(idle, n_pre.saturating_sub(n_avg)).map_err(CliError::numerical)?;
    let mut friction = 0.0;
    for _ in 0..n_avg {
        friction += shaft(rig.step(idle).map_err(CliError::numerical)?.tau_e);
    }
    friction /= n_avg as f64;

    let n = (run_time * f_s).round() as usize;
    let refs = DqVec::new(q.i_sd, q.i_sq);
    let band = TORQUE_TOL * tau_ref.abs();
    let tail = n - n / 4;
    let (mut sum, mut last_out, mut trace) = (0.0, 0usize, Vec::new());
    for i in 0..n {
        let tau = shaft(rig.step(refs).map_err(CliError::numerical)?.tau_e) - friction;
        if !tau.is_finite() {
            return Err(CliError::Numerical("torque became non-finite".into()));
        }
        if (tau - tau_ref).abs() > band {
            last_out = i + 1;
        }
        if i >= tail {
            sum += tau;
        }
        if i % 10 == 0 {
            trace.push(((i + 1) as f64 / f_s, tau));
        }
    }
    let tau_measured = sum / (n - tail) as f64;
    Ok(ClosedLoopReport {
        speed,
        tau_ref,
        i_ref: (q.i_sd, q.i_sq),
        clamped: q.clamped,
        friction,
        tau_measured,
        rel_error: (tau_measured - tau_ref).abs() / tau_ref.abs(),
        settling_time: last_out as f64 / f_s,
        trace,
    })
}
