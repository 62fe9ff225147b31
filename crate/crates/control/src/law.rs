use std::f64::consts::TAU;

use imbench_machine::{inv_park, park, DqVec, V2};

use crate::config::ControllerConfig;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("estimated rotor flux {psi:.4} Wb below floor {floor:.4} Wb")]
    FluxTooLow { psi: f64, floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CtrlState {
    /// Estimated rotor flux (d-component in the estimated frame), Wb.
    pub psi_r_hat: f64,
    /// Electrical transformation angle, wrapped to [0, 2π).
    pub theta_k: f64,
    /// Integrator state (A·s).
    pub xi_i: DqVec,
    /// Command computed last sample, applied during the current one (αβ).
    pub u_prev: V2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub i_s_ab: V2,
    pub omega_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtrlOutputs {
    pub u_ref_dq_sat: DqVec,
    pub omega_k: f64,
    pub saturated: bool,
    /// Measured current in the estimated frame.
    pub i_s_dq: DqVec,
    /// Angle used for the Park transform of this sample's measurement.
    pub theta_meas: f64,
    pub flux_low: bool,
}

/// Current-model rotor flux estimator, `dψ̂/dt = (L_m·i_sd − ψ̂)/T_r`,
/// discretized exactly for `i_sd` held over the sample.
pub fn rfe_update(psi_r_hat: f64, i_sd: f64, dt: f64, cfg: &ControllerConfig) -> f64 {
    let a = (-dt / cfg.model.tr()).exp();
    psi_r_hat * a + cfg.model.lm * i_sd * (1.0 - a)
}

/// `ω_k = ω_r + (L_m/L_r)·R_r·i_sq/ψ̂`.
pub fn frame_speed(psi_r_hat: f64, i_sq: f64, omega_r: f64, cfg: &ControllerConfig) -> Result<f64, ControlError> {
    if psi_r_hat.abs() < cfg.psi_floor {
        return Err(ControlError::FluxTooLow { psi: psi_r_hat, floor: cfg.psi_floor });
    }
    let m = &cfg.model;
    Ok(omega_r + m.lm / m.lr() * m.rr * i_sq / psi_r_hat)
}

/// PI law `u = K_p·e + K_i·ξ`, forward-Euler integration gated by `gate`.
pub fn pi_update(err: DqVec, xi_i: DqVec, gate: bool, cfg: &ControllerConfig, dt: f64) -> (DqVec, DqVec) {
    let u = err * cfg.kp + xi_i * cfg.ki;
    let xi = if gate { xi_i + err * dt } else { xi_i };
    (u, xi)
}

/// Back-EMF compensation `ω_k·σ·L_s·J·i + (L_m/L_r)·(ω_r·J − I/T_r)·ψ̂`.
pub fn feed_forward(i_s_dq: DqVec, psi_r_hat: f64, omega_k: f64, omega_r: f64, cfg: &ControllerConfig) -> DqVec {
    let m = &cfg.model;
    let psi = V2::new(psi_r_hat, 0.0);
    let rotor = (psi.j() * omega_r - psi * (1.0 / m.tr())) * (m.lm / m.lr());
    i_s_dq.j() * (omega_k * m.sigma() * m.ls()) + rotor
}

/// Scale the command onto the voltage circle; the flag is the anti-windup
/// gate (`true` when the command was not clipped).
pub fn saturate_voltage(u_ref: DqVec, u_dc: f64) -> (DqVec, bool) {
    let lim = u_dc / 3f64.sqrt();
    let n = u_ref.norm();
    if n <= lim {
        (u_ref, true)
    } else {
        (u_ref * (lim / n), false)
    }
}

/// One controller sample. Returns the voltage to apply during the coming
/// interval (last sample's command), the outputs and the next state.
pub fn control_step(
    meas: Measurement,
    refs: DqVec,
    st: &CtrlState,
    cfg: &ControllerConfig,
) -> (V2, CtrlOutputs, CtrlState) {
    let dt = cfg.dt();
    let omega_r = cfg.model.np as f64 * meas.omega_m;
    let i_dq = park(meas.i_s_ab, st.theta_k);
    let psi = rfe_update(st.psi_r_hat, i_dq.d(), dt, cfg);
    let (omega_k, flux_low) = match frame_speed(psi, i_dq.q(), omega_r, cfg) {
        Ok(w) => (w, false),
        Err(_) => (omega_r, true),
    };
    let theta = (st.theta_k + omega_k * dt).rem_euclid(TAU);

    let err = refs - i_dq;
    let u_ff = feed_forward(i_dq, psi, omega_k, omega_r, cfg);
    let u_pi = err * cfg.kp + st.xi_i * cfg.ki;
    let (u_sat, gate) = saturate_voltage(u_pi + u_ff, cfg.u_dc);
    let (_, xi) = pi_update(err, st.xi_i, gate && cfg.integrator_enabled, cfg, dt);

    let angle = if cfg.delay_compensation { theta + 0.5 * omega_k * dt } else { theta };
    let u_new = inv_park(u_sat, angle);
    let next = CtrlState { psi_r_hat: psi, theta_k: theta, xi_i: xi, u_prev: u_new };
    let out = CtrlOutputs {
        u_ref_dq_sat: u_sat,
        omega_k,
        saturated: !gate,
        i_s_dq: i_dq,
        theta_meas: st.theta_k,
        flux_low,
    };
    (st.u_prev, out, next)
}
