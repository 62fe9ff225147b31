use imbench_machine::{steady_state, DqVec, MachineParams, PlantError, SteadyState};

use crate::config::ControllerConfig;

/// Frame speed the loop settles to once `ψ̂ = L_m·i_sd*`:
/// `ω_k = ω_r + R_r·i_sq*/(L_r·i_sd*)`.
pub fn closed_loop_frame_speed(cfg: &ControllerConfig, refs: DqVec, omega_m: f64) -> f64 {
    let m = &cfg.model;
    m.np as f64 * omega_m + m.rr * refs.q() / (m.lr() * refs.d())
}

/// Plant steady state reached by the current loop for references `refs`
/// (currents are exactly on reference in the estimated frame).
pub fn closed_loop_steady(
    plant: &MachineParams,
    cfg: &ControllerConfig,
    refs: DqVec,
    omega_m: f64,
) -> Result<SteadyState, PlantError> {
    steady_state(plant, refs, closed_loop_frame_speed(cfg, refs, omega_m), omega_m)
}
