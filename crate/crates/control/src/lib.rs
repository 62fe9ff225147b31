//! Field-oriented current control in the estimated rotor-flux frame.
//!
//! The controller deliberately uses a *linear* parameter set (`ModelParams`),
//! while the plant saturates; the resulting angle mismatch is part of the
//! experiment, not an error.

mod config;
mod law;
mod rig;
mod steady;

pub use config::{ConfigError, ControllerConfig, ModelParams};
pub use law::{
    control_step, feed_forward, frame_speed, pi_update, rfe_update, saturate_voltage, ControlError, CtrlOutputs,
    CtrlState, Measurement,
};
pub use rig::{angle_of, Rig, Sample};
pub use steady::{closed_loop_frame_speed, closed_loop_steady};
