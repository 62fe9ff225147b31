//! Measurement campaigns on the simulated test bench: a grid of current
//! references is swept in serpentine order at each held speed while the
//! controller and plant run in closed loop.

mod grid;
mod log;
mod run;

pub use grid::{build_grid, schedule, GridError, GridSpec, Setpoint};
pub use log::{Col, LogError, LogHeader, MeasurementLog, LOG_FORMAT};
pub use run::{run_campaign, run_sweep, SweepError, SweepOptions};
