//! Ground-truth squirrel-cage induction machine.
//!
//! The plant is integrated in the stationary (αβ) frame with stator and rotor
//! flux linkages as state. Main flux saturates isotropically along an arctan
//! curve, and a frequency-dependent resistance in parallel with the
//! magnetizing branch carries the core losses.
//!
//! Sign conventions: `J = [[0, -1], [1, 0]]`, and the torque on the rotor is
//! `τ_e = -3/2·n_p·i_rᵀ·J·ψ_r`.

pub mod params;
pub mod plant;
pub mod steady;
pub mod transforms;
pub mod vec2;

pub use params::{CoreLossModel, FrictionModel, MachineParams, ParamError, Rated, SaturationCurve};
pub use plant::{
    core_branch, electromagnetic_torque, invert_flux, plant_derivative, step_rk4, step_rk4_audit,
    Currents, EnergyLedger, Mechanics, PlantError, PlantState, Powers,
};
pub use steady::{efficiency, steady_state, vhz_ratio, SteadyState};
pub use transforms::{inv_park, park};
pub use vec2::{DqVec, M2, V2};
