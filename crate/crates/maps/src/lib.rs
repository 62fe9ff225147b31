//! Identification of machine maps from sweep logs: window reduction, stator
//! and rotor flux, torque, power split, efficiency and V/Hz ratio.

pub mod extract;
mod grid2;
pub mod interp;
mod maps;
pub mod reduce;
mod smooth;

pub use extract::{
    estimate_rs, loss_split, reconstructed_torque, rotor_flux_mag, stator_flux, ExtractError, LossSplit,
};
pub use grid2::Grid2;
pub use interp::{fill_linear, Pchip};
pub use maps::{
    extract_all, extract_maps, symmetry_expand, MachineMaps, MapError, MapOptions, ReconForm, RsSource,
    TorqueSource, EXTRA_LAYERS, LAYERS, MAPS_FORMAT, TRUTH_LAYERS,
};
pub use reduce::{lowpass, lowpass_alpha, window_reduce, ReduceError, SteadyPoint, Truth};
pub use smooth::smooth;
