//! Torque contours on identified maps, control-strategy tables and a
//! brute-force optimum search on the plant model.

mod contour;
mod fit;
mod lut;
mod oracle;

pub use contour::{torque_contour, ContourPoint, LutError, Selection, TorqueContour};
pub use fit::{fit_arctan, fit_excitation, ArctanFit, ExcitationCurve};
pub use lut::{
    build_luts, lut_query, Lut2d, LutConfig, LutQuery, Strategy, FLAG_CONSTRAINT, FLAG_ETA_FALLBACK, FLAG_FIT_FALLBACK,
    FLAG_UNREACHABLE, LUT_FORMAT,
};
pub use oracle::{evaluate_point, oracle_contour, OracleConfig, OraclePoint, OracleResult};
