//! Brute-force optimum search over the configured speeds and torques.

use imbench_lut::{oracle_contour, OracleConfig, OracleResult};
use imbench_util::table::Table;
use imbench_util::{par, Exec};

use crate::config::CampaignConfig;
use crate::error::CliError;

pub const ORACLE_FORMAT: &str = "imbench-oracle";
pub const ORACLE_CONTOUR_FORMAT: &str = "imbench-oracle-contours";

/// {0.25, 0.5, 0.75, 1}·τ_N.
pub fn default_torques(cfg: &CampaignConfig) -> Vec<f64> {
    [0.25, 0.5, 0.75, 1.0].iter().map(|f| f * cfg.plant.rated.torque_n).collect()
}

pub fn oracle_config(cfg: &CampaignConfig) -> OracleConfig {
    OracleConfig::new(cfg.grid.i_sd_min, cfg.grid.i_sd_max, cfg.grid.i_sq_max)
}

/// One search per (speed, torque) pair, speed-major.
pub fn run_oracle(cfg: &CampaignConfig, speeds: &[f64], taus: &[f64], exec: Exec) -> Result<Vec<OracleResult>, CliError> {
    let oc = oracle_config(cfg);
    let jobs: Vec<(f64, f64)> = speeds.iter().flat_map(|&w| taus.iter().map(move |&t| (w, t))).collect();
    par::map(exec, &jobs, |&(w, t)| oracle_contour(&cfg.plant, &cfg.controller, &oc, w, t))
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(CliError::numerical)
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// One row per search: the max-η and min-‖i‖ points.
pub fn oracle_table(results: &[OracleResult]) -> Table {
    let mut t = Table::new(ORACLE_FORMAT, 1);
    let col = |f: &dyn Fn(&OracleResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
    t.push_column("speed", col(&|r| r.speed));
    t.push_column("tau", col(&|r| r.tau));
    t.push_column("n_points", col(&|r| r.contour.len() as f64));
    t.push_column("eta_max", col(&|r| opt(r.max_eta.and_then(|p| p.eta))));
    t.push_column("eta_max_i_sd", col(&|r| opt(r.max_eta.map(|p| p.i_sd))));
    t.push_column("eta_max_i_sq", col(&|r| opt(r.max_eta.map(|p| p.i_sq))));
    t.push_column("i_min", col(&|r| opt(r.min_current.map(|p| p.i_norm()))));
    t.push_column("i_min_i_sd", col(&|r| opt(r.min_current.map(|p| p.i_sd))));
    t.push_column("i_min_i_sq", col(&|r| opt(r.min_current.map(|p| p.i_sq))));
    t.push_column("i_min_eta", col(&|r| opt(r.min_current.and_then(|p| p.eta))));
    t
}

/// Every feasible contour point of every search.
pub fn contour_table(results: &[OracleResult]) -> Table {
    let mut t = Table::new(ORACLE_CONTOUR_FORMAT, 1);
    let pts: Vec<(f64, f64, &imbench_lut::OraclePoint)> =
        results.iter().flat_map(|r| r.contour.iter().map(move |p| (r.speed, r.tau, p))).collect();
    t.push_column("speed", pts.iter().map(|p| p.0).collect());
    t.push_column("tau", pts.iter().map(|p| p.1).collect());
    t.push_column("i_sd", pts.iter().map(|p| p.2.i_sd).collect());
    t.push_column("i_sq", pts.iter().map(|p| p.2.i_sq).collect());
    t.push_column("tau_e", pts.iter().map(|p| p.2.tau_e).collect());
    t.push_column("eta", pts.iter().map(|p| opt(p.2.eta)).collect());
    t.push_column("u_norm", pts.iter().map(|p| p.2.u_norm).collect());
    t
}
