//! Identification pipeline: sweep → maps → strategy tables, written as an
//! artifact tree.

use std::path::Path;

use imbench_lut::{build_luts, Lut2d, LutConfig, Strategy};
use imbench_maps::{extract_all, MachineMaps, MapOptions};
use imbench_sweep::{run_campaign, MeasurementLog, SweepError, SweepOptions};
use imbench_util::Exec;

use crate::artifacts::{read_artifact, ArtifactWriter, Manifest};
use crate::config::CampaignConfig;
use crate::error::CliError;

/// Map layers exported as plot matrices.
pub const PLOT_LAYERS: [&str; 6] = ["eta", "tau_e", "xi", "psi_r_mag", "p_fe", "p_cu_s"];

pub fn map_options(cfg: &CampaignConfig) -> MapOptions {
    MapOptions { torque_source: cfg.torque_source, smooth_span: cfg.smooth_span, ..MapOptions::default() }
}

pub fn lut_config(cfg: &CampaignConfig) -> LutConfig {
    let r = cfg.plant.rated;
    LutConfig { i_sd_floor: Some(cfg.grid.i_sd_min), ..LutConfig::new(r.torque_n, r.i_hat_n) }
}

pub fn maps_path(s: usize) -> String {
    format!("maps/maps_s{s}.csv")
}

pub fn lut_path(s: Strategy) -> String {
    format!("luts/{s}.csv")
}

/// One sweep per configured speed.
pub fn run_logs(cfg: &CampaignConfig, exec: Exec) -> Result<Vec<MeasurementLog>, CliError> {
    let opts = SweepOptions {
        substeps: cfg.substeps,
        truth: false,
        audit: false,
        torque_noise_std: cfg.torque_noise_std,
        seed: cfg.seed,
    };
    run_campaign(&cfg.grid, &cfg.plant, &cfg.controller, &opts, exec)
        .into_iter()
        .map(|r| {
            r.map_err(|e| match e {
                SweepError::Grid(g) => CliError::config(g),
                e => CliError::numerical(e),
            })
        })
        .collect()
}

/// Maps per speed and one table per requested strategy.
pub fn build_all(
    cfg: &CampaignConfig,
    logs: &[MeasurementLog],
    strategies: &[Strategy],
    exec: Exec,
) -> Result<(Vec<MachineMaps>, Vec<Lut2d>), CliError> {
    let maps = extract_all(logs, &cfg.plant, &map_options(cfg), exec)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::numerical)?;
    let lc = lut_config(cfg);
    let luts = strategies
        .iter()
        .map(|&s| build_luts(&maps, s, &lc).map_err(CliError::numerical))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((maps, luts))
}

pub struct Identified {
    pub logs: Vec<MeasurementLog>,
    pub maps: Vec<MachineMaps>,
    pub luts: Vec<Lut2d>,
    pub manifest: Manifest,
}

/// Full pipeline into `out`. Output bytes depend only on the configuration.
pub fn identify(cfg: &CampaignConfig, strategies: &[Strategy], out: &Path, exec: Exec) -> Result<Identified, CliError> {
    cfg.validate()?;
    let logs = run_logs(cfg, exec)?;
    let (maps, luts) = build_all(cfg, &logs, strategies, exec)?;
    let mut w = ArtifactWriter::new(out)?;
    for (name, text) in cfg.snapshot() {
        w.write(&format!("config/{name}"), text.as_bytes())?;
    }
    if cfg.write_logs {
        for (s, l) in logs.iter().enumerate() {
            w.write(&format!("logs/log_s{s}.csv"), l.to_text().as_bytes())?;
        }
    }
    for (s, m) in maps.iter().enumerate() {
        w.write(&maps_path(s), m.to_text().as_bytes())?;
        for layer in PLOT_LAYERS {
            if let Some(csv) = m.plot_csv(layer) {
                w.write(&format!("plots/{layer}_s{s}.csv"), csv.as_bytes())?;
            }
        }
    }
    for l in &luts {
        w.write(&lut_path(l.strategy), l.to_text().as_bytes())?;
    }
    w.write("advisory.json", b"{}\n")?;
    let manifest = w.finish()?;
    Ok(Identified { logs, maps, luts, manifest })
}

/// Configuration, maps and tables read back from an identification run.
pub struct Artifacts {
    pub config: CampaignConfig,
    pub maps: Vec<MachineMaps>,
    pub luts: Vec<Lut2d>,
}

pub fn load_artifacts(root: &Path) -> Result<Artifacts, CliError> {
    let manifest = Manifest::load(root)?;
    let stale = manifest.verify(root);
    if !stale.is_empty() {
        return Err(CliError::Config(format!("artifacts modified since identification: {}", stale.join(", "))));
    }
    let config = CampaignConfig::load(&root.join("config/campaign.toml"))?;
    let mut maps = Vec::new();
    for s in 0.. {
        let rel = maps_path(s);
        if !manifest.entries.iter().any(|(p, _)| *p == rel) {
            break;
        }
        maps.push(MachineMaps::parse(&read_artifact(root, &rel)?).map_err(CliError::config)?);
    }
    let mut luts = Vec::new();
    for s in Strategy::ALL {
        let rel = lut_path(s);
        if manifest.entries.iter().any(|(p, _)| *p == rel) {
            luts.push(Lut2d::parse(&read_artifact(root, &rel)?).map_err(CliError::config)?);
        }
    }
    Ok(Artifacts { config, maps, luts })
}
