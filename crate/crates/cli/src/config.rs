//! Campaign configuration: a TOML file that points at plant, controller and
//! grid files (each optional, resolved relative to the campaign file).

use std::fs;
use std::path::{Path, PathBuf};

use imbench_control::ControllerConfig;
use imbench_machine::MachineParams;
use imbench_maps::TorqueSource;
use imbench_sweep::GridSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CampaignFile {
    plant: Option<PathBuf>,
    controller: Option<PathBuf>,
    grid: Option<PathBuf>,
    seed: Option<u64>,
    torque_source: Option<String>,
    torque_noise_std: Option<f64>,
    substeps: Option<usize>,
    write_logs: Option<bool>,
    smooth_span: Option<f64>,
}

/// Grid file; every key optional, defaults follow the plant and controller.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridFile {
    pub i_sd_min: Option<f64>,
    pub i_sd_max: Option<f64>,
    pub i_sq_max: Option<f64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub hold_time: Option<f64>,
    /// Shaft speeds, rad/s.
    pub speeds: Option<Vec<f64>>,
}

impl GridFile {
    pub fn apply(&self, mut g: GridSpec) -> GridSpec {
        g.i_sd_min = self.i_sd_min.unwrap_or(g.i_sd_min);
        g.i_sd_max = self.i_sd_max.unwrap_or(g.i_sd_max);
        g.i_sq_max = self.i_sq_max.unwrap_or(g.i_sq_max);
        g.m = self.m.unwrap_or(g.m);
        g.n = self.n.unwrap_or(g.n);
        g.hold_time = self.hold_time.unwrap_or(g.hold_time);
        if let Some(s) = &self.speeds {
            g.speeds = s.clone();
        }
        g
    }

    fn full(g: &GridSpec) -> Self {
        GridFile {
            i_sd_min: Some(g.i_sd_min),
            i_sd_max: Some(g.i_sd_max),
            i_sq_max: Some(g.i_sq_max),
            m: Some(g.m),
            n: Some(g.n),
            hold_time: Some(g.hold_time),
            speeds: Some(g.speeds.clone()),
        }
    }
}

/// Everything one identification campaign needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub plant: MachineParams,
    pub controller: ControllerConfig,
    pub grid: GridSpec,
    pub seed: u64,
    pub torque_source: TorqueSource,
    pub torque_noise_std: f64,
    pub substeps: usize,
    pub write_logs: bool,
    pub smooth_span: Option<f64>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let plant = MachineParams::default();
        let controller = ControllerConfig::for_machine(&plant);
        let grid = GridSpec::for_machine(&plant, &controller);
        CampaignConfig {
            plant,
            controller,
            grid,
            seed: 0,
            torque_source: TorqueSource::Measured,
            torque_noise_std: 0.0,
            substeps: 4,
            write_logs: false,
            smooth_span: None,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Config(format!("file not found: {}", path.display())),
        _ => CliError::io(path, e),
    })
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&read(path)?, base)
    }

    /// Parse campaign text; referenced files are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let f: CampaignFile = toml::from_str(text).map_err(CliError::config)?;
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let plant = match &f.plant {
            Some(p) => MachineParams::from_toml(&read(&resolve(p))?).map_err(CliError::config)?,
            None => MachineParams::default(),
        };
        let ctrl_base = ControllerConfig::for_machine(&plant);
        let controller = match &f.controller {
            Some(p) => ControllerConfig::from_toml(&read(&resolve(p))?, &ctrl_base).map_err(CliError::config)?,
            None => ctrl_base,
        };
        let grid_base = GridSpec::for_machine(&plant, &controller);
        let grid = match &f.grid {
            Some(p) => {
                let g: GridFile = toml::from_str(&read(&resolve(p))?).map_err(CliError::config)?;
                g.apply(grid_base)
            }
            None => grid_base,
        };
        grid.validate_for(&controller).map_err(CliError::config)?;
        let torque_source = match &f.torque_source {
            Some(s) => s.parse().map_err(CliError::config)?,
            None => TorqueSource::Measured,
        };
        let cfg = CampaignConfig {
            plant,
            controller,
            grid,
            seed: f.seed.unwrap_or(0),
            torque_source,
            torque_noise_std: f.torque_noise_std.unwrap_or(0.0),
            substeps: f.substeps.unwrap_or(4),
            write_logs: f.write_logs.unwrap_or(false),
            smooth_span: f.smooth_span,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.torque_noise_std >= 0.0 && self.torque_noise_std.is_finite()) {
            return Err(CliError::Config(format!("torque_noise_std must be ≥ 0, got {}", self.torque_noise_std)));
        }
        if self.substeps == 0 {
            return Err(CliError::Config("substeps must be ≥ 1".into()));
        }
        if let Some(s) = self.smooth_span {
            if !(s > 0.0 && s <= 1.0) {
                return Err(CliError::Config(format!("smooth_span must be in (0, 1], got {s}")));
            }
        }
        if self.grid.speeds.is_empty() {
            return Err(CliError::Config("grid needs at least one speed".into()));
        }
        self.grid.validate_for(&self.controller).map_err(CliError::config)
    }

    /// Self-contained snapshot: (file name, contents) for the campaign file
    /// and the three files it references.
    pub fn snapshot(&self) -> Vec<(&'static str, String)> {
        let campaign = CampaignFile {
            plant: Some("plant.toml".into()),
            controller: Some("controller.toml".into()),
            grid: Some("grid.toml".into()),
            seed: Some(self.seed),
            torque_source: Some(self.torque_source.to_string()),
            torque_noise_std: Some(self.torque_noise_std),
            substeps: Some(self.substeps),
            write_logs: Some(self.write_logs),
            smooth_span: self.smooth_span,
        };
        vec![
            ("campaign.toml", toml::to_string(&campaign).expect("flat config serializes")),
            ("plant.toml", self.plant.to_toml()),
            ("controller.toml", self.controller.to_toml()),
            ("grid.toml", toml::to_string(&GridFile::full(&self.grid)).expect("flat grid serializes")),
        ]
    }
}
