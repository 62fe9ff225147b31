use imbench_machine::MachineParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be strictly positive (got {1})")]
    NotPositive(&'static str, f64),
    #[error("{0} must be non-negative (got {1})")]
    Negative(&'static str, f64),
    #[error("config parse error: {0}")]
    Parse(String),
}

/// The controller's assumed, linear machine model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub rs: f64,
    pub rr: f64,
    pub lm: f64,
    pub lsig_s: f64,
    pub lsig_r: f64,
    pub np: u32,
}

impl ModelParams {
    pub fn from_machine(p: &MachineParams) -> Self {
        ModelParams { rs: p.rs, rr: p.rr, lm: p.lm0, lsig_s: p.lsig_s, lsig_r: p.lsig_r, np: p.np }
    }
    pub fn lr(&self) -> f64 {
        self.lm + self.lsig_r
    }
    pub fn ls(&self) -> f64 {
        self.lm + self.lsig_s
    }
    pub fn tr(&self) -> f64 {
        self.lr() / self.rr
    }
    pub fn sigma(&self) -> f64 {
        1.0 - self.lm * self.lm / (self.ls() * self.lr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub kp: f64,
    pub ki: f64,
    pub f_s: f64,
    pub u_dc: f64,
    pub i_sd_min: f64,
    /// Below this estimated flux the slip term is suppressed.
    pub psi_floor: f64,
    pub model: ModelParams,
    /// `false` freezes the integrator (P-only control).
    pub integrator_enabled: bool,
    /// Rotate the command to the middle of the interval it is applied in.
    pub delay_compensation: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig::for_machine(&MachineParams::default())
    }
}

impl ControllerConfig {
    pub fn for_machine(p: &MachineParams) -> Self {
        ControllerConfig {
            kp: 0.8,
            ki: 136.0,
            f_s: 4000.0,
            u_dc: 580.0,
            i_sd_min: 0.1 * p.rated.i_hat_n,
            psi_floor: 0.01 * p.rated.psi_r_n,
            model: ModelParams::from_machine(p),
            integrator_enabled: true,
            delay_compensation: true,
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.f_s
    }

    /// Voltage amplitude limit of space-vector modulation.
    pub fn u_max(&self) -> f64 {
        self.u_dc / 3f64.sqrt()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (n, v) in [("kp", self.kp), ("ki", self.ki)] {
            if !(v >= 0.0) {
                return Err(ConfigError::Negative(n, v));
            }
        }
        for (n, v) in [
            ("f_s", self.f_s),
            ("u_dc", self.u_dc),
            ("i_sd_min", self.i_sd_min),
            ("psi_floor", self.psi_floor),
            ("model_rs", self.model.rs),
            ("model_rr", self.model.rr),
            ("model_lm", self.model.lm),
            ("model_lsig_s", self.model.lsig_s),
            ("model_lsig_r", self.model.lsig_r),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::NotPositive(n, v));
            }
        }
        if self.model.np == 0 {
            return Err(ConfigError::NotPositive("model_np", 0.0));
        }
        Ok(())
    }

    /// Parse flat-key TOML; keys not given fall back to `base`.
    pub fn from_toml(text: &str, base: &ControllerConfig) -> Result<Self, ConfigError> {
        let mut file = ControllerFile::from(base);
        let partial: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut merged = toml::Value::try_from(&file).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let tbl = merged.as_table_mut().expect("struct serializes to a table");
        for (k, v) in partial {
            if !tbl.contains_key(&k) {
                return Err(ConfigError::Parse(format!("unknown key `{k}`")));
            }
            tbl.insert(k, v);
        }
        file = merged.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let cfg = file.into();
        ControllerConfig::validate(&cfg)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ControllerFile::from(self)).expect("flat config always serializes")
    }

    pub fn snapshot(&self) -> Vec<(String, String)> {
        self.to_toml()
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerFile {
    kp: f64,
    ki: f64,
    f_s: f64,
    u_dc: f64,
    i_sd_min: f64,
    psi_floor: f64,
    model_rs: f64,
    model_rr: f64,
    model_lm: f64,
    model_lsig_s: f64,
    model_lsig_r: f64,
    model_np: u32,
    integrator_enabled: bool,
    delay_compensation: bool,
}

impl From<&ControllerConfig> for ControllerFile {
    fn from(c: &ControllerConfig) -> Self {
        ControllerFile {
            kp: c.kp,
            ki: c.ki,
            f_s: c.f_s,
            u_dc: c.u_dc,
            i_sd_min: c.i_sd_min,
            psi_floor: c.psi_floor,
            model_rs: c.model.rs,
            model_rr: c.model.rr,
            model_lm: c.model.lm,
            model_lsig_s: c.model.lsig_s,
            model_lsig_r: c.model.lsig_r,
            model_np: c.model.np,
            integrator_enabled: c.integrator_enabled,
            delay_compensation: c.delay_compensation,
        }
    }
}

impl From<ControllerFile> for ControllerConfig {
    fn from(f: ControllerFile) -> Self {
        ControllerConfig {
            kp: f.kp,
            ki: f.ki,
            f_s: f.f_s,
            u_dc: f.u_dc,
            i_sd_min: f.i_sd_min,
            psi_floor: f.psi_floor,
            model: ModelParams {
                rs: f.model_rs,
                rr: f.model_rr,
                lm: f.model_lm,
                lsig_s: f.model_lsig_s,
                lsig_r: f.model_lsig_r,
                np: f.model_np,
            },
            integrator_enabled: f.integrator_enabled,
            delay_compensation: f.delay_compensation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        let m = ControllerConfig::default().model;
        assert!((m.lr() - 0.3565).abs() < 1e-12);
        assert!((m.tr() - 0.3565 / 1.55).abs() < 1e-12);
        assert!((m.tr() - 0.230).abs() < 1e-3);
        assert!((m.sigma() - 0.0904).abs() < 1e-4);
        assert!((ControllerConfig::default().u_max() - 334.86).abs() < 5e-3);
    }

    #[test]
    fn toml_round_trip_and_partial() {
        let c = ControllerConfig::default();
        assert_eq!(ControllerConfig::from_toml(&c.to_toml(), &c).unwrap(), c);
        let d = ControllerConfig::from_toml("kp = 1.5\nmodel_rr = 1.7\n", &c).unwrap();
        assert_eq!(d.kp, 1.5);
        assert_eq!(d.model.rr, 1.7);
        assert_eq!(d.ki, 136.0);
        assert!(ControllerConfig::from_toml("kq = 1.0\n", &c).is_err());
        assert!(ControllerConfig::from_toml("f_s = 0.0\n", &c).is_err());
    }
}
