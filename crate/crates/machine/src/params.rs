use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::vec2::{M2, V2};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParamError {
    #[error("{0} must be strictly positive (got {1})")]
    NotPositive(&'static str, f64),
    #[error("{0} must be non-negative (got {1})")]
    Negative(&'static str, f64),
    #[error("{0} must lie in [0.5, 2.0] (got {1})")]
    TemperatureScale(&'static str, f64),
    #[error("pole pairs must be >= 1")]
    PolePairs,
    #[error("saturation slope at origin {slope} does not match lm0 = {lm0}")]
    SaturationSlope { slope: f64, lm0: f64 },
    #[error("unknown saturation shape `{0}` (expected `arctan` or `linear`)")]
    UnknownShape(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rated {
    /// Mechanical speed, rad/s.
    pub omega_m_n: f64,
    pub torque_n: f64,
    /// Phase-voltage amplitude, V.
    pub u_hat_n: f64,
    /// Phase-current amplitude, A.
    pub i_hat_n: f64,
    pub psi_r_n: f64,
}

impl Rated {
    pub fn power(&self) -> f64 {
        self.omega_m_n * self.torque_n
    }
}

/// Magnetizing curve `|ψ_m| = f(|i_m|)`, applied isotropically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SaturationCurve {
    /// `ψ_sat·(2/π)·atan(i/i_knee)`, slope `ψ_sat·(2/π)/i_knee` at the origin.
    Arctan { psi_sat: f64, i_knee: f64 },
    /// Unsaturated, `ψ = lm0·i`.
    Linear,
}

impl SaturationCurve {
    /// Arctan curve whose origin slope equals `lm0`.
    pub fn arctan_for(lm0: f64, i_knee: f64) -> Self {
        SaturationCurve::Arctan { psi_sat: lm0 * i_knee * PI / 2.0, i_knee }
    }
}

/// Core-loss resistance `R_c(ω) = rc0·(omega_ref / max(|ω|, omega_floor))^speed_exponent`.
/// `rc0 = inf` removes the branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreLossModel {
    pub rc0: f64,
    pub speed_exponent: f64,
    pub omega_ref: f64,
    pub omega_floor: f64,
}

impl CoreLossModel {
    pub fn none() -> Self {
        CoreLossModel { rc0: f64::INFINITY, speed_exponent: 1.0, omega_ref: 1.0, omega_floor: 1.0 }
    }

    pub fn rc(&self, omega: f64) -> f64 {
        self.rc0 * (self.omega_ref / omega.abs().max(self.omega_floor)).powf(self.speed_exponent)
    }

    /// Branch conductance `ω/R_c(ω)` and its derivative with respect to ω.
    pub fn g(&self, omega: f64) -> (f64, f64) {
        if self.rc0.is_infinite() {
            return (0.0, 0.0);
        }
        let p = self.speed_exponent;
        let scale = 1.0 / (self.rc0 * self.omega_ref.powf(p));
        let w = omega.abs();
        if w > self.omega_floor {
            let wp = w.powf(p);
            (omega * wp * scale, (1.0 + p) * wp * scale)
        } else {
            let fp = self.omega_floor.powf(p);
            (omega * fp * scale, fp * scale)
        }
    }
}

/// `τ_f(ω) = -(b_visc·ω + c_coul·sign ω)` with `sign(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionModel {
    pub b_visc: f64,
    pub c_coul: f64,
}

impl FrictionModel {
    pub fn torque(&self, omega_m: f64) -> f64 {
        let s = if omega_m > 0.0 {
            1.0
        } else if omega_m < 0.0 {
            -1.0
        } else {
            0.0
        };
        -(self.b_visc * omega_m + self.c_coul * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParams {
    pub rs: f64,
    pub rr: f64,
    pub lm0: f64,
    pub lsig_s: f64,
    pub lsig_r: f64,
    pub np: u32,
    pub theta_m: f64,
    pub rated: Rated,
    pub saturation: SaturationCurve,
    pub core_loss: CoreLossModel,
    pub friction: FrictionModel,
    pub temperature_scale_rs: f64,
    pub temperature_scale_rr: f64,
}

impl Default for MachineParams {
    fn default() -> Self {
        let lm0 = 0.34;
        MachineParams {
            rs: 2.3,
            rr: 1.55,
            lm0,
            lsig_s: 16.5e-3,
            lsig_r: 16.5e-3,
            np: 1,
            theta_m: 9.56e-3,
            rated: Rated {
                omega_m_n: 298.4,
                torque_n: 10.05,
                u_hat_n: 327.0,
                i_hat_n: 8.1,
                psi_r_n: 1.2,
            },
            saturation: SaturationCurve::arctan_for(lm0, 4.0),
            core_loss: CoreLossModel { rc0: 2000.0, speed_exponent: 1.0, omega_ref: 298.4, omega_floor: 1.0 },
            friction: FrictionModel { b_visc: 2e-3, c_coul: 0.05 },
            temperature_scale_rs: 1.0,
            temperature_scale_rr: 1.0,
        }
    }
}

impl MachineParams {
    /// Same machine with linear magnetics and no core branch.
    pub fn linear_lossless(&self) -> Self {
        MachineParams { saturation: SaturationCurve::Linear, core_loss: CoreLossModel::none(), ..*self }
    }

    pub fn rs_eff(&self) -> f64 {
        self.rs * self.temperature_scale_rs
    }
    pub fn rr_eff(&self) -> f64 {
        self.rr * self.temperature_scale_rr
    }
    pub fn npf(&self) -> f64 {
        self.np as f64
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("rs", self.rs),
            ("rr", self.rr),
            ("lm0", self.lm0),
            ("lsig_s", self.lsig_s),
            ("lsig_r", self.lsig_r),
            ("theta_m", self.theta_m),
            ("omega_m_n", self.rated.omega_m_n),
            ("torque_n", self.rated.torque_n),
            ("u_hat_n", self.rated.u_hat_n),
            ("i_hat_n", self.rated.i_hat_n),
            ("psi_r_n", self.rated.psi_r_n),
            ("rc0", self.core_loss.rc0),
            ("core_omega_ref", self.core_loss.omega_ref),
            ("core_omega_floor", self.core_loss.omega_floor),
        ] {
            if !(v > 0.0) {
                return Err(ParamError::NotPositive(name, v));
            }
        }
        for (name, v) in [
            ("b_visc", self.friction.b_visc),
            ("c_coul", self.friction.c_coul),
            ("core_speed_exponent", self.core_loss.speed_exponent),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ParamError::Negative(name, v));
            }
        }
        for (name, v) in [("temperature_scale_rs", self.temperature_scale_rs), ("temperature_scale_rr", self.temperature_scale_rr)] {
            if !(0.5..=2.0).contains(&v) {
                return Err(ParamError::TemperatureScale(name, v));
            }
        }
        if self.np < 1 {
            return Err(ParamError::PolePairs);
        }
        if let SaturationCurve::Arctan { psi_sat, i_knee } = self.saturation {
            if !(psi_sat > 0.0) {
                return Err(ParamError::NotPositive("psi_sat", psi_sat));
            }
            if !(i_knee > 0.0) {
                return Err(ParamError::NotPositive("i_knee", i_knee));
            }
            let slope = psi_sat * FRAC_2_PI / i_knee;
            if ((slope - self.lm0) / self.lm0).abs() > 1e-9 {
                return Err(ParamError::SaturationSlope { slope, lm0: self.lm0 });
            }
        }
        Ok(())
    }

    /// `|ψ_m|` for a magnetizing current magnitude `i ≥ 0`.
    pub fn psi_of_i(&self, i: f64) -> f64 {
        match self.saturation {
            SaturationCurve::Arctan { psi_sat, i_knee } => psi_sat * FRAC_2_PI * (i / i_knee).atan(),
            SaturationCurve::Linear => self.lm0 * i,
        }
    }

    /// `d|ψ_m|/d|i_m|`.
    pub fn dpsi_di(&self, i: f64) -> f64 {
        match self.saturation {
            SaturationCurve::Arctan { psi_sat, i_knee } => {
                let x = i / i_knee;
                psi_sat * FRAC_2_PI / (i_knee * (1.0 + x * x))
            }
            SaturationCurve::Linear => self.lm0,
        }
    }

    /// Inverse magnetizing curve; `None` at or beyond the asymptote.
    pub fn i_of_psi(&self, psi: f64) -> Option<f64> {
        match self.saturation {
            SaturationCurve::Arctan { psi_sat, i_knee } => {
                if psi.abs() >= psi_sat {
                    return None;
                }
                Some(i_knee * (PI * psi / (2.0 * psi_sat)).tan())
            }
            SaturationCurve::Linear => Some(psi / self.lm0),
        }
    }

    /// Per-phase-pair magnetic energy `∫ i dψ` stored in the main field at `|ψ_m| = psi`.
    pub fn magnetizing_energy(&self, psi: f64) -> f64 {
        match self.saturation {
            SaturationCurve::Arctan { psi_sat, i_knee } => {
                -i_knee * 2.0 * psi_sat / PI * (PI * psi / (2.0 * psi_sat)).cos().ln()
            }
            SaturationCurve::Linear => psi * psi / (2.0 * self.lm0),
        }
    }

    /// Vector magnetizing curve and its Jacobian `∂ψ_m/∂i_m`.
    pub fn flux_of_current(&self, i_m: V2) -> (V2, M2) {
        let r = i_m.norm();
        if r < 1e-12 {
            let s = self.dpsi_di(0.0);
            return (i_m * s, M2::diag(s));
        }
        let psi = self.psi_of_i(r);
        let n = i_m * (1.0 / r);
        let chord = psi / r;
        let slope = self.dpsi_di(r);
        let f = M2::diag(chord) + M2::outer(n, n).scale(slope - chord);
        (n * psi, f)
    }

    /// Controller-side linear parameters that match this machine's
    /// unsaturated nameplate data.
    pub fn lr0(&self) -> f64 {
        self.lm0 + self.lsig_r
    }
    pub fn ls0(&self) -> f64 {
        self.lm0 + self.lsig_s
    }

    pub fn from_toml(text: &str) -> Result<Self, ParamError> {
        let f: MachineParamsFile = toml::from_str(text).map_err(|e| ParamError::Parse(e.to_string()))?;
        let p = f.into_params()?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&MachineParamsFile::from(self)).expect("flat params always serialize")
    }

    /// `key = value` pairs in file order, for log headers.
    pub fn snapshot(&self) -> Vec<(String, String)> {
        flat_pairs(&self.to_toml())
    }
}

pub(crate) fn flat_pairs(toml_text: &str) -> Vec<(String, String)> {
    toml_text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().trim_matches('"').to_string()))
        .collect()
}

/// On-disk layout: flat keys, SI units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineParamsFile {
    pub rs: f64,
    pub rr: f64,
    pub lm0: f64,
    pub lsig_s: f64,
    pub lsig_r: f64,
    pub np: u32,
    pub theta_m: f64,
    pub omega_m_n: f64,
    pub torque_n: f64,
    pub u_hat_n: f64,
    pub i_hat_n: f64,
    pub psi_r_n: f64,
    /// `arctan` or `linear`.
    pub saturation: String,
    /// Knee current of the arctan curve; `psi_sat` follows from the origin slope.
    pub i_knee: f64,
    pub rc0: f64,
    pub core_speed_exponent: f64,
    pub core_omega_ref: f64,
    pub core_omega_floor: f64,
    pub b_visc: f64,
    pub c_coul: f64,
    pub temperature_scale_rs: f64,
    pub temperature_scale_rr: f64,
}

impl Default for MachineParamsFile {
    fn default() -> Self {
        MachineParamsFile::from(&MachineParams::default())
    }
}

impl From<&MachineParams> for MachineParamsFile {
    fn from(p: &MachineParams) -> Self {
        let (shape, i_knee) = match p.saturation {
            SaturationCurve::Arctan { i_knee, .. } => ("arctan", i_knee),
            SaturationCurve::Linear => ("linear", 4.0),
        };
        MachineParamsFile {
            rs: p.rs,
            rr: p.rr,
            lm0: p.lm0,
            lsig_s: p.lsig_s,
            lsig_r: p.lsig_r,
            np: p.np,
            theta_m: p.theta_m,
            omega_m_n: p.rated.omega_m_n,
            torque_n: p.rated.torque_n,
            u_hat_n: p.rated.u_hat_n,
            i_hat_n: p.rated.i_hat_n,
            psi_r_n: p.rated.psi_r_n,
            saturation: shape.to_string(),
            i_knee,
            rc0: p.core_loss.rc0,
            core_speed_exponent: p.core_loss.speed_exponent,
            core_omega_ref: p.core_loss.omega_ref,
            core_omega_floor: p.core_loss.omega_floor,
            b_visc: p.friction.b_visc,
            c_coul: p.friction.c_coul,
            temperature_scale_rs: p.temperature_scale_rs,
            temperature_scale_rr: p.temperature_scale_rr,
        }
    }
}

impl MachineParamsFile {
    pub fn into_params(self) -> Result<MachineParams, ParamError> {
        let saturation = match self.saturation.as_str() {
            "arctan" => SaturationCurve::arctan_for(self.lm0, self.i_knee),
            "linear" => SaturationCurve::Linear,
            other => return Err(ParamError::UnknownShape(other.to_string())),
        };
        Ok(MachineParams {
            rs: self.rs,
            rr: self.rr,
            lm0: self.lm0,
            lsig_s: self.lsig_s,
            lsig_r: self.lsig_r,
            np: self.np,
            theta_m: self.theta_m,
            rated: Rated {
                omega_m_n: self.omega_m_n,
                torque_n: self.torque_n,
                u_hat_n: self.u_hat_n,
                i_hat_n: self.i_hat_n,
                psi_r_n: self.psi_r_n,
            },
            saturation,
            core_loss: CoreLossModel {
                rc0: self.rc0,
                speed_exponent: self.core_speed_exponent,
                omega_ref: self.core_omega_ref,
                omega_floor: self.core_omega_floor,
            },
            friction: FrictionModel { b_visc: self.b_visc, c_coul: self.c_coul },
            temperature_scale_rs: self.temperature_scale_rs,
            temperature_scale_rr: self.temperature_scale_rr,
        })
    }
}
