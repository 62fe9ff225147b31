//! Controller + plant co-simulation at the control rate, with the plant
//! integrated by RK4 over a fixed number of sub-steps per sample.

use imbench_machine::plant::{stored_energy, torque_from_rotor};
use imbench_machine::{
    invert_flux, park, step_rk4, step_rk4_audit, DqVec, EnergyLedger, MachineParams, Mechanics, PlantError,
    PlantState, V2,
};

use crate::config::ControllerConfig;
use crate::law::{control_step, CtrlState, Measurement};

/// Everything observable at one control sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub i_ref: DqVec,
    /// Post-saturation command computed at this sample (applied next interval).
    pub u_cmd: DqVec,
    pub i_dq: DqVec,
    pub psi_r_hat: f64,
    pub omega_k: f64,
    pub omega_m: f64,
    /// Frame angle the measurement was transformed with.
    pub theta_k: f64,
    pub tau_e: f64,
    pub saturated: bool,
    /// Plant stator flux in the estimated frame.
    pub psi_s_true: DqVec,
    pub psi_r_true: DqVec,
}

#[derive(Debug, Clone)]
pub struct Rig {
    pub plant: MachineParams,
    pub cfg: ControllerConfig,
    pub x: PlantState,
    pub ctrl: CtrlState,
    pub mech: Mechanics,
    pub substeps: usize,
    /// Sample counter; time is `n / f_s`.
    pub n: u64,
    pub ledger: Option<EnergyLedger>,
}

impl Rig {
    /// Unexcited machine held at `omega_m` by an ideal load.
    pub fn new(plant: MachineParams, cfg: ControllerConfig, omega_m: f64, substeps: usize) -> Self {
        Rig {
            plant,
            cfg,
            x: PlantState::at_speed(omega_m),
            ctrl: CtrlState::default(),
            mech: Mechanics::SpeedHold,
            substeps: substeps.max(1),
            n: 0,
            ledger: None,
        }
    }

    pub fn with_audit(mut self) -> Self {
        self.ledger = Some(EnergyLedger::default());
        self
    }

    pub fn time(&self) -> f64 {
        self.n as f64 / self.cfg.f_s
    }

    pub fn stored_energy(&self) -> Result<f64, PlantError> {
        Ok(stored_energy(&invert_flux(&self.x, &self.plant)?, &self.plant))
    }

    /// Sample, run the controller and advance the plant one control period.
    pub fn step(&mut self, refs: DqVec) -> Result<Sample, PlantError> {
        let cur = invert_flux(&self.x, &self.plant)?;
        let meas = Measurement { i_s_ab: cur.i_s, omega_m: self.x.omega_m };
        let (u_apply, out, next) = control_step(meas, refs, &self.ctrl, &self.cfg);
        let sample = Sample {
            t: self.time(),
            i_ref: refs,
            u_cmd: out.u_ref_dq_sat,
            i_dq: out.i_s_dq,
            psi_r_hat: next.psi_r_hat,
            omega_k: out.omega_k,
            omega_m: self.x.omega_m,
            theta_k: out.theta_meas,
            tau_e: torque_from_rotor(cur.i_r, self.x.psi_r, self.plant.npf()),
            saturated: out.saturated,
            psi_s_true: park(self.x.psi_s, out.theta_meas),
            psi_r_true: park(self.x.psi_r, out.theta_meas),
        };
        self.ctrl = next;
        let h = self.cfg.dt() / self.substeps as f64;
        for _ in 0..self.substeps {
            self.x = match self.ledger.as_mut() {
                Some(l) => step_rk4_audit(&self.x, u_apply, self.mech, h, &self.plant, l)?,
                None => step_rk4(&self.x, u_apply, self.mech, h, &self.plant)?,
            };
        }
        self.n += 1;
        Ok(sample)
    }

    /// Hold `refs` for `n` samples, returning the last sample.
    pub fn run(&mut self, refs: DqVec, n: usize) -> Result<Sample, PlantError> {
        let mut last = None;
        for _ in 0..n {
            last = Some(self.step(refs)?);
        }
        Ok(last.unwrap_or_else(|| self.peek(refs)))
    }

    fn peek(&self, refs: DqVec) -> Sample {
        let mut probe = self.clone();
        probe.ledger = None;
        probe.step(refs).expect("probe of a valid state")
    }
}

/// Rotation of `v` expressed as an angle, for alignment checks.
pub fn angle_of(v: V2) -> f64 {
    v.y.atan2(v.x)
}
