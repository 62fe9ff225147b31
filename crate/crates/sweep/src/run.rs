use imbench_control::{ControllerConfig, Rig};
use imbench_machine::{MachineParams, PlantError, V2};
use imbench_util::par::{self, Exec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{schedule, GridError, GridSpec};
use crate::log::{LogHeader, MeasurementLog};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("sweep at {speed} rad/s aborted: {source}")]
    NumericalBlowup {
        speed: f64,
        source: PlantError,
        /// Rows recorded before the failure, flagged invalid.
        partial: Box<MeasurementLog>,
    },
}

/// Simulation knobs that are not part of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// RK4 sub-steps of the plant per control sample.
    pub substeps: usize,
    /// Record plant ground truth alongside the measurements.
    pub truth: bool,
    /// Integrate a per-window energy balance of the plant.
    pub audit: bool,
    /// Standard deviation of additive torque-sensor noise, N·m.
    pub torque_noise_std: f64,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { substeps: 4, truth: false, audit: false, torque_noise_std: 0.0, seed: 0 }
    }
}

/// Pre-flux at (i_sd_min, 0) for five rotor time constants, then hold
/// every grid point for `hold_time` while recording at the control rate.
/// The speed is held ideally by the load machine.
pub fn run_sweep(
    speed: f64,
    spec: &GridSpec,
    plant: &MachineParams,
    cfg: &ControllerConfig,
    opts: &SweepOptions,
) -> Result<MeasurementLog, SweepError> {
    run_sweep_indexed(speed, 0, spec, plant, cfg, opts)
}

fn run_sweep_indexed(
    speed: f64,
    stream: u64,
    spec: &GridSpec,
    plant: &MachineParams,
    cfg: &ControllerConfig,
    opts: &SweepOptions,
) -> Result<MeasurementLog, SweepError> {
    spec.validate_for(cfg)?;
    let points = schedule(spec)?;
    let win = spec.window_len(cfg.f_s);
    let header = LogHeader {
        speed,
        f_s: cfg.f_s,
        grid: spec.clone(),
        seed: opts.seed,
        torque_noise_std: opts.torque_noise_std,
        substeps: opts.substeps,
        valid: true,
        note: String::new(),
        audit_max_residual: None,
        params: plant.snapshot(),
        controller: cfg.snapshot(),
    };
    let mut log = MeasurementLog::new(header, opts.truth).with_capacity(win * points.len());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let noise = (opts.torque_noise_std > 0.0)
        .then(|| Normal::new(0.0, opts.torque_noise_std).expect("finite positive std"));

    let abort = |mut log: MeasurementLog, e: PlantError| {
        log.header.valid = false;
        log.header.note = e.to_string();
        SweepError::NumericalBlowup { speed, source: e, partial: Box::new(log) }
    };

    let mut rig = Rig::new(*plant, *cfg, speed, opts.substeps);
    let pre = (5.0 * cfg.model.tr() * cfg.f_s).ceil() as usize;
    if let Err(e) = rig.run(V2::new(spec.i_sd_min, 0.0), pre) {
        return Err(abort(log, e));
    }
    rig.n = 0;

    let mut worst: Option<f64> = None;
    let mut row = vec![0.0; log.columns.len()];
    for (idx, p) in points.iter().enumerate() {
        let refs = V2::new(p.i_sd, p.i_sq);
        let e0 = if opts.audit {
            rig.ledger = Some(Default::default());
            match rig.stored_energy() {
                Ok(e) => Some(e),
                Err(e) => return Err(abort(log, e)),
            }
        } else {
            None
        };
        for _ in 0..win {
            let s = match rig.step(refs) {
                Ok(s) => s,
                Err(e) => return Err(abort(log, e)),
            };
            let tau_f = plant.friction.torque(s.omega_m);
            let mut tau = s.tau_e + tau_f;
            if let Some(n) = &noise {
                tau += n.sample(&mut rng);
            }
            row[..16].copy_from_slice(&[
                s.t,
                idx as f64,
                p.j as f64,
                p.k as f64,
                refs.x,
                refs.y,
                s.u_cmd.x,
                s.u_cmd.y,
                s.i_dq.x,
                s.i_dq.y,
                s.psi_r_hat,
                s.omega_k,
                s.omega_m,
                s.theta_k,
                tau,
                s.saturated as u8 as f64,
            ]);
            if opts.truth {
                row[16..].copy_from_slice(&[s.psi_s_true.x, s.psi_s_true.y, s.psi_r_true.x, s.psi_r_true.y, s.tau_e]);
            }
            log.push_row(&row);
        }
        if let (Some(e0), Some(ledger)) = (e0, rig.ledger.take()) {
            let e1 = match rig.stored_energy() {
                Ok(e) => e,
                Err(e) => return Err(abort(log, e)),
            };
            let r = ledger.relative_residual(e1 - e0);
            worst = Some(worst.map_or(r, |w: f64| w.max(r)));
        }
    }
    log.header.audit_max_residual = worst;
    Ok(log)
}

/// One sweep per configured speed; failures are reported per speed and do
/// not stop the other sweeps.
pub fn run_campaign(
    spec: &GridSpec,
    plant: &MachineParams,
    cfg: &ControllerConfig,
    opts: &SweepOptions,
    exec: Exec,
) -> Vec<Result<MeasurementLog, SweepError>> {
    let jobs: Vec<(usize, f64)> = spec.speeds.iter().copied().enumerate().collect();
    par::map(exec, &jobs, |&(i, w)| run_sweep_indexed(w, i as u64, spec, plant, cfg, opts))
}
