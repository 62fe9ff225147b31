//! From sample logs to one steady-state point per grid window.

use imbench_machine::V2;
use imbench_sweep::{Col, MeasurementLog};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReduceError {
    #[error("filter time constant must be positive, got {0}")]
    BadTimeConstant(f64),
    #[error("crop fraction {0} outside [0.25, 0.9]")]
    BadCrop(f64),
    #[error("window {window} keeps only {kept} samples")]
    WindowTooShort { window: usize, kept: usize },
    #[error("log is empty or marked invalid")]
    InvalidLog,
}

/// Columns that carry measured signals (references, indices, flags and the
/// wrapped frame angle are left alone).
const ANALOG: [Col; 14] = [
    Col::UsdCmd,
    Col::UsqCmd,
    Col::Isd,
    Col::Isq,
    Col::PsiRHat,
    Col::OmegaK,
    Col::OmegaM,
    Col::TauShaft,
    Col::PsiSdTrue,
    Col::PsiSqTrue,
    Col::PsiRdTrue,
    Col::PsiRqTrue,
    Col::TauETrue,
    Col::Sat,
];

/// Smoothing factor of the first-order filter `y⁺ = y + α·(x − y)`.
pub fn lowpass_alpha(dt: f64, t_f: f64) -> f64 {
    dt / (t_f + dt)
}

/// First-order low-pass over the whole record, seeded with the first
/// sample. The saturation flag is averaged too so it reads as a duty.
pub fn lowpass(log: &MeasurementLog, t_f: f64) -> Result<MeasurementLog, ReduceError> {
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(ReduceError::BadTimeConstant(t_f));
    }
    let a = lowpass_alpha(1.0 / log.header.f_s, t_f);
    let mut out = log.clone();
    for c in ANALOG {
        if !out.has(c) {
            continue;
        }
        let col = out.col_mut(c);
        if let Some(&first) = col.first() {
            let mut y = first;
            for x in col.iter_mut() {
                y += a * (*x - y);
                *x = y;
            }
        }
    }
    Ok(out)
}

/// Window means. The voltage is taken one row earlier than the other
/// signals: the command logged at a sample is applied over the next period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyPoint {
    pub j: usize,
    pub k: usize,
    pub i_ref: V2,
    pub i_s: V2,
    pub u_s: V2,
    pub psi_r_hat: f64,
    pub omega_k: f64,
    pub omega_r: f64,
    pub omega_m: f64,
    pub tau_shaft: f64,
    /// Fraction of retained samples with the voltage limit active.
    pub sat_duty: f64,
    pub truth: Option<Truth>,
}

/// Plant ground truth averaged over the same samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub psi_s: V2,
    pub psi_r: V2,
    pub tau_e: f64,
}

/// One point per hold window, averaging the trailing `1 − crop_fraction`
/// of the window.
pub fn window_reduce(log: &MeasurementLog, crop_fraction: f64, np: u32) -> Result<Vec<SteadyPoint>, ReduceError> {
    if !(0.25..=0.9).contains(&crop_fraction) {
        return Err(ReduceError::BadCrop(crop_fraction));
    }
    let g = &log.header.grid;
    let win = g.window_len(log.header.f_s);
    let n_win = g.n_points();
    if !log.header.valid || win == 0 || log.n_rows() != win * n_win {
        return Err(ReduceError::InvalidLog);
    }
    let start = (win as f64 * crop_fraction).round() as usize;
    let kept = win - start;
    if kept < 10 {
        return Err(ReduceError::WindowTooShort { window: 0, kept });
    }
    let truth = Col::TRUTH.iter().all(|&c| log.has(c));
    let mean = |c: Col, lo: usize, hi: usize| log.col(c)[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
    let mut out = Vec::with_capacity(n_win);
    for w in 0..n_win {
        let (lo, hi) = (w * win + start, (w + 1) * win);
        let u = V2::new(mean(Col::UsdCmd, lo - 1, hi - 1), mean(Col::UsqCmd, lo - 1, hi - 1));
        let omega_m = mean(Col::OmegaM, lo, hi);
        out.push(SteadyPoint {
            j: log.col(Col::J)[lo] as usize,
            k: log.col(Col::K)[lo] as usize,
            i_ref: V2::new(log.col(Col::IsdRef)[lo], log.col(Col::IsqRef)[lo]),
            i_s: V2::new(mean(Col::Isd, lo, hi), mean(Col::Isq, lo, hi)),
            u_s: u,
            psi_r_hat: mean(Col::PsiRHat, lo, hi),
            omega_k: mean(Col::OmegaK, lo, hi),
            omega_r: np as f64 * omega_m,
            omega_m,
            tau_shaft: mean(Col::TauShaft, lo, hi),
            sat_duty: mean(Col::Sat, lo, hi),
            truth: truth.then(|| Truth {
                psi_s: V2::new(mean(Col::PsiSdTrue, lo, hi), mean(Col::PsiSqTrue, lo, hi)),
                psi_r: V2::new(mean(Col::PsiRdTrue, lo, hi), mean(Col::PsiRqTrue, lo, hi)),
                tau_e: mean(Col::TauETrue, lo, hi),
            }),
        });
    }
    Ok(out)
}
