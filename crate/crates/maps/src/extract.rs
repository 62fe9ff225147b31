//! Per-point identification formulas.

use imbench_machine::V2;

use crate::reduce::SteadyPoint;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExtractError {
    #[error("no grid node with zero torque current")]
    MissingZeroQ,
    #[error("frame speed {omega_k} rad/s below floor {floor} rad/s")]
    FrequencyTooLow { omega_k: f64, floor: f64 },
    #[error("torque {tau} N·m and slip {slip} rad/s disagree in sign")]
    SignMismatch { tau: f64, slip: f64 },
}

/// Median of `u_sd/i_sd` over the points with zero torque-current
/// reference, where the stator flux has no q component.
pub fn estimate_rs(points: &[SteadyPoint]) -> Result<f64, ExtractError> {
    let mut r: Vec<f64> = points
        .iter()
        .filter(|p| p.i_ref.q() == 0.0 && p.i_s.d() != 0.0)
        .map(|p| p.u_s.d() / p.i_s.d())
        .filter(|v| v.is_finite())
        .collect();
    if r.is_empty() {
        return Err(ExtractError::MissingZeroQ);
    }
    r.sort_by(f64::total_cmp);
    let n = r.len();
    Ok(if n % 2 == 1 { r[n / 2] } else { 0.5 * (r[n / 2 - 1] + r[n / 2]) })
}

/// Stator flux from the steady-state voltage equation,
/// `ψ_s = J⁻¹·(u_s − Rs·i_s)/ω_k`.
pub fn stator_flux(u_s: V2, i_s: V2, omega_k: f64, rs: f64, omega_floor: f64) -> Result<V2, ExtractError> {
    if omega_k.abs() < omega_floor {
        return Err(ExtractError::FrequencyTooLow { omega_k, floor: omega_floor });
    }
    let e = u_s - i_s * rs;
    Ok(V2::new(e.q() / omega_k, -e.d() / omega_k))
}

/// `‖ψ_r‖ = √(Rr/slip · 2/(3·n_p) · τ_e)`. `Ok(None)` when the slip is
/// inside the floor (value to be interpolated); a sign disagreement beyond
/// `tau_tol` is an error.
pub fn rotor_flux_mag(
    tau_e: f64,
    slip: f64,
    rr: f64,
    np: u32,
    slip_floor: f64,
    tau_tol: f64,
) -> Result<Option<f64>, ExtractError> {
    if slip.abs() < slip_floor {
        return Ok(None);
    }
    let r = rr / slip * 2.0 / (3.0 * np as f64) * tau_e;
    if r < 0.0 {
        if tau_e.abs() > tau_tol {
            return Err(ExtractError::SignMismatch { tau: tau_e, slip });
        }
        return Ok(None);
    }
    Ok(Some(r.sqrt()))
}

/// `τ = 3/2·n_p·i_sᵀ·J·ψ` (stator-flux form when `psi` is ψ_s).
pub fn reconstructed_torque(i_s: V2, psi: V2, np: u32) -> f64 {
    1.5 * np as f64 * i_s.tjx(psi)
}

/// Power flows of one node; the core loss is the balance residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSplit {
    pub p_e: f64,
    pub p_m: f64,
    pub p_cu_s: f64,
    pub p_cu_r: f64,
    pub p_fe: f64,
}

pub fn loss_split(u_s: V2, i_s: V2, omega_k: f64, omega_r: f64, omega_m: f64, tau_e: f64, rs: f64, np: u32) -> LossSplit {
    let p_e = 1.5 * i_s.dot(u_s);
    let p_m = tau_e * omega_m;
    let p_cu_s = 1.5 * rs * i_s.norm_sq();
    let p_cu_r = (omega_k - omega_r) * tau_e / np as f64;
    LossSplit { p_e, p_m, p_cu_s, p_cu_r, p_fe: p_e - p_m - p_cu_s - p_cu_r }
}
