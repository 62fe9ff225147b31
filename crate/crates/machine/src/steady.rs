//! Sinusoidal steady state of the plant, solved directly in a frame rotating
//! at the synchronous frequency `ω_k`. Used as an independent reference for
//! the time-domain simulation and by the brute-force optimum search.

use std::f64::consts::TAU;

use crate::params::MachineParams;
use crate::plant::{torque_from_rotor, PlantError};
use crate::vec2::{M2, V2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Terminal current in the chosen frame.
    pub i_s: V2,
    pub i_r: V2,
    pub i_m: V2,
    pub i_c: V2,
    pub psi_s: V2,
    pub psi_r: V2,
    pub psi_m: V2,
    pub u: V2,
    pub omega_k: f64,
    pub omega_m: f64,
    pub tau_e: f64,
    /// Core-loss torque `3/2·n_p·i_cᵀ·J·ψ_m`.
    pub tau_c: f64,
    pub p_e: f64,
    pub p_m: f64,
    pub p_cu_s: f64,
    pub p_cu_r: f64,
    pub p_fe: f64,
    pub eta: Option<f64>,
    pub xi: f64,
}

/// `η = p_m/p_e` when motoring (`p_e ≥ 0`), `p_e/p_m` otherwise; `None`
/// inside the deadband where both powers are below `p_floor`.
pub fn efficiency(p_e: f64, p_m: f64, p_floor: f64) -> Option<f64> {
    if p_e.abs() < p_floor && p_m.abs() < p_floor {
        return None;
    }
    let eta = if p_e >= 0.0 { p_m / p_e } else { p_e / p_m };
    eta.is_finite().then_some(eta)
}

/// `ξ = 2π·|u|/|ω_k|` (V·s).
pub fn vhz_ratio(u_norm: f64, omega_k: f64) -> f64 {
    TAU * u_norm / omega_k.abs()
}

/// Steady state for a stator current `i_s` held in a frame rotating at
/// `omega_k`, with the shaft at `omega_m`.
pub fn steady_state(p: &MachineParams, i_s: V2, omega_k: f64, omega_m: f64) -> Result<SteadyState, PlantError> {
    let rr = p.rr_eff();
    let lsr = p.lsig_r;
    let slip = omega_k - p.npf() * omega_m;
    let (g, _) = p.core_loss.g(omega_k);

    // Linear, lossless guess: (Rr·I + s·Lr·J)·i_m = (Rr·I + s·lsig_r·J)·i_s.
    let lhs = M2::diag(rr) + M2::J.scale(slip * p.lr0());
    let rhs = (M2::diag(rr) + M2::J.scale(slip * lsr)).mul_v(i_s);
    let mut i_m = lhs.solve(rhs).unwrap_or(i_s);

    let resid = |i_m: V2| {
        let (psi_m, f) = p.flux_of_current(i_m);
        let i_c = psi_m.j() * g;
        let i_r = i_m + i_c - i_s;
        let psi_r = i_r * lsr + psi_m;
        (i_r * rr + psi_r.j() * slip, f)
    };
    let scale = rr * (i_s.norm() + 1.0);
    let mut converged = false;
    for _ in 0..100 {
        let (r, f) = resid(i_m);
        let rn = r.norm();
        if rn <= 1e-13 * scale {
            converged = true;
            break;
        }
        let a = M2::I + M2::J.mul_m(f).scale(g);
        let jac = a.scale(rr) + M2::J.mul_m(a.scale(lsr) + f).scale(slip);
        let step = jac.solve(-r).ok_or(PlantError::NonConvergence { residual: rn })?;
        let mut lambda = 1.0;
        let mut next = i_m + step;
        for _ in 0..30 {
            if resid(next).0.norm() < rn {
                break;
            }
            lambda *= 0.5;
            next = i_m + step * lambda;
        }
        if (next - i_m).norm() <= 1e-15 * (1.0 + i_m.norm()) {
            i_m = next;
            converged = resid(i_m).0.norm() <= 1e-9 * scale;
            break;
        }
        i_m = next;
    }
    if !converged {
        return Err(PlantError::NonConvergence { residual: resid(i_m).0.norm() });
    }

    let (psi_m, _) = p.flux_of_current(i_m);
    let i_c = psi_m.j() * g;
    let i_r = i_m + i_c - i_s;
    let psi_r = i_r * lsr + psi_m;
    let psi_s = i_s * p.lsig_s + psi_m;
    let u = i_s * p.rs_eff() + psi_s.j() * omega_k;
    let np = p.npf();
    let tau_e = torque_from_rotor(i_r, psi_r, np);
    let p_e = 1.5 * u.dot(i_s);
    let p_m = tau_e * omega_m;
    Ok(SteadyState {
        i_s,
        i_r,
        i_m,
        i_c,
        psi_s,
        psi_r,
        psi_m,
        u,
        omega_k,
        omega_m,
        tau_e,
        tau_c: 1.5 * np * i_c.tjx(psi_m),
        p_e,
        p_m,
        p_cu_s: 1.5 * p.rs_eff() * i_s.norm_sq(),
        p_cu_r: 1.5 * rr * i_r.norm_sq(),
        p_fe: 1.5 * omega_k * g * psi_m.norm_sq(),
        eta: efficiency(p_e, p_m, 0.01 * p.rated.power()),
        xi: vhz_ratio(u.norm(), omega_k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_branches() {
        assert_eq!(efficiency(500.0, 0.0, 30.0), Some(0.0));
        assert!((efficiency(500.0, 425.0, 30.0).unwrap() - 0.85).abs() < 1e-15);
        assert!((efficiency(-425.0, -500.0, 30.0).unwrap() - 0.85).abs() < 1e-15);
        assert_eq!(efficiency(10.0, 5.0, 30.0), None);
    }

    #[test]
    fn rated_vhz_ratio() {
        let xi = vhz_ratio(327.0, TAU * 50.0);
        assert!((xi - 6.54).abs() < 1e-12);
        assert!((vhz_ratio(654.0, TAU * 50.0) - 2.0 * xi).abs() < 1e-12);
    }

    #[test]
    fn power_balance_and_torque_forms() {
        let p = MachineParams::default();
        for (d, q, w) in [(3.0, 5.0, 150.0), (1.2, -6.0, 268.56), (4.05, 8.1, 89.52)] {
            let tr = p.lr0() / p.rr;
            let wk = w + q / (tr * d);
            let s = steady_state(&p, V2::new(d, q), wk, w).unwrap();
            let bal = s.p_e - s.p_m - s.p_cu_s - s.p_cu_r - s.p_fe;
            assert!(bal.abs() < 1e-9 * s.p_e.abs().max(1.0), "{bal}");
            let alt = 1.5 * s.i_s.tjx(s.psi_s) - s.tau_c;
            assert!((alt - s.tau_e).abs() < 1e-9);
            // rotor copper loss equals slip power
            assert!((s.p_cu_r - (wk - w) * s.tau_e).abs() < 1e-9 * s.p_cu_r.max(1.0));
        }
    }

    #[test]
    fn zero_slip_has_no_rotor_current() {
        let p = MachineParams::default();
        let s = steady_state(&p, V2::new(2.0, 0.0), 150.0, 150.0).unwrap();
        assert!(s.i_r.norm() < 1e-12);
        assert!(s.tau_e.abs() < 1e-12);
        assert!(s.p_fe > 0.0);
    }
}
