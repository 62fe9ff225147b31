//! Continuous-time plant in the stationary frame.
//!
//! Equivalent circuit: stator leakage `lsig_s` carries the terminal current
//! `i_s`, rotor leakage carries `i_r`, and the air-gap node splits into the
//! magnetizing current `i_m` and the core-branch current `i_c`:
//!
//! ```text
//! ψ_s = lsig_s·i_s + ψ_m(i_m)      ψ_r = lsig_r·i_r + ψ_m(i_m)
//! i_s + i_r = i_m + i_c            i_c = g(ω_e)·J·ψ_m
//! ```
//!
//! `ω_e` is the instantaneous rotation rate of the rotor flux, which equals
//! the synchronous frequency in steady state.

use crate::params::MachineParams;
use crate::vec2::{M2, V2};

/// Regularizes the rotor-flux rotation rate near zero flux (Wb²).
const PSI_R_EPS2: f64 = 1e-8;
const MAX_NEWTON: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("flux inversion did not converge (residual {residual:e} A)")]
    NonConvergence { residual: f64 },
    #[error("state left sanity bounds: {0}")]
    NumericalBlowup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub psi_s: V2,
    pub psi_r: V2,
    pub omega_m: f64,
    pub theta_m: f64,
}

impl PlantState {
    pub fn at_speed(omega_m: f64) -> Self {
        PlantState { omega_m, ..Default::default() }
    }

    fn axpy(&self, k: f64, d: &PlantState) -> PlantState {
        PlantState {
            psi_s: self.psi_s + d.psi_s * k,
            psi_r: self.psi_r + d.psi_r * k,
            omega_m: self.omega_m + d.omega_m * k,
            theta_m: self.theta_m + d.theta_m * k,
        }
    }
}

/// Load side of the shaft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanics {
    /// Ideal speed source: `ω_m` never changes.
    SpeedHold,
    /// Free shaft with an external load torque.
    Free { tau_load: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Currents {
    /// Terminal (stator) current.
    pub i_s: V2,
    pub i_r: V2,
    pub i_m: V2,
    pub i_c: V2,
    pub psi_m: V2,
    /// Frequency driving the core branch (rad/s, electrical).
    pub omega_e: f64,
    pub(crate) f_jac: M2,
    pub(crate) h_jac: M2,
    pub(crate) g: f64,
    pub(crate) dg: f64,
    pub(crate) d: f64,
}

fn psi_r_denominator(psi_r: V2) -> f64 {
    psi_r.norm_sq() + PSI_R_EPS2
}

/// Core-branch current `i_c = ω·J·ψ_m / R_c(ω)`.
pub fn core_branch(psi_m: V2, omega_k: f64, p: &MachineParams) -> V2 {
    psi_m.j() * p.core_loss.g(omega_k).0
}

/// Solve the saturated flux relations for all branch currents.
pub fn invert_flux(st: &PlantState, p: &MachineParams) -> Result<Currents, PlantError> {
    let (lss, lsr) = (p.lsig_s, p.lsig_r);
    let c = 1.0 / lss + 1.0 / lsr;
    let omega_r = p.npf() * st.omega_m;
    let rr = p.rr_eff();
    let d = psi_r_denominator(st.psi_r);
    let b = st.psi_s * (1.0 / lss) + st.psi_r * (1.0 / lsr);

    // Without the core branch i_m ∥ b and |i_m| solves r + c·ψ(r) = |b|.
    // Newton from the linear lower bound approaches the root monotonically.
    let bn = b.norm();
    let mut i_m = if bn > 0.0 {
        let mut r = bn / (1.0 + c * p.lm0);
        for _ in 0..60 {
            let h = r + c * p.psi_of_i(r) - bn;
            let step = h / (1.0 + c * p.dpsi_di(r));
            r -= step;
            if step.abs() <= 1e-15 * r.max(1.0) {
                break;
            }
        }
        b * (r / bn)
    } else {
        V2::ZERO
    };

    let eval = |i_m: V2| {
        let (psi_m, f) = p.flux_of_current(i_m);
        let s = st.psi_r.tjx(psi_m);
        let omega_e = omega_r - rr * s / (lsr * d);
        let (g, dg) = p.core_loss.g(omega_e);
        let jpsi = psi_m.j();
        let i_c = jpsi * g;
        let h = b - psi_m * c - i_c - i_m;
        (h, psi_m, f, omega_e, g, dg, i_c)
    };

    let tol = 1e-11 / lss.min(lsr);
    let mut it = 0;
    loop {
        let (h, psi_m, f, omega_e, g, dg, i_c) = eval(i_m);
        let grad_we = f.mul_v(st.psi_r.j()) * (rr / (lsr * d));
        let dic = M2::outer(psi_m.j(), grad_we).scale(dg) + M2::J.mul_m(f).scale(g);
        let h_jac = M2::diag(-1.0) - f.scale(c) - dic;
        let hn = h.norm();
        if hn <= tol || it >= MAX_NEWTON {
            if hn > tol {
                return Err(PlantError::NonConvergence { residual: hn });
            }
            return Ok(Currents {
                i_s: (st.psi_s - psi_m) * (1.0 / lss),
                i_r: (st.psi_r - psi_m) * (1.0 / lsr),
                i_m,
                i_c,
                psi_m,
                omega_e,
                f_jac: f,
                h_jac,
                g,
                dg,
                d,
            });
        }
        let step = h_jac.solve(-h).ok_or(PlantError::NonConvergence { residual: hn })?;
        let mut lambda = 1.0;
        let mut next = i_m + step;
        for _ in 0..30 {
            if eval(next).0.norm() < hn {
                break;
            }
            lambda *= 0.5;
            next = i_m + step * lambda;
        }
        i_m = next;
        it += 1;
    }
}

/// `τ_e = -3/2·n_p·i_rᵀ·J·ψ_r`.
pub fn torque_from_rotor(i_r: V2, psi_r: V2, np: f64) -> f64 {
    -1.5 * np * i_r.tjx(psi_r)
}

pub fn electromagnetic_torque(st: &PlantState, p: &MachineParams) -> Result<f64, PlantError> {
    let cur = invert_flux(st, p)?;
    Ok(torque_from_rotor(cur.i_r, st.psi_r, p.npf()))
}

/// Instantaneous power flows (W). `p_in` is delivered at the stator terminals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Powers {
    pub p_in: f64,
    pub p_cu_s: f64,
    pub p_cu_r: f64,
    pub p_core: f64,
    /// Air-gap torque times mechanical speed.
    pub p_mech: f64,
}

/// Magnetic energy stored in both leakages and the main field.
pub fn stored_energy(cur: &Currents, p: &MachineParams) -> f64 {
    1.5 * (0.5 * p.lsig_s * cur.i_s.norm_sq()
        + 0.5 * p.lsig_r * cur.i_r.norm_sq()
        + p.magnetizing_energy(cur.psi_m.norm()))
}

/// Time derivative of the state, plus the branch currents at `st`.
pub fn plant_derivative(
    st: &PlantState,
    u_s: V2,
    mech: Mechanics,
    p: &MachineParams,
) -> Result<(PlantState, Currents), PlantError> {
    let cur = invert_flux(st, p)?;
    let omega_r = p.npf() * st.omega_m;
    let dpsi_s = u_s - cur.i_s * p.rs_eff();
    let dpsi_r = st.psi_r.j() * omega_r - cur.i_r * p.rr_eff();
    let domega = match mech {
        Mechanics::SpeedHold => 0.0,
        Mechanics::Free { tau_load } => {
            let tau_e = torque_from_rotor(cur.i_r, st.psi_r, p.npf());
            (tau_e + p.friction.torque(st.omega_m) + tau_load) / p.theta_m
        }
    };
    let d = PlantState { psi_s: dpsi_s, psi_r: dpsi_r, omega_m: domega, theta_m: st.omega_m };
    Ok((d, cur))
}

/// Power flows at a point, given its derivative. The core power is
/// `3/2·i_cᵀ·dψ_m/dt`, with `dψ_m/dt` from implicit differentiation of the
/// node equation, so the balance against stored energy is exact.
pub fn powers(st: &PlantState, d: &PlantState, cur: &Currents, u_s: V2, p: &MachineParams) -> Powers {
    let lsr = p.lsig_r;
    let rr = p.rr_eff();
    let jpsi_m = cur.psi_m.j();
    let s = st.psi_r.tjx(cur.psi_m);
    let grad_we_psi_r = (jpsi_m * (1.0 / cur.d) - st.psi_r * (2.0 * s / (cur.d * cur.d))) * (-rr / lsr);
    let h_psi_s = M2::diag(1.0 / p.lsig_s);
    let h_psi_r = M2::diag(1.0 / lsr) - M2::outer(jpsi_m, grad_we_psi_r).scale(cur.dg);
    let h_omega = jpsi_m * (-cur.dg * p.npf());
    let rhs = h_psi_s.mul_v(d.psi_s) + h_psi_r.mul_v(d.psi_r) + h_omega * d.omega_m;
    let di_m = cur.h_jac.solve(-rhs).unwrap_or(V2::ZERO);
    let dpsi_m = cur.f_jac.mul_v(di_m);
    Powers {
        p_in: 1.5 * u_s.dot(cur.i_s),
        p_cu_s: 1.5 * p.rs_eff() * cur.i_s.norm_sq(),
        p_cu_r: 1.5 * rr * cur.i_r.norm_sq(),
        p_core: 1.5 * cur.i_c.dot(dpsi_m),
        p_mech: torque_from_rotor(cur.i_r, st.psi_r, p.npf()) * st.omega_m,
    }
}

/// Energies accumulated over a run (J).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyLedger {
    pub e_in: f64,
    pub e_cu_s: f64,
    pub e_cu_r: f64,
    pub e_core: f64,
    pub e_mech: f64,
}

impl EnergyLedger {
    fn add(&mut self, pw: &Powers, w: f64) {
        self.e_in += w * pw.p_in;
        self.e_cu_s += w * pw.p_cu_s;
        self.e_cu_r += w * pw.p_cu_r;
        self.e_core += w * pw.p_core;
        self.e_mech += w * pw.p_mech;
    }

    /// `E_in - ΔW - losses - E_mech`, relative to the largest energy flow.
    pub fn relative_residual(&self, delta_stored: f64) -> f64 {
        let res = self.e_in - delta_stored - self.e_cu_s - self.e_cu_r - self.e_core - self.e_mech;
        let scale = [self.e_in, self.e_cu_s, self.e_cu_r, self.e_core, self.e_mech, delta_stored]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            res.abs() / scale
        }
    }
}

fn check_bounds(st: &PlantState, p: &MachineParams) -> Result<(), PlantError> {
    let lim = 3.0 * p.rated.psi_r_n.max(psi_bound(p));
    if !(st.psi_s.is_finite() && st.psi_r.is_finite() && st.omega_m.is_finite()) {
        return Err(PlantError::NumericalBlowup("non-finite state".into()));
    }
    if st.psi_s.norm() > lim || st.psi_r.norm() > lim {
        return Err(PlantError::NumericalBlowup(format!(
            "flux magnitude above {lim:.3} Wb (|ψ_s| = {:.3}, |ψ_r| = {:.3})",
            st.psi_s.norm(),
            st.psi_r.norm()
        )));
    }
    Ok(())
}

fn psi_bound(p: &MachineParams) -> f64 {
    match p.saturation {
        crate::params::SaturationCurve::Arctan { psi_sat, .. } => psi_sat,
        crate::params::SaturationCurve::Linear => p.rated.psi_r_n,
    }
}

fn wrap_angle(th: f64) -> f64 {
    th.rem_euclid(std::f64::consts::TAU)
}

/// One classical RK4 step with the input held constant.
pub fn step_rk4(st: &PlantState, u_s: V2, mech: Mechanics, dt: f64, p: &MachineParams) -> Result<PlantState, PlantError> {
    let (k1, _) = plant_derivative(st, u_s, mech, p)?;
    let (k2, _) = plant_derivative(&st.axpy(0.5 * dt, &k1), u_s, mech, p)?;
    let (k3, _) = plant_derivative(&st.axpy(0.5 * dt, &k2), u_s, mech, p)?;
    let (k4, _) = plant_derivative(&st.axpy(dt, &k3), u_s, mech, p)?;
    finish(st, [&k1, &k2, &k3, &k4], dt, p)
}

/// RK4 step that also integrates the power flows with the same stage
/// weights (the energies are extra states of the same ODE).
pub fn step_rk4_audit(
    st: &PlantState,
    u_s: V2,
    mech: Mechanics,
    dt: f64,
    p: &MachineParams,
    ledger: &mut EnergyLedger,
) -> Result<PlantState, PlantError> {
    let mut stage = |x: &PlantState, w: f64| -> Result<PlantState, PlantError> {
        let (k, cur) = plant_derivative(x, u_s, mech, p)?;
        ledger.add(&powers(x, &k, &cur, u_s, p), w * dt / 6.0);
        Ok(k)
    };
    let k1 = stage(st, 1.0)?;
    let k2 = stage(&st.axpy(0.5 * dt, &k1), 2.0)?;
    let k3 = stage(&st.axpy(0.5 * dt, &k2), 2.0)?;
    let k4 = stage(&st.axpy(dt, &k3), 1.0)?;
    finish(st, [&k1, &k2, &k3, &k4], dt, p)
}

fn finish(st: &PlantState, k: [&PlantState; 4], dt: f64, p: &MachineParams) -> Result<PlantState, PlantError> {
    let w = dt / 6.0;
    let mut next = st.axpy(w, k[0]).axpy(2.0 * w, k[1]).axpy(2.0 * w, k[2]).axpy(w, k[3]);
    next.theta_m = wrap_angle(next.theta_m);
    check_bounds(&next, p)?;
    Ok(next)
}
