//! Current-reference lookup tables over (τ*, ω_m).

use std::fmt;
use std::str::FromStr;

use imbench_maps::{MachineMaps, TorqueSource};
use imbench_util::table::{fmt_list, Table, TableError};

use crate::contour::{torque_contour, LutError, Selection};
use crate::fit::{fit_excitation, ExcitationCurve};

pub const LUT_FORMAT: &str = "imbench-lut";
const LUT_VERSION: u32 = 1;

/// Cell flags.
pub const FLAG_CONSTRAINT: u8 = 1;
pub const FLAG_UNREACHABLE: u8 = 2;
pub const FLAG_FIT_FALLBACK: u8 = 4;
pub const FLAG_ETA_FALLBACK: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Constant V/Hz at the nameplate ratio.
    VhzStd,
    /// Constant V/Hz at the ratio that is most efficient at rated torque.
    VhzOpt,
    /// Constant excitation current.
    Cf,
    /// Minimum current magnitude per torque.
    Mtpc,
    /// Maximum efficiency per torque.
    Mept,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::VhzStd, Strategy::VhzOpt, Strategy::Cf, Strategy::Mtpc, Strategy::Mept];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::VhzStd => "vhz_std",
            Strategy::VhzOpt => "vhz_opt",
            Strategy::Cf => "cf",
            Strategy::Mtpc => "mtpc",
            Strategy::Mept => "mept",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutConfig {
    /// Number of torque targets over [−tau_max, tau_max]; odd.
    pub n_torque: usize,
    pub tau_max: f64,
    /// Nameplate V/Hz ratio, V·s.
    pub xi_rated: f64,
    /// Excitation current of the constant-flux strategy, A.
    pub cf_i_sd: f64,
    /// MEPT samples below this fraction of `tau_max` are left out of the fit.
    pub mept_min_frac: f64,
    /// Lowest excitation current; `None` uses the map's smallest i_sd.
    pub i_sd_floor: Option<f64>,
}

impl LutConfig {
    /// Defaults for a machine with rated torque `tau_n` and rated current
    /// amplitude `i_hat_n`.
    pub fn new(tau_n: f64, i_hat_n: f64) -> Self {
        LutConfig { n_torque: 21, tau_max: tau_n, xi_rated: 6.53, cf_i_sd: 0.43 * i_hat_n, mept_min_frac: 0.05, i_sd_floor: None }
    }

    pub fn torque_axis(&self) -> Vec<f64> {
        let n = self.n_torque.max(3) | 1;
        let h = (n - 1) / 2;
        (0..n)
            .map(|i| {
                let s = i as isize - h as isize;
                if s == 0 {
                    0.0
                } else if s.unsigned_abs() == h {
                    self.tau_max.copysign(s as f64)
                } else {
                    self.tau_max * s as f64 / h as f64
                }
            })
            .collect()
    }
}

/// Reference tables for one strategy. Cells are stored speed-major:
/// `i_sd[s·n_tau + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut2d {
    pub strategy: Strategy,
    pub torque_source: TorqueSource,
    pub tau: Vec<f64>,
    pub speeds: Vec<f64>,
    pub i_sd: Vec<f64>,
    pub i_sq: Vec<f64>,
    pub flags: Vec<u8>,
    /// Per speed: arctan parameters (MEPT) or NaN.
    pub fit_a: Vec<f64>,
    pub fit_b: Vec<f64>,
    /// Per speed: V/Hz target (V/Hz strategies) or NaN.
    pub xi_target: Vec<f64>,
}

impl Lut2d {
    pub fn cell(&self, s: usize, t: usize) -> (f64, f64, u8) {
        let i = s * self.tau.len() + t;
        (self.i_sd[i], self.i_sq[i], self.flags[i])
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(LUT_FORMAT, LUT_VERSION);
        t.set("strategy", self.strategy);
        t.set("torque_source", self.torque_source);
        t.set("tau_axis", fmt_list(&self.tau));
        t.set("speed_axis", fmt_list(&self.speeds));
        t.set("fit_a", fmt_list(&self.fit_a));
        t.set("fit_b", fmt_list(&self.fit_b));
        t.set("xi_target", fmt_list(&self.xi_target));
        let nt = self.tau.len();
        let n = nt * self.speeds.len();
        t.push_column("speed", (0..n).map(|i| self.speeds[i / nt]).collect());
        t.push_column("tau", (0..n).map(|i| self.tau[i % nt]).collect());
        t.push_column("i_sd", self.i_sd.clone());
        t.push_column("i_sq", self.i_sq.clone());
        t.push_column("flags", self.flags.iter().map(|&f| f as f64).collect());
        t
    }

    pub fn to_text(&self) -> String {
        self.to_table().to_text()
    }

    pub fn parse(text: &str) -> Result<Self, TableError> {
        let t = Table::parse(text)?;
        t.expect_format(LUT_FORMAT)?;
        let bad = |k: &str, v: &str| TableError::BadValue { key: k.into(), value: v.into() };
        let strategy = t.require("strategy")?.parse().map_err(|_| bad("strategy", t.get("strategy").unwrap_or("")))?;
        let ts = t.require("torque_source")?;
        let torque_source = ts.parse().map_err(|_| bad("torque_source", ts))?;
        Ok(Lut2d {
            strategy,
            torque_source,
            tau: t.get_list("tau_axis")?,
            speeds: t.get_list("speed_axis")?,
            i_sd: t.column("i_sd")?.to_vec(),
            i_sq: t.column("i_sq")?.to_vec(),
            flags: t.column("flags")?.iter().map(|&f| f as u8).collect(),
            fit_a: t.get_list("fit_a")?,
            fit_b: t.get_list("fit_b")?,
            xi_target: t.get_list("xi_target")?,
        })
    }
}

struct SpeedColumn {
    i_sd: Vec<f64>,
    i_sq: Vec<f64>,
    flags: Vec<u8>,
    fit: Option<(f64, f64)>,
    xi: f64,
}

fn sel_or_nan(r: Result<Selection, LutError>) -> (f64, f64, u8) {
    match r {
        Ok(s) => (s.i_sd, s.i_sq, if s.flagged { FLAG_CONSTRAINT } else { 0 }),
        Err(_) => (f64::NAN, f64::NAN, FLAG_UNREACHABLE),
    }
}

/// Positive-torque half for one speed; index 0 is τ* = 0.
fn build_speed(maps: &MachineMaps, strategy: Strategy, cfg: &LutConfig, taus: &[f64]) -> SpeedColumn {
    let floor = cfg.i_sd_floor.unwrap_or(maps.d[maps.positive_start()]);
    let mut xi = f64::NAN;
    let mut fit = None;
    let cells: Vec<(f64, f64, u8)> = match strategy {
        Strategy::VhzStd | Strategy::VhzOpt => {
            xi = match strategy {
                Strategy::VhzStd => cfg.xi_rated,
                _ => rated_optimum_xi(maps, taus).unwrap_or(cfg.xi_rated),
            };
            taus.iter().map(|&t| sel_or_nan(torque_contour(maps, t).map(|c| c.select_vhz(xi)))).collect()
        }
        Strategy::Cf => taus.iter().map(|&t| sel_or_nan(torque_contour(maps, t).map(|c| c.select_cf(cfg.cf_i_sd)))).collect(),
        Strategy::Mtpc => taus.iter().map(|&t| sel_or_nan(torque_contour(maps, t).map(|c| c.select_mtpc()))).collect(),
        Strategy::Mept => {
            let raw: Vec<(f64, f64, u8)> = taus
                .iter()
                .map(|&t| match torque_contour(maps, t) {
                    Ok(c) => match c.select_mept() {
                        Ok(s) => (s.i_sd, s.i_sq, 0),
                        Err(_) => {
                            let s = c.select_mtpc();
                            (s.i_sd, s.i_sq, FLAG_ETA_FALLBACK)
                        }
                    },
                    Err(_) => (f64::NAN, f64::NAN, FLAG_UNREACHABLE),
                })
                .collect();
            let samples: Vec<(f64, f64)> = taus
                .iter()
                .zip(&raw)
                .filter(|(t, r)| **t >= cfg.mept_min_frac * cfg.tau_max && r.2 == 0)
                .flat_map(|(&t, r)| [(t, r.0), (-t, -r.0)])
                .collect();
            match fit_excitation(&samples) {
                Ok(curve) => {
                    if let ExcitationCurve::Arctan(f) = &curve {
                        fit = Some((f.a, f.b));
                    }
                    let extra = if curve.is_fallback() { FLAG_FIT_FALLBACK } else { 0 };
                    taus.iter()
                        .zip(&raw)
                        .map(|(&t, r)| {
                            if r.2 & FLAG_UNREACHABLE != 0 {
                                return *r;
                            }
                            let target = curve.eval(t).max(floor);
                            let c = torque_contour(maps, t).expect("reachable above");
                            let (x, y, clamped) = c.i_sq_at(target);
                            (x, y, extra | if clamped { FLAG_CONSTRAINT } else { 0 })
                        })
                        .collect()
                }
                Err(_) => raw.iter().map(|r| (r.0, r.1, r.2 | FLAG_FIT_FALLBACK)).collect(),
            }
        }
    };
    let mut col = SpeedColumn { i_sd: vec![], i_sq: vec![], flags: vec![], fit, xi };
    for (i, (d, q, f)) in cells.into_iter().enumerate() {
        col.i_sd.push(d);
        col.i_sq.push(if taus[i] == 0.0 && d.is_finite() { 0.0 } else { q });
        col.flags.push(f);
    }
    col
}

/// V/Hz ratio at the most efficient point of the highest reachable torque
/// target (rated torque when reachable).
fn rated_optimum_xi(maps: &MachineMaps, taus: &[f64]) -> Option<f64> {
    taus.iter().rev().filter(|&&t| t > 0.0).find_map(|&t| {
        let c = torque_contour(maps, t).ok()?;
        let s = c.select_mept().ok()?;
        let xs: Vec<f64> = c.pts.iter().map(|p| p.i_sd).collect();
        let k = xs.partition_point(|&x| x <= s.i_sd).clamp(1, xs.len().max(2) - 1);
        if xs.len() < 2 {
            return c.pts[0].xi.is_finite().then_some(c.pts[0].xi);
        }
        let (a, b) = (&c.pts[k - 1], &c.pts[k]);
        let w = (s.i_sd - a.i_sd) / (b.i_sd - a.i_sd);
        let xi = a.xi + w * (b.xi - a.xi);
        xi.is_finite().then_some(xi)
    })
}

/// Tables for one strategy from per-speed maps (any order; sorted by
/// speed in the result). Negative torques mirror the positive half:
/// i_sd even, i_sq odd.
pub fn build_luts(maps: &[MachineMaps], strategy: Strategy, cfg: &LutConfig) -> Result<Lut2d, LutError> {
    if maps.is_empty() {
        return Err(LutError::NoMaps);
    }
    let mut order: Vec<&MachineMaps> = maps.iter().collect();
    order.sort_by(|a, b| a.speed.total_cmp(&b.speed));
    let tau = cfg.torque_axis();
    let h = (tau.len() - 1) / 2;
    let pos = &tau[h..];
    let nt = tau.len();
    let mut lut = Lut2d {
        strategy,
        torque_source: order[0].opts.torque_source,
        tau: tau.clone(),
        speeds: order.iter().map(|m| m.speed).collect(),
        i_sd: vec![f64::NAN; nt * order.len()],
        i_sq: vec![f64::NAN; nt * order.len()],
        flags: vec![0; nt * order.len()],
        fit_a: vec![f64::NAN; order.len()],
        fit_b: vec![f64::NAN; order.len()],
        xi_target: vec![f64::NAN; order.len()],
    };
    for (s, m) in order.iter().enumerate() {
        let col = build_speed(m, strategy, cfg, pos);
        for (i, t) in (h..nt).enumerate() {
            let mirror = 2 * h - t;
            for (idx, sign) in [(t, 1.0), (mirror, -1.0)] {
                let c = s * nt + idx;
                lut.i_sd[c] = col.i_sd[i];
                lut.i_sq[c] = if col.i_sq[i] == 0.0 { 0.0 } else { sign * col.i_sq[i] };
                lut.flags[c] = col.flags[i];
            }
        }
        if let Some((a, b)) = col.fit {
            lut.fit_a[s] = a;
            lut.fit_b[s] = b;
        }
        lut.xi_target[s] = col.xi;
    }
    Ok(lut)
}

/// Result of a table lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutQuery {
    pub i_sd: f64,
    pub i_sq: f64,
    /// The query point was outside the table and has been clamped.
    pub clamped: bool,
}

fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64, bool) {
    let n = axis.len();
    let xc = x.clamp(axis[0], axis[n - 1]);
    let clamped = xc != x;
    if n == 1 {
        return (0, 0, 0.0, clamped);
    }
    let k = axis.partition_point(|&v| v <= xc).clamp(1, n - 1);
    let w = (xc - axis[k - 1]) / (axis[k] - axis[k - 1]);
    (k - 1, k, w, clamped)
}

/// Bilinear interpolation in (τ*, ω_m); node values are reproduced exactly.
pub fn lut_query(lut: &Lut2d, tau: f64, omega_m: f64) -> LutQuery {
    let (t0, t1, wt, ct) = bracket(&lut.tau, tau);
    let (s0, s1, ws, cs) = bracket(&lut.speeds, omega_m);
    let nt = lut.tau.len();
    let blend = |v: &[f64]| {
        let at = |s: usize, t: usize| v[s * nt + t];
        let lerp = |a: f64, b: f64, w: f64| if w == 0.0 { a } else if w == 1.0 { b } else { a + w * (b - a) };
        lerp(lerp(at(s0, t0), at(s0, t1), wt), lerp(at(s1, t0), at(s1, t1), wt), ws)
    };
    LutQuery { i_sd: blend(&lut.i_sd), i_sq: blend(&lut.i_sq), clamped: ct || cs }
}
