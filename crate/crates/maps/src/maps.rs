//! Machine maps over the (i_sd, i_sq) grid and the pipeline producing them.

use std::fmt;
use std::str::FromStr;

use imbench_machine::{efficiency, vhz_ratio, MachineParams, V2};
use imbench_sweep::{build_grid, MeasurementLog};
use imbench_util::par::{self, Exec};
use imbench_util::table::{fmt_list, Table, TableError};

use crate::extract::{
    estimate_rs, loss_split, reconstructed_torque, rotor_flux_mag, stator_flux, ExtractError,
};
use crate::grid2::{nearest, Grid2};
use crate::interp::fill_linear;
use crate::reduce::{lowpass, window_reduce, ReduceError, SteadyPoint};
use crate::smooth::smooth;

pub const MAPS_FORMAT: &str = "imbench-machine-maps";
const MAPS_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("bad option `{0}`")]
    BadOption(String),
}

/// Which torque drives the loss split and everything downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TorqueSource {
    /// Shaft sensor minus the friction torque read at (i_sd_min, 0).
    #[default]
    Measured,
    /// Computed from currents and the identified flux (no torque sensor).
    Reconstructed,
}

/// Flux used by the reconstructed torque.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconForm {
    /// `3/2·n_p·i_sᵀ·J·ψ_s` with ψ_s from the voltage equation.
    #[default]
    StatorFlux,
    /// `3/2·n_p·(Lm/Lr)·ψ̂_r·i_sq` with the estimator's rotor flux.
    RotorFlux,
}

/// Resistance used in the voltage equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RsSource {
    #[default]
    Configured,
    Estimated,
}

macro_rules! text_enum {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = MapError;
            fn from_str(s: &str) -> Result<Self, MapError> {
                match s { $($s => Ok(Self::$v),)* _ => Err(MapError::BadOption(s.to_string())) }
            }
        }
    };
}
text_enum!(TorqueSource { Measured => "measured", Reconstructed => "reconstructed" });
text_enum!(ReconForm { StatorFlux => "stator-flux", RotorFlux => "rotor-flux" });
text_enum!(RsSource { Configured => "configured", Estimated => "estimated" });

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptions {
    /// Low-pass time constant, s.
    pub t_f: f64,
    /// Fraction of each window discarded as transient.
    pub crop_fraction: f64,
    pub rs_source: RsSource,
    /// Scale Rr by the same ratio as the Rs correction.
    pub scale_rr: bool,
    pub torque_source: TorqueSource,
    pub recon_form: ReconForm,
    /// Frame-speed floor for the voltage equation and ξ, rad/s.
    pub omega_floor: f64,
    /// Slip floor for the rotor-flux formula, rad/s.
    pub slip_floor: f64,
    /// Efficiency deadband as a fraction of rated power.
    pub p_floor_frac: f64,
    /// Nodes whose mean current misses the reference by more than this
    /// (A) are discarded, as are nodes held on the voltage limit.
    pub track_tol: f64,
    /// Smoothing span; `None` disables smoothing.
    pub smooth_span: Option<f64>,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            t_f: 0.025,
            crop_fraction: 0.5,
            rs_source: RsSource::Configured,
            scale_rr: false,
            torque_source: TorqueSource::Measured,
            recon_form: ReconForm::StatorFlux,
            omega_floor: 1.0,
            slip_floor: 0.05,
            p_floor_frac: 0.01,
            track_tol: 0.05,
            smooth_span: None,
        }
    }
}

/// Layer names in file order.
pub const LAYERS: [&str; 19] = [
    "valid", "i_sd", "i_sq", "u_sd", "u_sq", "omega_k", "psi_sd", "psi_sq", "psi_r_mag", "psi_r_filled",
    "tau_meas", "tau_recon", "tau_e", "p_e", "p_m", "p_cu_s", "p_cu_r", "p_fe", "eta",
];
pub const EXTRA_LAYERS: [&str; 1] = ["xi"];
pub const TRUTH_LAYERS: [&str; 4] = ["psi_sd_true", "psi_sq_true", "psi_r_true", "tau_e_true"];

/// Maps of one speed. `d` covers both signs (the measured half is mirrored),
/// with the band |i_sd| < i_sd_min absent.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineMaps {
    pub speed: f64,
    pub d: Vec<f64>,
    pub q: Vec<f64>,
    pub rs_est: f64,
    pub rs_used: f64,
    pub rr_used: f64,
    /// Shaft reading at (i_sd_min, 0), taken as the friction torque.
    pub tau_friction: f64,
    pub np: u32,
    pub rated_power: f64,
    pub opts: MapOptions,
    /// Named layers, each `d.len() × q.len()`.
    pub layers: Vec<(String, Grid2)>,
}

impl MachineMaps {
    pub fn layer(&self, name: &str) -> Option<&Grid2> {
        self.layers.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    /// Panicking accessor for layers every map has.
    pub fn l(&self, name: &str) -> &Grid2 {
        self.layer(name).unwrap_or_else(|| panic!("map layer `{name}` missing"))
    }

    fn put(&mut self, name: &str, g: Grid2) {
        match self.layers.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = g,
            None => self.layers.push((name.to_string(), g)),
        }
    }

    /// Index of the first column with i_sd > 0.
    pub fn positive_start(&self) -> usize {
        self.d.partition_point(|&x| x < 0.0)
    }

    /// Positive-i_sd axis and the matching slice of a layer.
    pub fn positive_half(&self, name: &str) -> (Vec<f64>, Grid2) {
        let s = self.positive_start();
        let g = self.l(name);
        let nd = self.d.len() - s;
        (self.d[s..].to_vec(), Grid2 { nd, nq: g.nq, v: g.v[s * g.nq..].to_vec() })
    }

    /// Index of the i_sq = 0 row.
    pub fn zero_q(&self) -> usize {
        nearest(&self.q, 0.0)
    }

    pub fn to_table(&self) -> Table {
        let o = &self.opts;
        let mut t = Table::new(MAPS_FORMAT, MAPS_VERSION);
        t.set_f64("speed", self.speed);
        t.set("d_axis", fmt_list(&self.d));
        t.set("q_axis", fmt_list(&self.q));
        t.set_f64("rs_est", self.rs_est);
        t.set_f64("rs_used", self.rs_used);
        t.set_f64("rr_used", self.rr_used);
        t.set_f64("tau_friction", self.tau_friction);
        t.set("np", self.np);
        t.set_f64("rated_power", self.rated_power);
        t.set_f64("opt.t_f", o.t_f);
        t.set_f64("opt.crop_fraction", o.crop_fraction);
        t.set("opt.rs_source", o.rs_source);
        t.set("opt.scale_rr", o.scale_rr);
        t.set("opt.torque_source", o.torque_source);
        t.set("opt.recon_form", o.recon_form);
        t.set_f64("opt.omega_floor", o.omega_floor);
        t.set_f64("opt.slip_floor", o.slip_floor);
        t.set_f64("opt.p_floor_frac", o.p_floor_frac);
        t.set_f64("opt.track_tol", o.track_tol);
        t.set("opt.smooth_span", o.smooth_span.map_or("none".to_string(), |s| format!("{s:?}")));
        let nq = self.q.len();
        let n = self.d.len() * nq;
        t.push_column("i_sd_ref", (0..n).map(|i| self.d[i / nq]).collect());
        t.push_column("i_sq_ref", (0..n).map(|i| self.q[i % nq]).collect());
        for (name, g) in &self.layers {
            t.push_column(name, g.v.clone());
        }
        t
    }

    pub fn to_text(&self) -> String {
        self.to_table().to_text()
    }

    pub fn parse(text: &str) -> Result<Self, MapError> {
        let t = Table::parse(text)?;
        t.expect_format(MAPS_FORMAT)?;
        let d = t.get_list("d_axis")?;
        let q = t.get_list("q_axis")?;
        let smooth_span = match t.require("opt.smooth_span")? {
            "none" => None,
            _ => Some(t.get_parsed("opt.smooth_span")?),
        };
        let opts = MapOptions {
            t_f: t.get_parsed("opt.t_f")?,
            crop_fraction: t.get_parsed("opt.crop_fraction")?,
            rs_source: t.require("opt.rs_source")?.parse()?,
            scale_rr: t.get_parsed("opt.scale_rr")?,
            torque_source: t.require("opt.torque_source")?.parse()?,
            recon_form: t.require("opt.recon_form")?.parse()?,
            omega_floor: t.get_parsed("opt.omega_floor")?,
            slip_floor: t.get_parsed("opt.slip_floor")?,
            p_floor_frac: t.get_parsed("opt.p_floor_frac")?,
            track_tol: t.get_parsed("opt.track_tol")?,
            smooth_span,
        };
        let (nd, nq) = (d.len(), q.len());
        let layers = t
            .columns
            .iter()
            .filter(|c| !c.starts_with("i_s") || !c.ends_with("_ref"))
            .map(|c| Ok((c.clone(), Grid2 { nd, nq, v: t.column(c)?.to_vec() })))
            .collect::<Result<Vec<_>, TableError>>()?;
        if layers.iter().any(|(_, g)| g.v.len() != nd * nq) {
            return Err(MapError::Grid("layer size does not match axes".into()));
        }
        Ok(MachineMaps {
            speed: t.get_parsed("speed")?,
            d,
            q,
            rs_est: t.get_parsed("rs_est")?,
            rs_used: t.get_parsed("rs_used")?,
            rr_used: t.get_parsed("rr_used")?,
            tau_friction: t.get_parsed("tau_friction")?,
            np: t.get_parsed("np")?,
            rated_power: t.get_parsed("rated_power")?,
            opts,
            layers,
        })
    }

    /// A layer as a CSV matrix: header row of i_sq values, then one row per
    /// i_sd value. Undefined nodes are empty cells.
    pub fn plot_csv(&self, name: &str) -> Option<String> {
        let g = self.layer(name)?;
        let mut s = String::from("i_sd\\i_sq");
        for q in &self.q {
            s.push_str(&format!(",{q:?}"));
        }
        s.push('\n');
        for (j, d) in self.d.iter().enumerate() {
            s.push_str(&format!("{d:?}"));
            for k in 0..self.q.len() {
                let v = g.get(j, k);
                s.push(',');
                if v.is_finite() {
                    s.push_str(&format!("{v:?}"));
                }
            }
            s.push('\n');
        }
        Some(s)
    }
}

/// Per-node computations on the measured half, returning layers in
/// `LAYERS` order plus ξ and optional truth layers.
fn node_layers(
    pts: &[SteadyPoint],
    nd: usize,
    nq: usize,
    p: &MachineParams,
    o: &MapOptions,
    rs: f64,
    rr: f64,
    tau_f: f64,
) -> Result<Vec<(String, Grid2)>, MapError> {
    let np = p.np;
    let p_floor = o.p_floor_frac * p.rated.power();
    let tau_tol = 0.005 * p.rated.torque_n;
    let mut g: Vec<(String, Grid2)> =
        LAYERS.iter().chain(&EXTRA_LAYERS).map(|n| (n.to_string(), Grid2::nan(nd, nq))).collect();
    let truth = pts.iter().all(|pt| pt.truth.is_some());
    if truth {
        g.extend(TRUTH_LAYERS.iter().map(|n| (n.to_string(), Grid2::nan(nd, nq))));
    }
    for pt in pts {
        let (j, k) = (pt.j, pt.k);
        let mut set = |name: &str, v: f64| {
            if let Some((_, l)) = g.iter_mut().find(|(n, _)| n == name) {
                l.set(j, k, v);
            }
        };
        set("i_sd", pt.i_s.d());
        set("i_sq", pt.i_s.q());
        set("u_sd", pt.u_s.d());
        set("u_sq", pt.u_s.q());
        set("omega_k", pt.omega_k);
        if let Some(t) = pt.truth {
            set("psi_sd_true", t.psi_s.d());
            set("psi_sq_true", t.psi_s.q());
            set("psi_r_true", t.psi_r.norm());
            set("tau_e_true", t.tau_e);
        }
        let ok = (pt.i_s - pt.i_ref).norm() <= o.track_tol && pt.sat_duty <= 0.5;
        set("valid", ok as u8 as f64);
        if !ok {
            continue;
        }
        let psi_s = stator_flux(pt.u_s, pt.i_s, pt.omega_k, rs, o.omega_floor)?;
        set("psi_sd", psi_s.d());
        set("psi_sq", psi_s.q());
        let tau_meas = pt.tau_shaft - tau_f;
        let tau_recon = match o.recon_form {
            ReconForm::StatorFlux => reconstructed_torque(pt.i_s, psi_s, np),
            ReconForm::RotorFlux => {
                reconstructed_torque(pt.i_s, V2::new(pt.psi_r_hat * p.lm0 / p.lr0(), 0.0), np)
            }
        };
        let tau_e = match o.torque_source {
            TorqueSource::Measured => tau_meas,
            TorqueSource::Reconstructed => tau_recon,
        };
        set("tau_meas", tau_meas);
        set("tau_recon", tau_recon);
        set("tau_e", tau_e);
        let slip = pt.omega_k - pt.omega_r;
        let psi_r = match rotor_flux_mag(tau_e, slip, rr, np, o.slip_floor, tau_tol) {
            Ok(v) => v,
            Err(ExtractError::SignMismatch { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        set("psi_r_mag", psi_r.unwrap_or(f64::NAN));
        set("psi_r_filled", psi_r.is_none() as u8 as f64);
        let l = loss_split(pt.u_s, pt.i_s, pt.omega_k, pt.omega_r, pt.omega_m, tau_e, rs, np);
        set("p_e", l.p_e);
        set("p_m", l.p_m);
        set("p_cu_s", l.p_cu_s);
        set("p_cu_r", l.p_cu_r);
        set("p_fe", l.p_fe);
        set("eta", efficiency(l.p_e, l.p_m, p_floor).unwrap_or(f64::NAN));
        if pt.omega_k.abs() >= o.omega_floor {
            set("xi", vhz_ratio(pt.u_s.norm(), pt.omega_k));
        }
    }
    Ok(g)
}

/// Full pipeline for one speed: filter, reduce, identify per node, fill the
/// rotor flux along q, optionally smooth, then mirror to negative i_sd.
pub fn extract_maps(log: &MeasurementLog, p: &MachineParams, o: &MapOptions) -> Result<MachineMaps, MapError> {
    let spec = &log.header.grid;
    let (d, q) = build_grid(spec).map_err(|e| MapError::Grid(e.to_string()))?;
    let (nd, nq) = (d.len(), q.len());
    let filtered = lowpass(log, o.t_f)?;
    let pts = window_reduce(&filtered, o.crop_fraction, p.np)?;
    let rs_est = estimate_rs(&pts)?;
    let rs = match o.rs_source {
        RsSource::Configured => p.rs,
        RsSource::Estimated => rs_est,
    };
    let rr = if o.scale_rr { p.rr * rs / p.rs } else { p.rr };
    let k0 = nearest(&q, 0.0);
    let tau_f = pts
        .iter()
        .find(|pt| pt.j == 0 && pt.k == k0)
        .map(|pt| pt.tau_shaft)
        .ok_or(ExtractError::MissingZeroQ)?;
    let mut layers = node_layers(&pts, nd, nq, p, o, rs, rr, tau_f)?;

    // Rotor flux is undefined at zero slip: fill along q between valid nodes.
    let get = |ls: &Vec<(String, Grid2)>, n: &str| ls.iter().position(|(m, _)| m == n).unwrap();
    let (ipr, ival) = (get(&layers, "psi_r_mag"), get(&layers, "valid"));
    for j in 0..nd {
        let valid: Vec<usize> = (0..nq).filter(|&k| layers[ival].1.get(j, k) == 1.0).collect();
        let mut col: Vec<f64> = valid.iter().map(|&k| layers[ipr].1.get(j, k)).collect();
        let xs: Vec<f64> = valid.iter().map(|&k| q[k]).collect();
        fill_linear(&mut col, &xs);
        for (&k, v) in valid.iter().zip(col) {
            layers[ipr].1.set(j, k, v);
        }
    }

    let mut maps = MachineMaps {
        speed: log.header.speed,
        d: d.clone(),
        q: q.clone(),
        rs_est,
        rs_used: rs,
        rr_used: rr,
        tau_friction: tau_f,
        np: p.np,
        rated_power: p.rated.power(),
        opts: *o,
        layers,
    };
    if let Some(span) = o.smooth_span {
        smooth_maps(&mut maps, span);
    }
    Ok(symmetry_expand(&maps))
}

/// Smooth the identified layers and recompute the dependent ones so the
/// power balance and efficiency stay consistent.
fn smooth_maps(m: &mut MachineMaps, span: f64) {
    for name in ["psi_sd", "psi_sq", "psi_r_mag", "tau_meas", "tau_recon", "tau_e", "p_e", "p_cu_s", "p_cu_r", "xi"] {
        let s = smooth(m.l(name), &m.d, &m.q, span);
        m.put(name, s);
    }
    let w = m.speed;
    let p_m = m.l("tau_e").map(|t| t * w);
    let p_fe = Grid2::from_fn(p_m.nd, p_m.nq, |j, k| {
        m.l("p_e").get(j, k) - p_m.get(j, k) - m.l("p_cu_s").get(j, k) - m.l("p_cu_r").get(j, k)
    });
    let floor = m.opts.p_floor_frac * m.rated_power;
    let eta = m.l("p_e").zip(&p_m, |pe, pm| {
        if pe.is_finite() && pm.is_finite() {
            efficiency(pe, pm, floor).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        }
    });
    m.put("p_m", p_m);
    m.put("p_fe", p_fe);
    m.put("eta", eta);
}

/// Layers that change sign under (i_sd, i_sq) → (−i_sd, −i_sq).
const ODD: [&str; 8] = ["i_sd", "i_sq", "u_sd", "u_sq", "psi_sd", "psi_sq", "psi_sd_true", "psi_sq_true"];

/// Mirror a measured half (all i_sd > 0) onto negative i_sd.
pub fn symmetry_expand(m: &MachineMaps) -> MachineMaps {
    if m.d.first().is_some_and(|&x| x < 0.0) {
        return m.clone();
    }
    let (nd, nq) = (m.d.len(), m.q.len());
    let mut d: Vec<f64> = m.d.iter().rev().map(|x| -x).collect();
    d.extend(&m.d);
    let layers = m
        .layers
        .iter()
        .map(|(name, g)| {
            let sign = if ODD.contains(&name.as_str()) { -1.0 } else { 1.0 };
            let e = Grid2::from_fn(2 * nd, nq, |j, k| {
                if j < nd {
                    sign * g.get(nd - 1 - j, nq - 1 - k)
                } else {
                    g.get(j - nd, k)
                }
            });
            (name.clone(), e)
        })
        .collect();
    MachineMaps { d, layers, ..m.clone() }
}

/// [`extract_maps`] over several logs.
pub fn extract_all(
    logs: &[MeasurementLog],
    p: &MachineParams,
    o: &MapOptions,
    exec: Exec,
) -> Vec<Result<MachineMaps, MapError>> {
    par::map(exec, logs, |l| extract_maps(l, p, o))
}
