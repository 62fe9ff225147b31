use std::sync::OnceLock;

use imbench_control::{ControllerConfig, Rig};
use imbench_machine::{CoreLossModel, MachineParams, V2};
use imbench_maps::*;
use imbench_sweep::{run_sweep, Col, GridSpec, LogHeader, MeasurementLog, SweepOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SPEED: f64 = 150.0;

fn campaign(p: MachineParams, m: usize, n: usize) -> (MachineParams, ControllerConfig, MeasurementLog) {
    let cfg = ControllerConfig::for_machine(&p);
    let mut g = GridSpec::for_machine(&p, &cfg);
    g.m = m;
    g.n = n;
    let opts = SweepOptions { truth: true, ..Default::default() };
    let log = run_sweep(SPEED, &g, &p, &cfg, &opts).unwrap();
    (p, cfg, log)
}

fn default_run() -> &'static (MachineParams, ControllerConfig, MeasurementLog) {
    static RUN: OnceLock<(MachineParams, ControllerConfig, MeasurementLog)> = OnceLock::new();
    RUN.get_or_init(|| campaign(MachineParams::default(), 8, 17))
}

fn lossless_core() -> MachineParams {
    MachineParams { core_loss: CoreLossModel::none(), ..MachineParams::default() }
}

fn no_core_run() -> &'static (MachineParams, ControllerConfig, MeasurementLog) {
    static RUN: OnceLock<(MachineParams, ControllerConfig, MeasurementLog)> = OnceLock::new();
    RUN.get_or_init(|| campaign(lossless_core(), 8, 17))
}

fn default_maps() -> &'static MachineMaps {
    static MAPS: OnceLock<MachineMaps> = OnceLock::new();
    MAPS.get_or_init(|| {
        let (p, _, log) = default_run();
        extract_maps(log, p, &MapOptions::default()).unwrap()
    })
}

/// Valid nodes of the measured half as (j, k) in full-map indices.
fn valid_nodes(m: &MachineMaps) -> Vec<(usize, usize)> {
    let s = m.positive_start();
    (s..m.d.len()).flat_map(|j| (0..m.q.len()).map(move |k| (j, k))).filter(|&(j, k)| m.l("valid").get(j, k) == 1.0).collect()
}

fn synthetic_log(values: impl Fn(usize) -> f64, win: usize) -> MeasurementLog {
    let grid = GridSpec { i_sd_min: 1.0, i_sd_max: 2.0, i_sq_max: 1.0, m: 2, n: 3, hold_time: win as f64 / 4000.0, speeds: vec![] };
    let header = LogHeader {
        speed: 100.0,
        f_s: 4000.0,
        grid,
        seed: 0,
        torque_noise_std: 0.0,
        substeps: 1,
        valid: true,
        note: String::new(),
        audit_max_residual: None,
        params: vec![],
        controller: vec![],
    };
    let mut log = MeasurementLog::new(header, false);
    let mut row = vec![0.0; log.columns.len()];
    for i in 0..6 * win {
        row.iter_mut().for_each(|r| *r = values(i));
        row[0] = i as f64 / 4000.0;
        row[1] = (i / win) as f64;
        row[2] = 0.0;
        row[3] = 0.0;
        log.push_row(&row);
    }
    log
}

#[test]
fn lowpass_response() {
    assert!((lowpass_alpha(1.0 / 4000.0, 0.025) - 0.009901).abs() < 5e-7);
    let c = synthetic_log(|_| 2.5, 400);
    let f = lowpass(&c, 0.025).unwrap();
    assert!(f.col(Col::Isd).iter().all(|&v| (v - 2.5).abs() < 1e-12));
    let step = synthetic_log(|i| if i == 0 { 0.0 } else { 1.0 }, 400);
    let f = lowpass(&step, 0.025).unwrap();
    let y = f.col(Col::Isd);
    // 63.2 % is crossed within one sample of t = T_f (100 samples).
    let cross = y.iter().position(|&v| v >= 1.0 - (-1f64).exp()).unwrap();
    assert!((cross as i64 - 100).abs() <= 1, "crossed at {cross}");
    assert!(lowpass(&c, 0.0).is_err());
}

#[test]
fn window_means() {
    let c = synthetic_log(|_| 1.25, 100);
    let pts = window_reduce(&c, 0.5, 1).unwrap();
    assert_eq!(pts.len(), 6);
    assert!(pts.iter().all(|p| p.i_s == V2::new(1.25, 1.25)));
    let ramp = synthetic_log(|i| (i % 100) as f64, 100);
    let pts = window_reduce(&ramp, 0.5, 1).unwrap();
    assert!((pts[0].i_s.d() - 74.5).abs() < 1e-12);
    // Voltage is taken one sample earlier.
    assert!((pts[0].u_s.d() - 73.5).abs() < 1e-12);
    assert!(window_reduce(&ramp, 0.1, 1).is_err());
    let short = synthetic_log(|_| 1.0, 12);
    assert!(matches!(window_reduce(&short, 0.5, 1), Err(ReduceError::WindowTooShort { .. })));
}

#[test]
fn simulated_windows_track_reference() {
    let (p, _, log) = default_run();
    let pts = window_reduce(&lowpass(log, 0.025).unwrap(), 0.5, p.np).unwrap();
    let mut worst: f64 = 0.0;
    for pt in pts.iter().filter(|pt| pt.sat_duty == 0.0) {
        worst = worst.max((pt.i_s - pt.i_ref).norm());
        assert!((pt.omega_m - SPEED).abs() < 1e-9);
    }
    assert!(worst < 0.01, "worst tracking error {worst}");
}

#[test]
fn stator_flux_matches_ground_truth() {
    let m = default_maps();
    let (mut e2, mut r2) = (0.0, 0.0);
    let nodes = valid_nodes(m);
    assert!(nodes.len() > 100);
    for &(j, k) in &nodes {
        let est = V2::new(m.l("psi_sd").get(j, k), m.l("psi_sq").get(j, k));
        let tru = V2::new(m.l("psi_sd_true").get(j, k), m.l("psi_sq_true").get(j, k));
        e2 += (est - tru).norm_sq();
        r2 += tru.norm_sq();
    }
    let rel = (e2 / r2).sqrt();
    assert!(rel < 0.005, "stator flux RMS error {rel}");
}

#[test]
fn rotor_flux_matches_ground_truth() {
    let (p, _, _) = default_run();
    let m = default_maps();
    let mut worst: f64 = 0.0;
    for (j, k) in valid_nodes(m) {
        if m.l("tau_e_true").get(j, k).abs() > 0.05 * p.rated.torque_n {
            let e = m.l("psi_r_mag").get(j, k) / m.l("psi_r_true").get(j, k) - 1.0;
            worst = worst.max(e.abs());
        }
    }
    assert!(worst < 0.01, "rotor flux error {worst}");
    let k0 = m.zero_q();
    for j in m.positive_start()..m.d.len() {
        assert_eq!(m.l("psi_r_filled").get(j, k0), 1.0);
        assert!(m.l("psi_r_mag").get(j, k0).is_finite());
    }
}

#[test]
fn power_split_and_map_shape() {
    let (p, _, _) = default_run();
    let m = default_maps();
    let pr = p.rated.power();
    for (j, k) in valid_nodes(m) {
        let g = |n: &str| m.l(n).get(j, k);
        let sum = g("p_m") + g("p_cu_s") + g("p_cu_r") + g("p_fe");
        assert!((g("p_e") - sum).abs() <= 1e-12 * g("p_e").abs().max(1.0));
        assert!(g("p_cu_s") >= 0.0);
        assert!(g("p_fe") >= -0.005 * pr, "p_fe {} at {j},{k}", g("p_fe"));
        let eta = g("eta");
        if eta.is_finite() && g("p_e") > 0.0 && g("p_m") > 0.0 {
            assert!((0.0..=1.0).contains(&eta));
        }
        let xi = std::f64::consts::TAU * V2::new(g("u_sd"), g("u_sq")).norm() / g("omega_k");
        assert!((g("xi") - xi).abs() < 1e-9);
    }
    // Along i_sq = 0 the stator flux is aligned and saturates with i_sd.
    let k0 = m.zero_q();
    let s = m.positive_start();
    let mut last_slope = f64::INFINITY;
    for j in s..m.d.len() {
        assert!(m.l("psi_sq").get(j, k0).abs() < 0.01 * p.rated.psi_r_n);
        if j > s {
            let slope = (m.l("psi_sd").get(j, k0) - m.l("psi_sd").get(j - 1, k0)) / (m.d[j] - m.d[j - 1]);
            assert!(slope <= last_slope * (1.0 + 1e-9), "slope rises at column {j}");
            last_slope = slope;
        }
    }
    // Friction correction zeroes the idle node.
    assert_eq!(m.l("tau_meas").get(s, k0), 0.0);
    // Torque rises with i_sq in every measured column.
    for j in s..m.d.len() {
        let col: Vec<f64> = (0..m.q.len()).map(|k| m.l("tau_e").get(j, k)).filter(|v| v.is_finite()).collect();
        assert!(col.windows(2).all(|w| w[1] > w[0]), "column {j} not monotone");
    }
}

#[test]
fn torque_reconstruction_without_core_losses() {
    let (p, _, log) = no_core_run();
    let m = extract_maps(log, p, &MapOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    for (j, k) in valid_nodes(&m) {
        worst = worst.max((m.l("tau_recon").get(j, k) - m.l("tau_meas").get(j, k)).abs());
    }
    assert!(worst <= 0.005 * p.rated.torque_n, "torque gap {worst}");
    let rs = m.rs_est;
    assert!(((rs - 2.3) / 2.3).abs() < 0.01, "Rs estimate {rs}");
}

#[test]
fn rs_estimate_follows_temperature() {
    let p = MachineParams { temperature_scale_rs: 1.2, ..lossless_core() };
    let (p, _, log) = campaign(p, 8, 3);
    let m = extract_maps(&log, &p, &MapOptions { rs_source: RsSource::Estimated, ..Default::default() }).unwrap();
    assert!(((m.rs_est - 2.76) / 2.76).abs() < 0.01, "Rs estimate {}", m.rs_est);
    assert_eq!(m.rs_used, m.rs_est);
}

#[test]
fn core_losses_bias_the_rs_estimate() {
    // Documented limitation: the core branch inflates u_sd/i_sd at i_sq = 0.
    let m = default_maps();
    assert!(m.rs_est > 2.3 * 1.05);
    assert_eq!(m.rs_used, 2.3);
}

#[test]
fn symmetry_expansion() {
    let m = default_maps();
    let nd = m.d.len() / 2;
    assert_eq!(m.d.len(), 16);
    assert!(m.d[nd - 1] < 0.0 && m.d[nd] > 0.0 && m.d[nd] == -m.d[nd - 1]);
    let nq = m.q.len();
    for j in 0..nd {
        for k in 0..nq {
            let (a, b) = ((nd + j, k), (nd - 1 - j, nq - 1 - k));
            let same = |n: &str| {
                let (x, y) = (m.l(n).get(a.0, a.1), m.l(n).get(b.0, b.1));
                x == y || (x.is_nan() && y.is_nan())
            };
            for n in ["tau_e", "eta", "xi", "psi_r_mag", "p_fe", "p_cu_s"] {
                assert!(same(n), "{n} at {j},{k}");
            }
            let (x, y) = (m.l("psi_sd").get(a.0, a.1), m.l("psi_sd").get(b.0, b.1));
            assert!(x == -y || (x.is_nan() && y.is_nan()));
        }
    }
    assert_eq!(symmetry_expand(m).to_text(), m.to_text());
}

#[test]
fn mirrored_operating_point_matches_direct_simulation() {
    let p = MachineParams::default();
    let cfg = ControllerConfig::for_machine(&p);
    let run = |s: f64| {
        let mut rig = Rig::new(p, cfg, SPEED, 4);
        rig.run(V2::new(s * 2.5, 0.0), 4600).unwrap();
        let n = 4000;
        let (mut tau, mut psi) = (0.0, V2::ZERO);
        for _ in 0..n {
            let x = rig.step(V2::new(s * 2.5, s * 4.0)).unwrap();
            tau += x.tau_e;
            psi += x.psi_s_true;
        }
        (tau / n as f64, psi * (1.0 / n as f64))
    };
    let (t1, p1) = run(1.0);
    let (t2, p2) = run(-1.0);
    assert!((t1 - t2).abs() < 1e-6, "{t1} vs {t2}");
    assert!((p1 + p2).norm() < 1e-6);
}

#[test]
fn maps_round_trip_and_plot_export() {
    let m = default_maps();
    let back = MachineMaps::parse(&m.to_text()).unwrap();
    assert_eq!(back.to_text(), m.to_text());
    for ((n1, a), (n2, b)) in back.layers.iter().zip(&m.layers) {
        assert_eq!(n1, n2);
        assert!(a.v.iter().zip(&b.v).all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan())));
    }
    let csv = m.plot_csv("eta").unwrap();
    assert_eq!(csv.lines().count(), m.d.len() + 1);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), m.q.len() + 1);
}

#[test]
fn smoothing_reduces_noise() {
    let d: Vec<f64> = (0..17).map(|i| 0.8 + 0.2 * i as f64).collect();
    let q: Vec<f64> = (0..17).map(|i| -8.0 + i as f64).collect();
    let clean = Grid2::from_fn(17, 17, |j, k| (0.6 * d[j]).atan() * 2.0 + 0.3 * q[k] * d[j].sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut ratios = Vec::new();
    let mut second = Vec::new();
    for _ in 0..20 {
        let mut noisy = clean.clone();
        noisy.v.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
        let s1 = smooth(&noisy, &d, &q, 0.3);
        let s2 = smooth(&s1, &d, &q, 0.3);
        let rms = |a: &Grid2, b: &Grid2| (a.v.iter().zip(&b.v).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.v.len() as f64).sqrt();
        ratios.push(rms(&noisy, &clean) / rms(&s1, &clean));
        second.push(rms(&s2, &s1) / rms(&s1, &noisy));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&ratios) >= 2.0, "noise reduction {}", mean(&ratios));
    assert!(mean(&second) < 0.1, "second pass change ratio {}", mean(&second));
}

#[test]
fn smoothed_maps_keep_balance() {
    let (p, _, log) = default_run();
    let m = extract_maps(log, p, &MapOptions { smooth_span: Some(0.3), ..Default::default() }).unwrap();
    for (j, k) in valid_nodes(&m) {
        let g = |n: &str| m.l(n).get(j, k);
        let sum = g("p_m") + g("p_cu_s") + g("p_cu_r") + g("p_fe");
        assert!((g("p_e") - sum).abs() <= 1e-9 * g("p_e").abs().max(1.0));
    }
}
