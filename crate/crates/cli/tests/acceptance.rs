//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero
//! exit if any criterion fails.

use std::f64::consts::TAU;
use std::time::Instant;

use imbench_cli::*;
use imbench_control::ControllerConfig;
use imbench_lut::{evaluate_point, lut_query, Lut2d, Strategy};
use imbench_machine::{vhz_ratio, CoreLossModel, MachineParams, V2};
use imbench_maps::{extract_maps, MachineMaps, MapOptions, TorqueSource};
use imbench_sweep::{run_sweep, GridSpec, SweepOptions};
use imbench_util::Exec;
use tempfile::TempDir;

/// Efficiency slack for oracle and ordering checks (0.2 percentage points).
const EPS: f64 = 0.002;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn valid_nodes(m: &MachineMaps) -> Vec<(usize, usize)> {
    let s = m.positive_start();
    (s..m.d.len()).flat_map(|j| (0..m.q.len()).map(move |k| (j, k))).filter(|&(j, k)| m.l("valid").get(j, k) == 1.0).collect()
}

fn single_speed(p: &MachineParams, grid: &GridSpec, speed: f64, opts: SweepOptions) -> (MachineMaps, Option<f64>) {
    let cfg = ControllerConfig::for_machine(p);
    let log = run_sweep(speed, grid, p, &cfg, &opts).expect("sweep");
    let m = extract_maps(&log, p, &MapOptions::default()).expect("maps");
    (m, log.header.audit_max_residual)
}

fn lut<'a>(luts: &'a [Lut2d], s: Strategy) -> &'a Lut2d {
    luts.iter().find(|l| l.strategy == s).expect("strategy table")
}

struct Plant<'a> {
    p: &'a MachineParams,
    c: &'a ControllerConfig,
}

impl Plant<'_> {
    /// (η, τ_e) of the steady state at a table point.
    fn at(&self, l: &Lut2d, tau: f64, w: f64) -> (f64, f64) {
        let q = lut_query(l, tau, w);
        let st = evaluate_point(self.p, self.c, q.i_sd, q.i_sq, w).expect("steady state");
        (st.eta.unwrap_or(f64::NAN), st.tau_e)
    }
}

fn criterion_1(maps: &[MachineMaps], audit: Option<f64>) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for m in maps {
        for (j, k) in valid_nodes(m) {
            let g = |l: &str| m.l(l).get(j, k);
            let sum = g("p_m") + g("p_cu_s") + g("p_cu_r") + g("p_fe");
            worst = worst.max((g("p_e") - sum).abs() / g("p_e").abs().max(1.0));
            n += 1;
        }
    }
    let audit = audit.unwrap_or(f64::INFINITY);
    verdict(
        worst <= 1e-9 && audit <= 1e-6,
        format!("map balance max rel residual {worst:.1e} over {n} nodes (4 speeds); plant energy audit max {audit:.1e} per 2 s window (150 rad/s, 136 windows)"),
    )
}

fn criterion_2(m: &MachineMaps, tau_n: f64) -> Verdict {
    let (mut e2, mut r2, mut worst_r) = (0.0, 0.0, 0.0f64);
    for (j, k) in valid_nodes(m) {
        let g = |l: &str| m.l(l).get(j, k);
        let est = V2::new(g("psi_sd"), g("psi_sq"));
        let tru = V2::new(g("psi_sd_true"), g("psi_sq_true"));
        e2 += (est - tru).norm_sq();
        r2 += tru.norm_sq();
        if g("tau_e_true").abs() > 0.05 * tau_n {
            worst_r = worst_r.max((g("psi_r_mag") / g("psi_r_true") - 1.0).abs());
        }
    }
    let rms = (e2 / r2).sqrt();
    verdict(rms < 0.005 && worst_r < 0.01, format!("stator flux RMS error {:.3}% (< 0.5%), rotor flux max error {:.3}% (< 1%)", 100.0 * rms, 100.0 * worst_r))
}

fn torque_gap(m: &MachineMaps) -> f64 {
    valid_nodes(m).iter().map(|&(j, k)| (m.l("tau_recon").get(j, k) - m.l("tau_meas").get(j, k)).abs()).fold(0.0, f64::max)
}

fn criterion_3(p: &MachineParams) -> Verdict {
    let cfg = ControllerConfig::for_machine(p);
    let grid = GridSpec::for_machine(p, &cfg);
    let no_core = MachineParams { core_loss: CoreLossModel::none(), ..*p };
    let inf = torque_gap(&single_speed(&no_core, &grid, 150.0, SweepOptions::default()).0);
    let small = GridSpec { n: 5, ..grid.clone() };
    let rcs = [p.core_loss.rc0, 4.0 * p.core_loss.rc0, 16.0 * p.core_loss.rc0];
    let gaps: Vec<f64> = rcs
        .iter()
        .map(|&rc0| {
            let q = MachineParams { core_loss: CoreLossModel { rc0, ..p.core_loss }, ..*p };
            torque_gap(&single_speed(&q, &small, 150.0, SweepOptions::default()).0)
        })
        .collect();
    let tn = p.rated.torque_n;
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    let nonzero = gaps[0] > 0.005 * tn;
    verdict(
        inf <= 0.005 * tn && shrinking && nonzero,
        format!(
            "Rc→∞: max |Δτ| {:.4} N·m ({:.3}% of τ_N); Rc0 = {:?} Ω: max |Δτ| = {:.4?} N·m",
            inf,
            100.0 * inf / tn,
            rcs,
            gaps
        ),
    )
}

struct OraclePoints {
    speeds: Vec<f64>,
    taus: Vec<f64>,
    results: Vec<imbench_lut::OracleResult>,
}

fn criteria_4_5(pl: &Plant, o: &OraclePoints, luts: &[Lut2d]) -> (Verdict, Verdict) {
    let (mept, mtpc) = (lut(luts, Strategy::Mept), lut(luts, Strategy::Mtpc));
    let (mut worst_eta, mut worst_ratio) = (f64::INFINITY, 0.0f64);
    let (mut at_eta, mut at_ratio) = ((0.0, 0.0), (0.0, 0.0));
    let (mut fail4, mut fail5) = (Vec::new(), Vec::new());
    for r in &o.results {
        let best = r.max_eta.and_then(|p| p.eta).expect("oracle optimum");
        let d = pl.at(mept, r.tau, r.speed).0 - best;
        if d < worst_eta {
            worst_eta = d;
            at_eta = (r.speed, r.tau);
        }
        if d < -EPS {
            fail4.push(format!("({:.1}, {:.2}): {:+.3} pp", r.speed, r.tau, 100.0 * d));
        }
        let q = lut_query(mtpc, r.tau, r.speed);
        let ratio = q.i_sd.hypot(q.i_sq) / r.min_current.expect("oracle minimum").i_norm();
        if ratio > worst_ratio {
            worst_ratio = ratio;
            at_ratio = (r.speed, r.tau);
        }
        if ratio > 1.005 {
            fail5.push(format!("({:.1}, {:.2}): {ratio:.4}", r.speed, r.tau));
        }
    }
    let n = o.results.len();
    let v4 = verdict(
        fail4.is_empty(),
        format!(
            "worst η(MEPT) − oracle max = {:+.3} pp at (ω {:.1}, τ {:.2}); {} of {n} points below −0.2 pp{}",
            100.0 * worst_eta,
            at_eta.0,
            at_eta.1,
            fail4.len(),
            if fail4.is_empty() { String::new() } else { format!(": {}", fail4.join(", ")) }
        ),
    );
    let v5 = verdict(
        fail5.is_empty(),
        format!(
            "worst ‖i‖(MTPC) / oracle min = {worst_ratio:.4} at (ω {:.1}, τ {:.2}); {} of {n} points above 1.005{}",
            at_ratio.0,
            at_ratio.1,
            fail5.len(),
            if fail5.is_empty() { String::new() } else { format!(": {}", fail5.join(", ")) }
        ),
    );
    (v4, v5)
}

fn criterion_6(pl: &Plant, o: &OraclePoints, luts: &[Lut2d]) -> Verdict {
    let eta = |s: Strategy, w: f64, t: f64| pl.at(lut(luts, s), t, w).0;
    let mut bad = Vec::new();
    for &w in &o.speeds {
        for &t in &o.taus {
            let (e, m, c) = (eta(Strategy::Mept, w, t), eta(Strategy::Mtpc, w, t), eta(Strategy::Cf, w, t));
            if e < m - EPS || m < c - EPS {
                bad.push(format!("order at ({w:.1}, {t:.2}): {e:.4} {m:.4} {c:.4}"));
            }
        }
    }
    for s in [Strategy::Mept, Strategy::Mtpc, Strategy::Cf] {
        for &t in &o.taus {
            let e: Vec<f64> = o.speeds.iter().map(|&w| eta(s, w, t)).collect();
            if e.windows(2).any(|p| p[1] < p[0] - EPS) {
                bad.push(format!("{s} not rising with speed at τ {t:.2}: {e:.4?}"));
            }
        }
    }
    let t_n = *o.taus.last().unwrap();
    let gaps: Vec<f64> = o.speeds.iter().map(|&w| eta(Strategy::Mept, w, t_n) - eta(Strategy::VhzStd, w, t_n)).collect();
    if !gaps.windows(2).all(|p| p[1] < p[0]) {
        bad.push("rated-torque gap not strictly decreasing".into());
    }
    let gap_pp: Vec<String> = gaps.iter().map(|g| format!("{:.2}", 100.0 * g)).collect();
    verdict(
        bad.is_empty(),
        format!(
            "MEPT ≥ MTPC ≥ CF (±0.2 pp) and η rising with speed at 16 points; gap η_MEPT − η_VHz,std at τ_N = [{}] pp{}",
            gap_pp.join(", "),
            if bad.is_empty() { String::new() } else { format!("; violations: {}", bad.join("; ")) }
        ),
    )
}

fn criterion_7() -> Verdict {
    let xi = vhz_ratio(327.0, TAU * 50.0);
    let rel = (xi - 6.53).abs() / 6.53;
    verdict((xi * 100.0).round() / 100.0 == 6.54 && rel < 0.002, format!("ξ(327 V, 50 Hz) = {xi:.4} V·s, {:.3}% from 6.53 V·s", 100.0 * rel))
}

fn criterion_8(pl: &Plant, o: &OraclePoints, measured: &[Lut2d], recon: &[Lut2d]) -> Verdict {
    let (mut worst, mut worst_raw, mut at) = (0.0f64, 0.0f64, String::new());
    let mut bad = 0;
    for r in recon {
        let m = lut(measured, r.strategy);
        for &w in &o.speeds {
            for &t in &o.taus {
                let (eta_hat, tau_actual) = pl.at(r, t, w);
                let (eta_same_torque, _) = pl.at(m, tau_actual, w);
                let (eta_same_ref, _) = pl.at(m, t, w);
                let d = eta_hat - eta_same_torque;
                worst_raw = worst_raw.max((eta_hat - eta_same_ref).abs());
                if d.abs() > worst.abs() {
                    worst = d;
                    at = format!("{} at (ω {w:.1}, τ* {t:.2}, delivered {tau_actual:.3})", r.strategy);
                }
                if d.abs() > 0.005 {
                    bad += 1;
                }
            }
        }
    }
    verdict(
        bad == 0,
        format!(
            "η(τ̂ table) − η(τ table) at equal delivered torque: worst {:+.3} pp, {at}; {bad} of {} points beyond 0.5 pp (at equal τ* instead: worst {:.3} pp)",
            100.0 * worst,
            recon.len() * o.speeds.len() * o.taus.len(),
            100.0 * worst_raw
        ),
    )
}

fn criterion_9(cfg: &CampaignConfig, luts: &[Lut2d]) -> Verdict {
    let r = cfg.plant.rated;
    match validate_closed_loop(&cfg.plant, &cfg.controller, lut(luts, Strategy::Mept), 0.5 * r.omega_m_n, 0.5 * r.torque_n, 2.0) {
        Ok(rep) => verdict(
            rep.pass(),
            format!(
                "τ* {:.3} N·m at {:.1} rad/s → measured {:.4} N·m (error {:.3}%), settling {:.3} s",
                rep.tau_ref,
                rep.speed,
                rep.tau_measured,
                100.0 * rep.rel_error,
                rep.settling_time
            ),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn main() {
    let t0 = Instant::now();
    let cfg = CampaignConfig::default();
    let (p, c) = (cfg.plant, cfg.controller);
    let pl = Plant { p: &p, c: &c };
    let dir = TempDir::new().unwrap();

    let first = identify(&cfg, &Strategy::ALL, &dir.path().join("a"), Exec::Parallel).expect("identify");
    let art = load_artifacts(&dir.path().join("a")).expect("artifacts");
    let recon_cfg = CampaignConfig { torque_source: TorqueSource::Reconstructed, ..cfg.clone() };
    let (_, recon_luts) = build_all(&recon_cfg, &first.logs, &Strategy::ALL, Exec::Parallel).expect("reconstructed tables");
    let second = identify(&cfg, &Strategy::ALL, &dir.path().join("b"), Exec::Sequential).expect("identify");

    let (truth_maps, audit) =
        single_speed(&p, &cfg.grid, 150.0, SweepOptions { truth: true, audit: true, ..SweepOptions::default() });
    let oracle = OraclePoints { speeds: cfg.grid.speeds.clone(), taus: default_torques(&cfg), results: Vec::new() };
    let results = run_oracle(&cfg, &oracle.speeds, &oracle.taus, Exec::Parallel).expect("oracle");
    let oracle = OraclePoints { results, ..oracle };

    let (v4, v5) = criteria_4_5(&pl, &oracle, &art.luts);
    let verdicts = [
        criterion_1(&art.maps, audit),
        criterion_2(&truth_maps, p.rated.torque_n),
        criterion_3(&p),
        v4,
        v5,
        criterion_6(&pl, &oracle, &art.luts),
        criterion_7(),
        criterion_8(&pl, &oracle, &art.luts, &recon_luts),
        criterion_9(&cfg, &art.luts),
        {
            let same = first.manifest == second.manifest;
            verdict(
                same,
                format!(
                    "{} artifacts; parallel and sequential runs {} (manifest sha256 {})",
                    first.manifest.entries.len(),
                    if same { "bit-identical" } else { "DIFFER" },
                    &sha256_hex(first.manifest.to_text().as_bytes())[..16]
                ),
            )
        },
    ];
    let mut failed = Vec::new();
    for (i, v) in verdicts.iter().enumerate() {
        println!("criterion {}: {} — {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(i + 1);
        }
    }
    println!("acceptance: {}/10 passed in {:.0} s", 10 - failed.len(), t0.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
