use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imbench_cli::*;
use imbench_lut::Strategy;
use imbench_maps::TorqueSource;
use imbench_util::table::Table;
use imbench_util::Exec;

/// Induction-machine identification bench: sweeps, maps, strategy tables.
#[derive(Parser)]
#[command(name = "imbench", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Campaign config (TOML). Defaults to the built-in machine.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $IMBENCH_OUT/<command>, else imbench-out/<command>].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the campaign seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the torque source: measured | reconstructed.
    #[arg(long, global = true)]
    torque_source: Option<TorqueSource>,
    /// Restrict to these strategies (repeatable): vhz_std, vhz_opt, cf, mtpc, mept.
    #[arg(long = "strategy", global = true)]
    strategies: Vec<Strategy>,
    /// Run per-speed work sequentially.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep every speed, extract maps, build strategy tables.
    Identify {
        /// Also write the raw measurement logs (large).
        #[arg(long)]
        logs: bool,
    },
    /// Brute-force optimum search on the plant model.
    Oracle {
        /// Shaft speeds, rad/s [default: the grid speeds].
        #[arg(long = "speed")]
        speeds: Vec<f64>,
        /// Torque targets, N·m [default: 0.25, 0.5, 0.75, 1 × rated].
        #[arg(long = "tau")]
        taus: Vec<f64>,
    },
    /// Efficiency of each strategy over torque and speed.
    Compare {
        /// Directory written by `identify`.
        #[arg(long)]
        artifacts: PathBuf,
        /// Exit with status 4 if the report violates its expectations.
        #[arg(long)]
        check: bool,
    },
    /// Feed table references to the current loop and check the torque.
    ValidateClosedLoop {
        /// Directory written by `identify`.
        #[arg(long)]
        artifacts: PathBuf,
        /// Shaft speed, rad/s [default: half of rated].
        #[arg(long)]
        speed: Option<f64>,
        /// Torque reference, N·m [default: half of rated].
        #[arg(long)]
        tau: Option<f64>,
        /// Simulated time after the step, s.
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Identify { .. } => "identify",
            Cmd::Oracle { .. } => "oracle",
            Cmd::Compare { .. } => "compare",
            Cmd::ValidateClosedLoop { .. } => "validate-closed-loop",
        }
    }
}

fn out_dir(common: &Common, cmd: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| {
        let root = std::env::var_os("IMBENCH_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("imbench-out"));
        root.join(cmd)
    })
}

fn load_config(common: &Common) -> Result<CampaignConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.torque_source {
        cfg.torque_source = t;
    }
    Ok(cfg)
}

fn strategies(common: &Common) -> Vec<Strategy> {
    if common.strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        Strategy::ALL.into_iter().filter(|s| common.strategies.contains(s)).collect()
    }
}

fn write_table(w: &mut ArtifactWriter, rel: &str, t: &Table) -> Result<(), CliError> {
    w.write(rel, t.to_text().as_bytes())
}

fn run(cli: &Cli, out: &Path) -> Result<(), CliError> {
    let c = &cli.common;
    let exec = if c.sequential { Exec::Sequential } else { Exec::Parallel };
    match &cli.cmd {
        Cmd::Identify { logs } => {
            let mut cfg = load_config(c)?;
            cfg.write_logs |= *logs;
            let r = identify(&cfg, &strategies(c), out, exec)?;
            println!("{} artifacts written to {}", r.manifest.entries.len(), out.display());
        }
        Cmd::Oracle { speeds, taus } => {
            let cfg = load_config(c)?;
            let speeds = if speeds.is_empty() { cfg.grid.speeds.clone() } else { speeds.clone() };
            let taus = if taus.is_empty() { default_torques(&cfg) } else { taus.clone() };
            let res = run_oracle(&cfg, &speeds, &taus, exec)?;
            let mut w = ArtifactWriter::new(out)?;
            write_table(&mut w, "oracle.csv", &oracle_table(&res))?;
            write_table(&mut w, "oracle_contours.csv", &contour_table(&res))?;
            w.finish()?;
            for r in &res {
                match (r.max_eta, r.min_current) {
                    (Some(e), Some(m)) => println!(
                        "ω {:8.3}  τ {:7.3}  max η {:.4} at ({:.3}, {:.3})  min ‖i‖ {:.4} at ({:.3}, {:.3})",
                        r.speed,
                        r.tau,
                        e.eta.unwrap_or(f64::NAN),
                        e.i_sd,
                        e.i_sq,
                        m.i_norm(),
                        m.i_sd,
                        m.i_sq
                    ),
                    _ => println!("ω {:8.3}  τ {:7.3}  unreachable", r.speed, r.tau),
                }
            }
        }
        Cmd::Compare { artifacts, check } => {
            let a = load_artifacts(artifacts)?;
            let wanted = strategies(c);
            let luts: Vec<_> = a.luts.into_iter().filter(|l| wanted.contains(&l.strategy)).collect();
            let rep = efficiency_report(&a.maps, &luts)?;
            let mut w = ArtifactWriter::new(out)?;
            for s in 0..rep.speeds.len() {
                write_table(&mut w, &format!("efficiency_s{s}.csv"), &rep.speed_table(s))?;
            }
            write_table(&mut w, "gap.csv", &rep.gap_table())?;
            let summary = rep.summary();
            w.write("report.txt", summary.as_bytes())?;
            w.finish()?;
            print!("{summary}");
            let bad = rep.check();
            for b in &bad {
                eprintln!("check: {b}");
            }
            if *check && !bad.is_empty() {
                return Err(CliError::Acceptance(bad.join("; ")));
            }
        }
        Cmd::ValidateClosedLoop { artifacts, speed, tau, duration } => {
            let a = load_artifacts(artifacts)?;
            let want = c.strategies.first().copied().unwrap_or(Strategy::Mept);
            let lut = a
                .luts
                .iter()
                .find(|l| l.strategy == want)
                .ok_or_else(|| CliError::MissingArtifact(artifacts.join(identify::lut_path(want))))?;
            let r = a.config.plant.rated;
            let speed = speed.unwrap_or(0.5 * r.omega_m_n);
            let tau = tau.unwrap_or(0.5 * r.torque_n);
            if !(*duration >= 0.1) {
                return Err(CliError::Config(format!("duration must be ≥ 0.1 s, got {duration}")));
            }
            let rep = validate_closed_loop(&a.config.plant, &a.config.controller, lut, speed, tau, *duration)?;
            let mut t = Table::new("imbench-closed-loop", 1);
            t.set_f64("speed", rep.speed);
            t.set_f64("tau_ref", rep.tau_ref);
            t.set_f64("tau_measured", rep.tau_measured);
            t.set_f64("settling_time", rep.settling_time);
            t.push_column("t", rep.trace.iter().map(|p| p.0).collect());
            t.push_column("tau", rep.trace.iter().map(|p| p.1).collect());
            let mut w = ArtifactWriter::new(out)?;
            write_table(&mut w, "closed_loop.csv", &t)?;
            w.write("closed_loop.txt", rep.summary().as_bytes())?;
            w.finish()?;
            print!("{}", rep.summary());
            if !rep.pass() {
                return Err(CliError::Acceptance(format!(
                    "torque error {:.3}% / settling {:.3} s",
                    100.0 * rep.rel_error,
                    rep.settling_time
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = out_dir(&cli.common, cli.cmd.name());
    match run(&cli, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("imbench {}: {e}", cli.cmd.name());
            let report = ErrorReport::new(cli.cmd.name(), &e).to_json();
            let _ = imbench_util::fsx::write_atomic(&out.join("error.json"), report.as_bytes());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
