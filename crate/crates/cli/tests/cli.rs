use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use imbench_cli::*;
use imbench_util::table::Table;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_imbench");

fn imbench(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("IMBENCH_OUT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn small_campaign(dir: &Path, seed: u64, noise: f64) {
    fs::write(
        dir.join("campaign.toml"),
        format!("seed = {seed}\ntorque_noise_std = {noise}\ngrid = \"grid.toml\"\n"),
    )
    .unwrap();
    fs::write(dir.join("grid.toml"), "m = 4\nn = 9\nhold_time = 1.0\nspeeds = [120.0, 240.0]\n").unwrap();
}

/// One noisy identification shared by the read-only tests.
fn identified() -> &'static (TempDir, Output) {
    static RUN: OnceLock<(TempDir, Output)> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        small_campaign(dir.path(), 11, 0.01);
        let o = imbench(&["--config", "campaign.toml", "--out", "art", "identify"], dir.path());
        (dir, o)
    })
}

fn art() -> std::path::PathBuf {
    let (dir, o) = identified();
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.path().join("art")
}

#[test]
fn identify_writes_maps_tables_and_manifest() {
    let root = art();
    let m = Manifest::load(&root).unwrap();
    let paths: Vec<&str> = m.entries.iter().map(|(p, _)| p.as_str()).collect();
    for p in ["maps/maps_s0.csv", "maps/maps_s1.csv", "luts/mept.csv", "luts/vhz_std.csv", "advisory.json", "config/campaign.toml"] {
        assert!(paths.contains(&p), "{p} missing from {paths:?}");
    }
    assert_eq!(paths.iter().filter(|p| p.starts_with("luts/")).count(), 5);
    assert!(m.verify(&root).is_empty());
    assert_eq!(fs::read_to_string(root.join("advisory.json")).unwrap().trim(), "{}");
    // The snapshot is itself a loadable campaign.
    let again = CampaignConfig::load(&root.join("config/campaign.toml")).unwrap();
    assert_eq!(again.seed, 11);
    assert_eq!(again.grid.speeds, vec![120.0, 240.0]);
}

#[test]
fn same_seed_gives_identical_hashes_and_a_new_seed_does_not() {
    let dir = TempDir::new().unwrap();
    small_campaign(dir.path(), 11, 0.01);
    let o = imbench(&["--config", "campaign.toml", "--out", "again", "identify"], dir.path());
    assert_eq!(code(&o), 0);
    let a = Manifest::load(&art()).unwrap();
    let b = Manifest::load(&dir.path().join("again")).unwrap();
    assert_eq!(a, b);
    let o = imbench(&["--config", "campaign.toml", "--seed", "12", "--out", "other", "identify"], dir.path());
    assert_eq!(code(&o), 0);
    let c = Manifest::load(&dir.path().join("other")).unwrap();
    let hash = |m: &Manifest, p: &str| m.entries.iter().find(|e| e.0 == p).unwrap().1.clone();
    assert_ne!(hash(&a, "maps/maps_s0.csv"), hash(&c, "maps/maps_s0.csv"));
}

#[test]
fn compare_reports_map_efficiency_at_table_points() {
    let (dir, _) = identified();
    let root = art();
    let o = imbench(&["--out", "cmp", "compare", "--artifacts", root.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = load_artifacts(&root).unwrap();
    let t = Table::parse(&fs::read_to_string(dir.path().join("cmp/efficiency_s1.csv")).unwrap()).unwrap();
    let m = &a.maps[1];
    let mept = a.luts.iter().find(|l| l.strategy == imbench_lut::Strategy::Mept).unwrap();
    let mut checked = 0;
    for (i, &tau) in t.column("tau").unwrap().iter().enumerate() {
        let q = imbench_lut::lut_query(mept, tau, m.speed);
        let direct = map_eta(m, q.i_sd, q.i_sq);
        let reported = t.column("eta_mept").unwrap()[i];
        if direct.is_finite() {
            assert!((direct - reported).abs() < 1e-9);
            checked += 1;
        } else {
            assert!(reported.is_nan());
        }
    }
    assert!(checked > 3);
    // Read-only: the artifact tree still matches its manifest.
    assert!(Manifest::load(&root).unwrap().verify(&root).is_empty());
}

#[test]
fn strategy_filter_and_torque_source_reach_the_tables() {
    let dir = TempDir::new().unwrap();
    small_campaign(dir.path(), 1, 0.0);
    let o = imbench(
        &["--config", "campaign.toml", "--out", "r", "--torque-source", "reconstructed", "--strategy", "mept", "--strategy", "cf", "identify"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = load_artifacts(&dir.path().join("r")).unwrap();
    let names: Vec<String> = a.luts.iter().map(|l| l.strategy.to_string()).collect();
    assert_eq!(names, ["cf", "mept"]);
    assert!(a.luts.iter().all(|l| l.torque_source == imbench_maps::TorqueSource::Reconstructed));
}

#[test]
fn config_errors_exit_2_with_a_report() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.toml"), "bogus = 1\n").unwrap();
    let o = imbench(&["--config", "bad.toml", "--out", "e", "identify"], dir.path());
    assert_eq!(code(&o), 2);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e/error.json")).unwrap()).unwrap();
    assert_eq!(r["kind"], "config");
    assert_eq!(r["exit_code"], 2);

    let o = imbench(&["--config", "nope.toml", "--out", "e", "identify"], dir.path());
    assert_eq!(code(&o), 2);
    fs::write(dir.path().join("short.toml"), "grid = \"g.toml\"\n").unwrap();
    fs::write(dir.path().join("g.toml"), "hold_time = 0.001\n").unwrap();
    assert_eq!(code(&imbench(&["--config", "short.toml", "--out", "e", "identify"], dir.path())), 2);
    let o = imbench(&["--out", "e", "compare", "--artifacts", "missing"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn tampered_artifacts_are_rejected() {
    let dir = TempDir::new().unwrap();
    let copy = dir.path().join("copy");
    fs::create_dir_all(copy.join("maps")).unwrap();
    let root = art();
    for (p, _) in Manifest::load(&root).unwrap().entries {
        fs::create_dir_all(copy.join(&p).parent().unwrap()).unwrap();
        fs::copy(root.join(&p), copy.join(&p)).unwrap();
    }
    fs::copy(root.join("manifest.txt"), copy.join("manifest.txt")).unwrap();
    assert!(load_artifacts(&copy).is_ok());
    let lut = copy.join("luts/cf.csv");
    let text = fs::read_to_string(&lut).unwrap();
    fs::write(&lut, text.replacen("cf", "cf ", 1)).unwrap();
    let o = imbench(&["--out", "e", "compare", "--artifacts", "copy"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn unreachable_validation_point_is_a_numerical_failure() {
    let (dir, _) = identified();
    let root = art();
    let o = imbench(
        &["--out", "v", "validate-closed-loop", "--artifacts", root.to_str().unwrap(), "--speed", "240", "--tau", "10.05"],
        dir.path(),
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn validation_writes_a_trace_and_reports_pass_or_fail_by_exit_code() {
    let (dir, _) = identified();
    let root = art();
    let o = imbench(&["--out", "v2", "validate-closed-loop", "--artifacts", root.to_str().unwrap(), "--speed", "120", "--tau", "3"], dir.path());
    let text = fs::read_to_string(dir.path().join("v2/closed_loop.txt")).unwrap();
    let passed = text.contains("PASS");
    assert_eq!(code(&o), if passed { 0 } else { 4 }, "{text}");
    assert!(Table::parse(&fs::read_to_string(dir.path().join("v2/closed_loop.csv")).unwrap()).unwrap().n_rows() > 100);
}

#[test]
fn oracle_honours_the_output_root_variable() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(BIN)
        .args(["oracle", "--speed", "150", "--tau", "5"])
        .current_dir(dir.path())
        .env("IMBENCH_OUT", dir.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::parse(&fs::read_to_string(dir.path().join("root/oracle/oracle.csv")).unwrap()).unwrap();
    assert_eq!(t.n_rows(), 1);
    assert!(t.column("eta_max").unwrap()[0] > 0.8);
}
