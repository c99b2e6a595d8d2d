use std::path::Path;
use std::process::{Command, Output};

fn bloch_cat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bloch-cat")).args(args).output().expect("failed to launch binary")
}

fn run_dirs(root: &Path) -> Vec<std::path::PathBuf> {
    std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect()
}

#[test]
fn bands_writes_tables_and_record() {
    let out = tempfile::tempdir().unwrap();
    let o = bloch_cat(&["bands", "--out", out.path().to_str().unwrap(), "--gnuplot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = run_dirs(out.path());
    assert_eq!(dirs.len(), 1);
    let dir = &dirs[0];
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("fig1-"));
    for f in ["bands_spin0.csv", "bands_spin1.csv", "record.json", "plot.gp"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let header = std::fs::read_to_string(dir.join("bands_spin1.csv")).unwrap();
    assert!(header.starts_with("q,E_0,E_1,E_2\n"));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let b1 = summary["spins"][1]["band_width"].as_f64().unwrap();
    assert!((b1 - 0.2642).abs() < 0.01 * 0.2642, "{b1}");
}

#[test]
fn identical_configs_share_a_directory() {
    let out = tempfile::tempdir().unwrap();
    let p = out.path().to_str().unwrap();
    let a = bloch_cat(&["semiclassical", "--out", p]);
    let b = bloch_cat(&["semiclassical", "--out", p]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run_dirs(out.path()).len(), 1);
    let c = bloch_cat(&["semiclassical", "--out", p, "--override", "lattice.depth=4"]);
    assert!(c.status.success());
    assert_eq!(run_dirs(out.path()).len(), 2);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "[lattice]\ndepth = 3.0\n").unwrap();
    let o = bloch_cat(&["config", "--config", path.to_str().unwrap(), "--override", "evolution.force=0.01"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("depth = 3.0"), "{text}");
    assert!(text.contains("force = 0.01"), "{text}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[lattice]\nVm = 3.0\n").unwrap();
    assert_eq!(bloch_cat(&["config", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bloch_cat(&["config", "--override", "evolution.force=0"]).status.code(), Some(2));
    assert_eq!(bloch_cat(&["run", "--scenario", "nonsense"]).status.code(), Some(2));
    assert_eq!(bloch_cat(&["bands", "--scenario", "cat"]).status.code(), Some(2));
    let out = tempfile::tempdir().unwrap();
    let coarse = bloch_cat(&["evolve", "--out", out.path().to_str().unwrap(), "--override", "grid.points_per_site=8"]);
    assert_eq!(coarse.status.code(), Some(2));
}

#[test]
fn domain_overflow_exits_4() {
    let out = tempfile::tempdir().unwrap();
    let o = bloch_cat(&[
        "evolve",
        "--out",
        out.path().to_str().unwrap(),
        "--override",
        "grid.sites=64",
        "--override",
        "grid.points_per_site=16",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn convergence_failure_exits_3() {
    let out = tempfile::tempdir().unwrap();
    let o = bloch_cat(&[
        "convergence",
        "--out",
        out.path().to_str().unwrap(),
        "--override",
        "convergence.sites=64",
        "--override",
        "convergence.fraction=0.02",
        "--override",
        "grid.points_per_site=16",
        "--override",
        "evolution.dt=2.0",
        "--override",
        "evolution.splitting=strang",
        "--override",
        "convergence.com_tolerance=1e-12",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = run_dirs(out.path());
    assert!(dirs[0].join("record.json").exists());
}

#[test]
fn small_evolution_run() {
    let out = tempfile::tempdir().unwrap();
    let o = bloch_cat(&[
        "cat",
        "--out",
        out.path().to_str().unwrap(),
        "--threads",
        "1",
        "--override",
        "grid.sites=64",
        "--override",
        "grid.points_per_site=16",
        "--override",
        "evolution.force=0.05",
        "--override",
        "evolution.samples=32",
        "--override",
        "evolution.dt=0.2",
        "--override",
        "coherence.azimuths=8",
        "--override",
        "coherence.dephased_samples=8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary["separation_half_period"].as_f64().unwrap() > 0.0);
    assert!(summary["visibility"].as_f64().is_some());
    let dir = &run_dirs(out.path())[0];
    for f in ["separation.csv", "fidelity.csv", "visibility.csv", "series_spin0.csv", "snapshot_spin1_06.csv"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
}
