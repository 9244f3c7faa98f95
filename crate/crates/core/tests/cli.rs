use std::path::Path;
use std::process::{Command, Output};

use pairwave::cli::DEFAULT_CONFIG;

fn pairwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairwave"))
        .args(args)
        .env_remove("PAIRWAVE_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Closed-system config at n_max = 1, cheap enough for whole grids.
fn fast_config(dir: &Path, extra: &str) -> String {
    let text = DEFAULT_CONFIG
        .replace("n_max = 2", "n_max = 1")
        .replace("[dissipation]\nenabled = true", "[dissipation]\nenabled = false");
    let path = dir.join("fast.toml");
    std::fs::write(&path, format!("{text}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

const GRID: &str = "\n[[sweep.axes]]\nparam = \"c1\"\nvalues = [10.0, 12.0]\n\
                    [[sweep.axes]]\nparam = \"omega_mhz\"\nvalues = [80.0, 100.0, 120.0]\n";

#[test]
fn analytic_at_t_op_gives_epr_amplitudes() {
    let o = pairwave(&["analytic", "--t-op"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let pairs: Vec<&str> = out.lines().filter(|l| l.starts_with("pair")).collect();
    assert_eq!(pairs.len(), 2);
    for line in pairs {
        assert!(line.contains("|10> 0.707106781+0i"), "{line}");
        assert!(line.contains("|01> 0+0.707106781i"), "{line}");
    }
}

#[test]
fn validate_reports_every_ratio() {
    let o = pairwave(&["validate", "--config", "default"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("Delta1/g1") && out.contains("pair separation 1-2"));
    assert!(out.trim_end().ends_with("overall: warn"), "{out}");
    let o = pairwave(&["validate", "--set", "omega_mhz=200"]);
    assert!(stdout(&o).contains("overall: fail"));
}

#[test]
fn simulate_default_prints_fidelities() {
    let o = pairwave(&["simulate", "--config", "default"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for key in ["F_joint", "F_pair1", "F_pair2", "t_op_ns"] {
        let line = out.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("{key} in {out}"));
        let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(value.is_finite() && value > 0.0);
    }
}

#[test]
fn simulate_refuses_hard_failures_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path(), "");
    let o = pairwave(&["simulate", "--config", &cfg, "--set", "omega_mhz=200"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Delta1/Omega"));
    let o = pairwave(&["simulate", "--config", &cfg, "--set", "omega_mhz=200", "--force"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn user_errors_exit_with_one() {
    assert_eq!(pairwave(&["--frobnicate"]).status.code(), Some(1));
    assert_eq!(pairwave(&["simulate", "--set", "c1"]).status.code(), Some(1));
    assert_eq!(pairwave(&["sweep"]).status.code(), Some(1));
    assert_eq!(pairwave(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, DEFAULT_CONFIG.replace("omega_mhz = 100.0", "")).unwrap();
    let o = pairwave(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pulse.omega_mhz"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_csv_and_svg_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path(), GRID);
    let csv = dir.path().join("grid.csv");
    let svg = dir.path().join("grid.svg");
    let o = pairwave(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--no-timing",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("optimum: c1 = "));
    let first = std::fs::read(&csv).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("c1,c2,omega_mhz,gcs_ratio,"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("</svg>"));
    // No temporary files are left next to the outputs.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 3);

    let o = Command::new(env!("CARGO_BIN_EXE_pairwave"))
        .args(["sweep", "--config", &cfg, "--out", csv.to_str().unwrap(), "--no-timing"])
        .env("PAIRWAVE_WORKERS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), first);

    let o = pairwave(&["sweep", "--config", &cfg, "--out", "/nonexistent/dir/grid.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn preset_drive_grid_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast_config(dir.path(), "");
    let csv = dir.path().join("fig.csv");
    let o = pairwave(&["sweep", "--config", &cfg, "--fig5", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 21 * 16);
}

#[test]
fn oracle_checks_pass() {
    let o = pairwave(&["oracle"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with(" ok")).count(), 3);
}
