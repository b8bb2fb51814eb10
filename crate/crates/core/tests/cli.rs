use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lagflow::monitors::read_rows;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    repo().join("configs").join(name)
}

fn lagflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagflow")).args(args).env_remove("LAGFLOW_OUT").output().expect("spawning lagflow")
}

fn run(mode: &str, cfg: &Path, out: &Path, sets: &[&str]) -> Output {
    let mut args = vec![mode, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    for s in sets {
        args.extend(["--set", s]);
    }
    lagflow(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sigma_above_one_is_rejected_at_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "omega.kind = disc\ncontrol.sigma = 1.5\n").unwrap();
    let o = run("flow", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert!(!dir.path().join("out/monitors.csv").exists());

    let o = run("flow", &config("disc_quadratic.conf"), &dir.path().join("out"), &["control.sigma=1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn parse_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "# comment\nomega.kind = disc\ngrid.ns 16\n").unwrap();
    let o = run("flow", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn steady_disc_to_disc_reports_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("steady", &config("steady_disc.conf"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("steady_report.json")).unwrap()).unwrap();
    assert!((report["c"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    assert_eq!(report["converged"], true);
    assert!(dir.path().join("steady_field.txt").exists());
}

#[test]
fn quadratic_flow_writes_well_formed_svg_and_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow");
    let o = run("flow", &config("disc_quadratic.conf"), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(out.join("field_final.svg")).unwrap();
    assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<g>").count(), svg.matches("</g>").count());
    assert_eq!(svg.matches("data-level").count(), 10);
    let rows = read_rows(&out.join("monitors.csv")).unwrap();
    assert!(rows.last().unwrap().osc_f <= 1e-6);

    let replay = dir.path().join("replay");
    let monitors = out.join("monitors.csv");
    let o = run("monitor-replay", &config("disc_quadratic.conf"), &replay, &[&format!("replay.monitors={}", monitors.display())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(out.join("monitor_flags.csv")).unwrap(), std::fs::read(replay.join("monitor_flags.csv")).unwrap());
}

#[test]
fn interval_flow_is_deterministic_and_writes_a_profile() {
    let dir = tempfile::tempdir().unwrap();
    let sets = ["grid.n=40", "control.report_every=200"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run("flow", &config("interval.conf"), out, &sets);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let csv = std::fs::read(a.join("monitors.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("monitors.csv")).unwrap());
    assert!(String::from_utf8_lossy(&csv).starts_with(
        "step,t,dt,minF,maxF,oscF,lambda1_min,lambda1_max,oblique_min,hess_min,hess_max,bc_residual_max\n"
    ));
    let rows = read_rows(&a.join("monitors.csv")).unwrap();
    assert!(rows.last().unwrap().osc_f <= 1e-6);
    let profile = std::fs::read_to_string(a.join("field_final_profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("x,u,du,d2u,F"));
    assert_eq!(profile.lines().count(), 42);
}

#[test]
fn output_directory_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lagflow"))
        .args(["steady", "--config", config("steady_disc.conf").to_str().unwrap()])
        .env("LAGFLOW_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("steady_report.json").exists());
}

#[test]
fn fabricated_violations_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow");
    assert!(run("flow", &config("disc_quadratic.conf"), &out, &[]).status.success());

    // a row whose maximum phase exceeds the initial maximum by far more than tol_mon (≈0.04 here)
    let text = std::fs::read_to_string(out.join("monitors.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[1].split(',').map(String::from).collect();
    cols[0] = "1".into();
    cols[4] = format!("{}", cols[4].parse::<f64>().unwrap() + 0.5);
    lines.push(cols.join(","));
    let bad = dir.path().join("bad_monitors.csv");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = run("monitor-replay", &config("disc_quadratic.conf"), &dir.path().join("r1"), &[&format!("replay.monitors={}", bad.display())]);
    assert_eq!(o.status.code(), Some(1));

    // clean slice replays clean; the same slice with a shifted ghost does not
    let field = out.join("field_final.txt");
    let o = run("monitor-replay", &config("disc_quadratic.conf"), &dir.path().join("r2"), &[&format!("replay.field={}", field.display())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let dump = std::fs::read_to_string(&field).unwrap();
    let mut lines: Vec<String> = dump.lines().map(String::from).collect();
    let ghost = lines.len() - 5;
    let mut cols: Vec<String> = lines[ghost].split_whitespace().map(String::from).collect();
    let v = cols.last().unwrap().parse::<f64>().unwrap() + 0.05;
    *cols.last_mut().unwrap() = v.to_string();
    lines[ghost] = cols.join(" ");
    let bad = dir.path().join("bad_field.txt");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = run("monitor-replay", &config("disc_quadratic.conf"), &dir.path().join("r3"), &[&format!("replay.field={}", bad.display())]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r3/replay_report.json")).unwrap()).unwrap();
    assert_eq!(report["bc_ok"], false);
    assert_eq!(report["tangential_ok"], false);
}
