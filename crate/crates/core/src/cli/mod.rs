//! Configuration-driven runs: `flow`, `steady`, `legendre-check`, `monitor-replay`.
//!
//! Every mode writes into one output directory and returns whether the run
//! passed: converged (where that applies) with every monitor flag clean.

pub mod config;
pub mod export;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

pub use config::{ConfigMap, LegendreOptions, Mode, RunConfig};

use crate::discretization::{build_grid, differentiate, read_field, write_field, Field};
use crate::error::{Error, Result};
use crate::flow::{init_state, run_with, FlowState};
use crate::legendre::{
    dual_boundary_residual, dual_flow_residual, hessian_inverse_check, involution_error, legendre_transform, LegendreReport,
};
use crate::monitors::{self, audit_rows, estimate_slice, format_flags, write_rows, EstimateReport, RowFlags};
use crate::steady::{solve_steady, steady_1d_closed_form};

#[derive(Clone, Debug)]
pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

struct Out {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Out {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Out { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        export::write_text(&p, text)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let p = self.path(name);
        export::write_json(&p, value)
    }

    fn field(&mut self, name: &str, field: &Field) -> Result<()> {
        let p = self.path(name);
        write_field(&p, field)
    }

    /// Final-slice artifacts: dump, plus a profile (1D) or contour plot (2D).
    fn slice(&mut self, stem: &str, field: &Field, svg: bool) -> Result<()> {
        self.field(&format!("{stem}.txt"), field)?;
        if field.dim() == 1 {
            self.text(&format!("{stem}_profile.csv"), &export::profile_csv(field)?)
        } else if svg {
            self.text(&format!("{stem}.svg"), &export::contour_svg(field)?)
        } else {
            Ok(())
        }
    }
}

fn initial_state(cfg: &RunConfig) -> Result<FlowState> {
    init_state(&cfg.omega, cfg.omega_tilde.as_ref(), &cfg.generator, cfg.resolution, &cfg.control)
}

fn failed_slices(reports: &[EstimateReport]) -> Vec<serde_json::Value> {
    reports
        .iter()
        .filter(|r| !r.all_passed())
        .map(|r| json!({ "t": r.t, "failures": r.failures() }))
        .collect()
}

/// Runs `mode` (or the configured one) and writes its artifacts under `out`.
pub fn execute(mode: Option<Mode>, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mode = mode.or(cfg.mode).ok_or_else(|| Error::InvalidInput("no mode given on the command line or in the config".into()))?;
    let mut out = Out::new(out)?;
    let (passed, lines) = match mode {
        Mode::Flow => flow_mode(cfg, &mut out)?,
        Mode::Steady => steady_mode(cfg, &mut out)?,
        Mode::LegendreCheck => legendre_mode(cfg, &mut out)?,
        Mode::MonitorReplay => replay_mode(cfg, &mut out)?,
    };
    Ok(Outcome { passed, lines, files: out.files })
}

fn flow_mode(cfg: &RunConfig, out: &mut Out) -> Result<(bool, Vec<String>)> {
    let state = initial_state(cfg)?;
    let n = state.dim();
    let tol_mon = monitors::monitor_tolerance(state.grid());
    let mut dump_error = None;
    let dumps = cfg.dump_every;
    let outcome = run_with(state, &cfg.control, |s| {
        if dumps > 0 && s.steps % dumps == 0 && dump_error.is_none() {
            if let Err(e) = out.field(&format!("field_{:08}.txt", s.steps), &s.field) {
                dump_error = Some(e);
            }
        }
    })?;
    if let Some(e) = dump_error {
        return Err(e);
    }
    let p = out.path("monitors.csv");
    write_rows(&p, &outcome.rows)?;
    let flags = audit_rows(&outcome.rows, n, tol_mon, cfg.control.tol_boundary);
    out.text("monitor_flags.csv", &format_flags(&flags))?;
    out.slice("field_final", &outcome.state.field, cfg.svg)?;

    let flags_ok = flags.iter().all(RowFlags::all_passed);
    let failed = failed_slices(&outcome.reports);
    let passed = outcome.converged && flags_ok && failed.is_empty();
    out.json(
        "estimates.json",
        &json!({ "final": outcome.reports.last(), "slices": outcome.reports.len(), "failed_slices": failed }),
    )?;
    out.json(
        "summary.json",
        &json!({
            "mode": "flow",
            "converged": outcome.converged,
            "c": outcome.c,
            "steps": outcome.state.steps,
            "t": outcome.state.time(),
            "osc_f": outcome.state.jets.phase_oscillation(),
            "monitor_flags_passed": flags_ok,
            "estimate_reports_passed": failed.is_empty(),
            "passed": passed,
        }),
    )?;
    let lines = vec![
        format!("converged: {} after {} steps, t = {}", outcome.converged, outcome.state.steps, outcome.state.time()),
        format!("c = {:.12}, osc F = {:e}", outcome.c, outcome.state.jets.phase_oscillation()),
        format!("monitor flags: {}, estimate reports: {}", pass(flags_ok), pass(failed.is_empty())),
    ];
    Ok((passed, lines))
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn steady_mode(cfg: &RunConfig, out: &mut Out) -> Result<(bool, Vec<String>)> {
    let state = initial_state(cfg)?;
    let guess = match &cfg.steady_guess {
        Some(path) => read_field(path)?.into_field(state.grid().clone())?,
        None => state.field.clone(),
    };
    let sol = solve_steady(&state.omega_tilde, &guess, &cfg.steady)?;
    let mut report = serde_json::to_value(sol.report()).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut lines = vec![
        format!("converged: {} after {} Newton iterations", sol.converged, sol.iterations),
        format!("c = {:.12}, max residual = {:e}", sol.c, sol.max_residual()),
    ];
    if let (Some((a, b)), Some((ta, tb))) = (cfg.omega.interval(), state.omega_tilde.interval()) {
        let exact = steady_1d_closed_form(a, b, ta, tb)?;
        report["closed_form_c"] = json!(exact.c);
        lines.push(format!("closed-form c = {:.12}", exact.c));
    }
    if let Some(f) = &sol.failure {
        lines.push(format!("failure: {f}"));
    }
    out.json("steady_report.json", &report)?;
    out.slice("steady_field", &sol.field, cfg.svg)?;
    Ok((sol.converged, lines))
}

fn legendre_mode(cfg: &RunConfig, out: &mut Out) -> Result<(bool, Vec<String>)> {
    let mut state = initial_state(cfg)?;
    let tol_mon = monitors::monitor_tolerance(state.grid());
    let tol_b = cfg.control.tol_boundary;
    let LegendreOptions { t_start, gap, tol } = cfg.legendre;
    let mut slices = Vec::with_capacity(2);
    let mut reports_ok = true;
    for target in [t_start, t_start + gap] {
        while state.time() < target {
            if state.steps >= cfg.control.max_steps {
                return Err(Error::Aborted { step: state.steps, reason: format!("max_steps reached before t = {target}") });
            }
            state.step(&cfg.control)?;
        }
        reports_ok &= monitors::estimate_report(&state, tol_mon, tol_b).all_passed();
        slices.push(state.field.clone());
    }
    let target = Arc::new(build_grid(&state.omega_tilde, cfg.resolution)?);
    let dual = legendre_transform(&slices[0], target.clone())?;
    let report = LegendreReport {
        t: slices[0].t,
        involution: involution_error(&slices[0], &dual)?,
        hessian_inverse: hessian_inverse_check(&slices[0], &dual),
        dual_flow: Some(dual_flow_residual(&slices, target)?),
        dual_boundary_max: dual_boundary_residual(&dual, state.grid()),
        extrapolated: dual.extrapolated_count(),
    };
    out.json("legendre_report.json", &report)?;
    out.field("dual_field.txt", &dual.field)?;
    let residual = report.dual_flow.map_or(f64::INFINITY, |d| d.max);
    let passed = reports_ok && residual <= tol;
    let lines = vec![
        format!("slices at t = {} and {}", slices[0].t, slices[1].t),
        format!("dual flow residual = {residual:e} (tolerance {tol:e}): {}", pass(residual <= tol)),
        format!("hessian inverse = {:e}, involution = {:e}", report.hessian_inverse.max, report.involution.max),
        format!("primal estimate reports: {}", pass(reports_ok)),
    ];
    Ok((passed, lines))
}

fn replay_mode(cfg: &RunConfig, out: &mut Out) -> Result<(bool, Vec<String>)> {
    if cfg.replay_monitors.is_none() && cfg.replay_field.is_none() {
        return Err(Error::InvalidInput("monitor-replay needs replay.monitors and/or replay.field".into()));
    }
    let grid = build_grid(&cfg.omega, cfg.resolution)?;
    let tol_mon = monitors::monitor_tolerance(&grid);
    let tol_b = cfg.control.tol_boundary;
    let mut passed = true;
    let mut lines = Vec::new();
    if let Some(path) = &cfg.replay_monitors {
        let rows = monitors::read_rows(path)?;
        let flags = audit_rows(&rows, grid.dim(), tol_mon, tol_b);
        out.text("monitor_flags.csv", &format_flags(&flags))?;
        let bad: Vec<usize> = flags.iter().filter(|f| !f.all_passed()).map(|f| f.step).collect();
        passed &= bad.is_empty();
        lines.push(format!("{} rows replayed, {} failing", rows.len(), bad.len()));
        if let Some(step) = bad.first() {
            lines.push(format!("first failing row: step {step}"));
        }
    }
    if let Some(path) = &cfg.replay_field {
        // the baseline comes from the configured initial data
        let state = initial_state(cfg)?;
        let field = read_field(path)?.into_field(state.grid().clone())?;
        let jets = differentiate(&field);
        let report = estimate_slice(&field, &jets, &state.omega_tilde, &state.baseline, tol_mon, tol_b);
        out.json("replay_report.json", &report)?;
        passed &= report.all_passed();
        lines.push(format!("slice at t = {}: {}", field.t, if report.all_passed() { "pass".to_string() } else { report.failures().join(", ") }));
    }
    Ok((passed, lines))
}
