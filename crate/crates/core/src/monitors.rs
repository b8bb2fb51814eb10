//! Runtime audit of the a priori estimates on flow slices.
//!
//! Every bound is checked with the slack `tol_mon = 1e-8 + 10·Δ²`, `Δ` the
//! physical mesh size, except the boundary quantities which use `tol_b`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::{boundary_jets, eigen_sym, Field, Grid, JetField};
use crate::error::{Error, Result};
use crate::flow::{boundary_residual, Baseline, FlowState};
use crate::geometry::ConvexDomain;

pub fn monitor_tolerance(grid: &Grid) -> f64 {
    let h = grid.mesh_size();
    1e-8 + 10.0 * h * h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub t: f64,
    pub tol_mon: f64,
    pub tol_b: f64,

    pub theta0: f64,
    pub theta0_below_cap: bool,

    pub phase_min: f64,
    pub phase_max: f64,
    pub phase_bounds: bool,

    pub lambda1_min: f64,
    pub lambda1_max: f64,
    /// `tan(Θ₀/n)`.
    pub lambda1_cap: f64,
    pub lambda1_bound: bool,
    pub convex: bool,

    pub trace_min: f64,
    pub trace_max: f64,
    /// `1/(1 + tan²(Θ₀/n))`.
    pub trace_floor: f64,
    pub trace_bounds: bool,

    /// `min h̃(Du)` over nodes.
    pub confinement_min: f64,
    pub gradient_confined: bool,

    pub oblique_min: f64,
    pub oblique_identity_min: f64,
    pub oblique_discrepancy: f64,
    pub oblique_floor: bool,

    pub hess_min: f64,
    pub hess_max: f64,
    pub hessian_pinched: bool,

    pub tangential_residual: Option<f64>,
    pub tangential_ok: bool,

    pub bc_residual_max: f64,
    pub bc_ok: bool,
}

impl EstimateReport {
    /// Names of the flags that failed.
    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("theta0_below_cap", self.theta0_below_cap),
            ("phase_bounds", self.phase_bounds),
            ("lambda1_bound", self.lambda1_bound),
            ("convex", self.convex),
            ("trace_bounds", self.trace_bounds),
            ("gradient_confined", self.gradient_confined),
            ("oblique_floor", self.oblique_floor),
            ("hessian_pinched", self.hessian_pinched),
            ("tangential_ok", self.tangential_ok),
            ("bc_ok", self.bc_ok),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }

    pub fn all_passed(&self) -> bool {
        self.failures().is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obliqueness {
    /// `⟨h̃_p(Du), ν⟩` per boundary column.
    pub direct: Vec<f64>,
    /// `√(ν·(D²u)⁻¹ν · h̃_p·D²u·h̃_p)` per boundary column, NaN where the Hessian is singular.
    pub identity: Vec<f64>,
    pub direct_min: f64,
    pub identity_min: f64,
    pub max_discrepancy: f64,
    pub singular: bool,
}

pub fn obliqueness_of(field: &Field, omega_tilde: &ConvexDomain) -> Obliqueness {
    let n = field.dim();
    let mut out = Obliqueness {
        direct: Vec::new(),
        identity: Vec::new(),
        direct_min: f64::INFINITY,
        identity_min: f64::INFINITY,
        max_discrepancy: 0.0,
        singular: false,
    };
    for bj in boundary_jets(field) {
        let beta = omega_tilde.eval(&bj.jet.grad).grad;
        let nu = bj.point.normal;
        let direct = beta.dot(&nu);
        let hess = &bj.jet.hess;
        let identity = if bj.jet.spectrum.min() > 0.0 {
            let inv_nn = if n == 1 {
                nu[0] * nu[0] / hess[(0, 0)]
            } else {
                let inv = hess.try_inverse().expect("positive definite");
                nu.dot(&(inv * nu))
            };
            (inv_nn * beta.dot(&(hess * beta))).sqrt()
        } else {
            out.singular = true;
            f64::NAN
        };
        out.direct_min = out.direct_min.min(direct);
        out.identity_min = out.identity_min.min(identity);
        out.max_discrepancy = out.max_discrepancy.max((direct - identity).abs());
        out.direct.push(direct);
        out.identity.push(identity);
    }
    if out.singular {
        out.identity_min = f64::NAN;
        out.max_discrepancy = f64::NAN;
    }
    out
}

pub fn obliqueness(state: &FlowState) -> Obliqueness {
    obliqueness_of(&state.field, &state.omega_tilde)
}

/// Largest tangential derivative of `h̃(Du)` along the boundary ring, `None` in 1D.
pub fn boundary_tangential_of(field: &Field, omega_tilde: &ConvexDomain) -> Option<f64> {
    let grid = field.grid();
    grid.as_polar()?;
    let parts = grid.boundary_gradient_parts(&field.values);
    let h: Vec<f64> = parts.iter().zip(&field.ghosts).map(|((b, d), g)| omega_tilde.h(&(b + *g * d))).collect();
    let m = h.len();
    let pts: Vec<_> = (0..m).map(|k| grid.boundary_point(k).position).collect();
    let worst = (0..m)
        .map(|k| {
            let (prev, next) = ((k + m - 1) % m, (k + 1) % m);
            (h[next] - h[prev]).abs() / (pts[next] - pts[prev]).norm()
        })
        .fold(0.0, f64::max);
    Some(worst)
}

pub fn boundary_tangential_check(state: &FlowState) -> Option<f64> {
    boundary_tangential_of(&state.field, &state.omega_tilde)
}

/// Audits one slice against the bounds implied by `baseline`.
pub fn estimate_slice(
    field: &Field,
    jets: &JetField,
    omega_tilde: &ConvexDomain,
    baseline: &Baseline,
    tol_mon: f64,
    tol_b: f64,
) -> EstimateReport {
    let n = jets.n;
    let nf = n as f64;
    let theta0 = baseline.theta0;
    let cap = (theta0 / nf).tan();
    let trace_floor = 1.0 / (1.0 + cap * cap);

    let (mut phase_min, mut phase_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut l1_min, mut l1_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut hess_min, mut hess_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut tr_min, mut tr_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut confinement_min = f64::INFINITY;
    for jet in &jets.jets {
        phase_min = phase_min.min(jet.phase);
        phase_max = phase_max.max(jet.phase);
        l1_min = l1_min.min(jet.spectrum.min());
        l1_max = l1_max.max(jet.spectrum.min());
        hess_min = hess_min.min(jet.spectrum.min());
        hess_max = hess_max.max(jet.spectrum.max());
        let tr = (0..n).map(|i| jet.metric[(i, i)]).sum::<f64>();
        tr_min = tr_min.min(tr);
        tr_max = tr_max.max(tr);
        confinement_min = confinement_min.min(omega_tilde.h(&jet.grad));
    }
    for bj in boundary_jets(field) {
        let spec = eigen_sym(&bj.jet.hess, n);
        hess_min = hess_min.min(spec.min());
        hess_max = hess_max.max(spec.max());
    }

    let ob = obliqueness_of(field, omega_tilde);
    let tangential = boundary_tangential_of(field, omega_tilde);
    let bc = boundary_residual(field, omega_tilde);

    EstimateReport {
        t: field.t,
        tol_mon,
        tol_b,
        theta0,
        theta0_below_cap: theta0 < nf * std::f64::consts::FRAC_PI_2,
        phase_min,
        phase_max,
        phase_bounds: phase_min >= -tol_mon && phase_max <= theta0 + tol_mon,
        lambda1_min: l1_min,
        lambda1_max: l1_max,
        lambda1_cap: cap,
        lambda1_bound: l1_max <= cap + tol_mon,
        convex: l1_min > 0.0,
        trace_min: tr_min,
        trace_max: tr_max,
        trace_floor,
        trace_bounds: tr_min >= trace_floor - tol_mon && tr_max <= nf + tol_mon,
        confinement_min,
        gradient_confined: confinement_min >= -tol_b,
        oblique_min: ob.direct_min,
        oblique_identity_min: ob.identity_min,
        oblique_discrepancy: ob.max_discrepancy,
        oblique_floor: !ob.singular && ob.direct_min > 0.0 && ob.direct_min >= 0.5 * baseline.oblique_min,
        hess_min,
        hess_max,
        hessian_pinched: l1_min >= 0.5 * baseline.lambda1_min && hess_max.is_finite(),
        tangential_ok: tangential.map_or(true, |r| r <= 10.0 * tol_b),
        tangential_residual: tangential,
        bc_residual_max: bc,
        bc_ok: bc <= tol_b,
    }
}

pub fn estimate_report(state: &FlowState, tol_mon: f64, tol_b: f64) -> EstimateReport {
    estimate_slice(&state.field, &state.jets, &state.omega_tilde, &state.baseline, tol_mon, tol_b)
}

pub const CSV_HEADER: &str =
    "step,t,dt,minF,maxF,oscF,lambda1_min,lambda1_max,oblique_min,hess_min,hess_max,bc_residual_max";

/// One line of `monitors.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub osc_f: f64,
    pub lambda1_min: f64,
    pub lambda1_max: f64,
    pub oblique_min: f64,
    pub hess_min: f64,
    pub hess_max: f64,
    pub bc_residual_max: f64,
}

pub fn monitor_row(state: &FlowState, dt: f64) -> MonitorRow {
    let n = state.dim();
    let jets = &state.jets;
    let l1 = jets.jets.iter().map(|j| j.spectrum.min());
    let mut hess_min = l1.clone().fold(f64::INFINITY, f64::min);
    let mut hess_max = jets.jets.iter().map(|j| j.spectrum.max()).fold(f64::NEG_INFINITY, f64::max);
    for bj in boundary_jets(&state.field) {
        let spec = eigen_sym(&bj.jet.hess, n);
        hess_min = hess_min.min(spec.min());
        hess_max = hess_max.max(spec.max());
    }
    MonitorRow {
        step: state.steps,
        t: state.time(),
        dt,
        min_f: jets.min_phase(),
        max_f: jets.max_phase(),
        osc_f: jets.phase_oscillation(),
        lambda1_min: l1.clone().fold(f64::INFINITY, f64::min),
        lambda1_max: l1.fold(f64::NEG_INFINITY, f64::max),
        oblique_min: obliqueness(state).direct_min,
        hess_min,
        hess_max,
        bc_residual_max: boundary_residual(&state.field, &state.omega_tilde),
    }
}

impl MonitorRow {
    fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.dt,
            self.min_f,
            self.max_f,
            self.osc_f,
            self.lambda1_min,
            self.lambda1_max,
            self.oblique_min,
            self.hess_min,
            self.hess_max,
            self.bc_residual_max,
        ]
    }
}

pub fn format_rows(rows: &[MonitorRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        write!(out, "{}", r.step).unwrap();
        for v in r.values() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_rows(text: &str) -> Result<Vec<MonitorRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "missing monitors.csv header".into() }),
    }
    let mut rows = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: ln + 1, message };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 12 {
            return Err(err(format!("expected 12 columns, found {}", cols.len())));
        }
        let step = cols[0].trim().parse().map_err(|_| err(format!("bad step {:?}", cols[0])))?;
        let mut v = [0.0; 11];
        for (slot, c) in v.iter_mut().zip(&cols[1..]) {
            *slot = c.trim().parse().map_err(|_| err(format!("not a number: {c:?}")))?;
        }
        rows.push(MonitorRow {
            step,
            t: v[0],
            dt: v[1],
            min_f: v[2],
            max_f: v[3],
            osc_f: v[4],
            lambda1_min: v[5],
            lambda1_max: v[6],
            oblique_min: v[7],
            hess_min: v[8],
            hess_max: v[9],
            bc_residual_max: v[10],
        });
    }
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[MonitorRow]) -> Result<()> {
    std::fs::write(path, format_rows(rows)).map_err(|e| Error::io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<MonitorRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rows(&text)
}

/// Pass/fail flags recomputable from a monitor row and its predecessor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowFlags {
    pub step: usize,
    pub theta0_below_cap: bool,
    pub phase_bounds: bool,
    pub lambda1_bound: bool,
    pub convex: bool,
    pub oblique_floor: bool,
    pub hessian_pinched: bool,
    pub bc_ok: bool,
    pub max_nonincreasing: bool,
    pub min_nondecreasing: bool,
}

impl RowFlags {
    pub fn all_passed(&self) -> bool {
        self.theta0_below_cap
            && self.phase_bounds
            && self.lambda1_bound
            && self.convex
            && self.oblique_floor
            && self.hessian_pinched
            && self.bc_ok
            && self.max_nonincreasing
            && self.min_nondecreasing
    }
}

pub const FLAGS_HEADER: &str =
    "step,theta0_below_cap,phase_bounds,lambda1_bound,convex,oblique_floor,hessian_pinched,bc_ok,max_nonincreasing,min_nondecreasing";

/// Audits a monitor trajectory; the first row is the baseline.
pub fn audit_rows(rows: &[MonitorRow], n: usize, tol_mon: f64, tol_b: f64) -> Vec<RowFlags> {
    let Some(first) = rows.first() else { return Vec::new() };
    let nf = n as f64;
    let theta0 = first.max_f;
    let cap = (theta0 / nf).tan();
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let prev = if i == 0 { r } else { &rows[i - 1] };
            RowFlags {
                step: r.step,
                theta0_below_cap: theta0 < nf * std::f64::consts::FRAC_PI_2,
                phase_bounds: r.min_f >= -tol_mon && r.max_f <= theta0 + tol_mon,
                lambda1_bound: r.lambda1_max <= cap + tol_mon,
                convex: r.lambda1_min > 0.0,
                oblique_floor: r.oblique_min > 0.0 && r.oblique_min >= 0.5 * first.oblique_min,
                hessian_pinched: r.lambda1_min >= 0.5 * first.lambda1_min && r.hess_max.is_finite(),
                bc_ok: r.bc_residual_max <= tol_b,
                max_nonincreasing: r.max_f <= prev.max_f + tol_mon,
                min_nondecreasing: r.min_f >= prev.min_f - tol_mon,
            }
        })
        .collect()
}

pub fn format_flags(flags: &[RowFlags]) -> String {
    let mut out = String::from(FLAGS_HEADER);
    out.push('\n');
    for f in flags {
        let b = |v: bool| u8::from(v);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            f.step,
            b(f.theta0_below_cap),
            b(f.phase_bounds),
            b(f.lambda1_bound),
            b(f.convex),
            b(f.oblique_floor),
            b(f.hessian_pinched),
            b(f.bc_ok),
            b(f.max_nonincreasing),
            b(f.min_nondecreasing)
        )
        .unwrap();
    }
    out
}
