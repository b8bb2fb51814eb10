//! Explicit time stepping of `∂u/∂t = F(D²u)` with the boundary projection
//! `h̃(Du) = 0` applied after every interior update.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Matrix2;

use crate::discretization::{build_grid, differentiate, Field, Grid, JetField, Resolution};
use crate::error::{Error, Result};
use crate::geometry::{pushforward_quadratic, ConvexDomain, Point};
use crate::monitors::{self, EstimateReport, MonitorRow};

#[derive(Clone, Debug, PartialEq)]
pub struct StepControl {
    /// CFL safety factor `σ ∈ (0, 1]`.
    pub sigma: f64,
    pub tol_converge: f64,
    pub tol_boundary: f64,
    pub boundary_max_iter: usize,
    pub max_steps: usize,
    /// Monitor row and estimate report every `report_every` steps.
    pub report_every: usize,
    pub max_halvings: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            sigma: 0.5,
            tol_converge: 1e-6,
            tol_boundary: 1e-12,
            boundary_max_iter: 50,
            max_steps: 2_000_000,
            report_every: 1,
            max_halvings: 10,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::InvalidInput(format!("CFL safety factor {} outside (0, 1]", self.sigma)));
        }
        for (name, v) in [("tol_c", self.tol_converge), ("tol_b", self.tol_boundary)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be positive")));
            }
        }
        if self.boundary_max_iter == 0 || self.report_every == 0 {
            return Err(Error::InvalidInput("iteration counts must be positive".into()));
        }
        Ok(())
    }
}

/// Initial data `u₀ = ½(x−x_c)ᵀA(x−x_c) + bᵀx (+ ε·bump)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Quadratic { a: Matrix2<f64>, b: Point, x_c: Point },
    Perturbed { a: Matrix2<f64>, b: Point, x_c: Point, eps: f64, center: Point, width: f64 },
}

/// `exp(1 − 1/(1 − r²))` for `r = |p − center|/width < 1`, zero outside.
pub fn bump(p: &Point, center: &Point, width: f64) -> f64 {
    let r2 = (p - center).norm_squared() / (width * width);
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

impl Generator {
    pub fn quadratic_part(&self) -> (&Matrix2<f64>, &Point, &Point) {
        match self {
            Generator::Quadratic { a, b, x_c } | Generator::Perturbed { a, b, x_c, .. } => (a, b, x_c),
        }
    }

    pub fn value(&self, p: &Point) -> f64 {
        let (a, b, x_c) = self.quadratic_part();
        let d = p - x_c;
        let q = 0.5 * d.dot(&(a * d)) + b.dot(p);
        match self {
            Generator::Quadratic { .. } => q,
            Generator::Perturbed { eps, center, width, .. } => q + eps * bump(p, center, *width),
        }
    }

    /// Restricts the generator to the first coordinate for 1D runs.
    fn for_dim(&self, n: usize) -> Generator {
        if n == 2 {
            return self.clone();
        }
        let line = |m: &Matrix2<f64>| Matrix2::new(m[(0, 0)], 0.0, 0.0, 0.0);
        let pt = |p: &Point| Point::new(p[0], 0.0);
        match self {
            Generator::Quadratic { a, b, x_c } => Generator::Quadratic { a: line(a), b: pt(b), x_c: pt(x_c) },
            Generator::Perturbed { a, b, x_c, eps, center, width } => Generator::Perturbed {
                a: line(a),
                b: pt(b),
                x_c: pt(x_c),
                eps: *eps,
                center: pt(center),
                width: *width,
            },
        }
    }
}

/// Reference values fixed by the initial slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baseline {
    /// `Θ₀ = max F(D²u₀)`.
    pub theta0: f64,
    pub lambda1_min: f64,
    pub oblique_min: f64,
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub omega: ConvexDomain,
    pub omega_tilde: ConvexDomain,
    pub field: Field,
    pub jets: JetField,
    pub baseline: Baseline,
    pub steps: usize,
    pub dt_history: Vec<f64>,
    pub converged: bool,
    pub c_estimate: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProjectionReport {
    pub max_residual: f64,
    pub max_iterations: usize,
    /// Columns where `h̃(Du)` was not decreasing in the ghost value at the root.
    pub non_monotone: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub halvings: usize,
    pub projection: ProjectionReport,
}

/// Larger root of a concave scalar function (decreasing through the root) by
/// Newton's method, falling back to bisection once the root is bracketed.
/// Returns `(root, iterations, decreasing at root)`.
fn solve_decreasing(
    f: impl Fn(f64) -> (f64, f64),
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<(f64, usize, bool), (f64, usize)> {
    let mut x = x0;
    let (mut lo, mut hi): (Option<f64>, Option<f64>) = (None, None);
    let mut expand = 1e-3 * x0.abs().max(1.0);
    let mut last = f64::INFINITY;
    for it in 0..max_iter {
        let (fx, dfx) = f(x);
        last = fx;
        if fx.abs() <= tol {
            // one polishing step, kept only if it helps
            if dfx < 0.0 {
                let xp = x - fx / dfx;
                let (fp, dfp) = f(xp);
                if fp.abs() < fx.abs() {
                    return Ok((xp, it + 1, dfp < 0.0));
                }
            }
            return Ok((x, it, dfx < 0.0));
        }
        // anything not on the decreasing branch below zero lies left of the root
        if fx < 0.0 && dfx < 0.0 {
            hi = Some(x);
        } else {
            lo = Some(x);
        }
        let newton = (dfx < 0.0 && dfx.is_finite()).then(|| x - fx / dfx);
        x = match (lo, hi, newton) {
            (Some(l), Some(h), Some(xn)) if (xn - l) * (xn - h) < 0.0 => xn,
            (Some(l), Some(h), _) => 0.5 * (l + h),
            (_, _, Some(xn)) => xn,
            (Some(l), None, None) => {
                expand *= 2.0;
                l + expand
            }
            (None, _, None) => unreachable!("points without a decreasing slope are classified left"),
        };
    }
    Err((last.abs(), max_iter))
}

/// Sets every ghost so that `h̃(Du) = 0` at its boundary point, interior values fixed.
pub fn enforce_boundary(
    field: &mut Field,
    omega_tilde: &ConvexDomain,
    tol: f64,
    max_iter: usize,
) -> Result<ProjectionReport> {
    let parts = field.grid().boundary_gradient_parts(&field.values);
    let mut report = ProjectionReport::default();
    for (column, (base, dir)) in parts.into_iter().enumerate() {
        let eval = |g: f64| {
            let jet = omega_tilde.eval(&(base + g * dir));
            (jet.h, jet.grad.dot(&dir))
        };
        match solve_decreasing(eval, field.ghosts[column], tol, max_iter) {
            Ok((g, iterations, monotone)) => {
                field.ghosts[column] = g;
                report.max_iterations = report.max_iterations.max(iterations);
                report.max_residual = report.max_residual.max(eval(g).0.abs());
                if !monotone {
                    report.non_monotone.push(column);
                }
            }
            Err((residual, iterations)) => return Err(Error::Projection { column, residual, iterations }),
        }
    }
    Ok(report)
}

/// Largest boundary residual `max_k |h̃(Du)|` of a field as it stands.
pub fn boundary_residual(field: &Field, omega_tilde: &ConvexDomain) -> f64 {
    field
        .grid()
        .boundary_gradient_parts(&field.values)
        .iter()
        .zip(&field.ghosts)
        .map(|((base, dir), g)| omega_tilde.h(&(base + *g * dir)).abs())
        .fold(0.0, f64::max)
}

pub fn init_state(
    omega: &ConvexDomain,
    omega_tilde: Option<&ConvexDomain>,
    generator: &Generator,
    resolution: Resolution,
    control: &StepControl,
) -> Result<FlowState> {
    control.validate()?;
    let n = omega.dim();
    let generator = generator.for_dim(n);
    let (a, b, x_c) = generator.quadratic_part();
    let omega_tilde = match omega_tilde {
        Some(t) => {
            if t.dim() != n {
                return Err(Error::InvalidInput("Ω and Ω̃ have different dimensions".into()));
            }
            t.clone()
        }
        None => pushforward_quadratic(omega, a, b, x_c)?,
    };
    if let Generator::Perturbed { center, width, .. } = &generator {
        check_bump_support(omega, center, *width)?;
    }
    let grid = Arc::new(build_grid(omega, resolution)?);
    let field = Field::from_fn(grid, 0.0, |p| generator.value(p));
    state_from_field(omega, &omega_tilde, field, control)
}

fn check_bump_support(omega: &ConvexDomain, center: &Point, width: f64) -> Result<()> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidInput(format!("bump width {width} must be positive")));
    }
    if bump_fits(omega, center, width) {
        Ok(())
    } else {
        Err(Error::InvalidInput("bump support is not strictly inside Ω".into()))
    }
}

/// Whether the closed support of [`bump`] lies strictly inside `omega`.
pub fn bump_fits(omega: &ConvexDomain, center: &Point, width: f64) -> bool {
    if omega.dim() == 1 {
        omega.contains(&Point::new(center[0] - width, 0.0)) && omega.contains(&Point::new(center[0] + width, 0.0))
    } else {
        (0..256).all(|i| {
            let phi = 2.0 * PI * i as f64 / 256.0;
            omega.contains(&(center + width * Point::new(phi.cos(), phi.sin())))
        })
    }
}

/// Builds a flow state from arbitrary initial values: projects the ghosts,
/// gates convexity and compatibility, and fixes the baseline.
pub fn state_from_field(
    omega: &ConvexDomain,
    omega_tilde: &ConvexDomain,
    mut field: Field,
    control: &StepControl,
) -> Result<FlowState> {
    let n = omega.dim();
    let projection = enforce_boundary(&mut field, omega_tilde, control.tol_boundary, control.boundary_max_iter)
        .map_err(|e| Error::Incompatible(format!("boundary projection of the initial data failed: {e}")))?;
    if projection.max_residual > control.tol_boundary {
        return Err(Error::Incompatible(format!(
            "max |h̃(Du₀)| = {:e} on the boundary exceeds tol_b",
            projection.max_residual
        )));
    }
    let jets = differentiate(&field);
    let (node, min_eigenvalue) = jets.min_eigenvalue();
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NonConvex { node, min_eigenvalue });
    }
    let theta0 = jets.max_phase();
    if !(theta0 < n as f64 * PI / 2.0) {
        return Err(Error::InvalidInput(format!("Θ₀ = {theta0} is not below nπ/2")));
    }
    let oblique = monitors::obliqueness_of(&field, omega_tilde);
    let baseline = Baseline { theta0, lambda1_min: min_eigenvalue, oblique_min: oblique.direct_min };
    Ok(FlowState {
        omega: omega.clone(),
        omega_tilde: omega_tilde.clone(),
        c_estimate: jets.mean_phase(),
        field,
        jets,
        baseline,
        steps: 0,
        dt_history: Vec::new(),
        converged: false,
    })
}

impl FlowState {
    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    pub fn time(&self) -> f64 {
        self.field.t
    }

    /// `dt = σ·Δ_min²/(2n)`.
    pub fn cfl_dt(&self, control: &StepControl) -> f64 {
        let h = self.grid().cfl_spacing();
        control.sigma * h * h / (2.0 * self.dim() as f64)
    }

    /// Spatial oscillation test on `F` and on `u̇ = F` about its mean.
    pub fn is_converged(&self, tol: f64) -> bool {
        let mean = self.jets.mean_phase();
        let dev = self.jets.jets.iter().map(|j| (j.phase - mean).abs()).fold(0.0, f64::max);
        self.jets.phase_oscillation() <= tol && dev <= tol
    }

    pub fn step(&mut self, control: &StepControl) -> Result<StepInfo> {
        let mut dt = self.cfl_dt(control);
        let outer_phase: Vec<f64> = match self.grid().as_polar() {
            Some(p) => {
                let base = (p.ns() - 1) * p.nphi();
                (0..p.nphi()).map(|k| self.jets.jets[base + k].phase).collect()
            }
            None => vec![self.jets.jets[0].phase, self.jets.jets[self.jets.jets.len() - 1].phase],
        };
        let mut reason = String::new();
        for halvings in 0..=control.max_halvings {
            let mut trial = self.field.clone();
            for (u, jet) in trial.values.iter_mut().zip(&self.jets.jets) {
                *u += dt * jet.phase;
            }
            for (g, f) in trial.ghosts.iter_mut().zip(&outer_phase) {
                *g += dt * f;
            }
            trial.t += dt;
            let projection = match enforce_boundary(
                &mut trial,
                &self.omega_tilde,
                control.tol_boundary,
                control.boundary_max_iter,
            ) {
                Ok(p) => p,
                Err(e) => {
                    reason = e.to_string();
                    dt *= 0.5;
                    continue;
                }
            };
            let jets = differentiate(&trial);
            let (node, lambda1) = jets.min_eigenvalue();
            if !(lambda1 > 0.0) {
                reason = format!("convexity lost: λ₁ = {lambda1:e} at node {node}");
                dt *= 0.5;
                continue;
            }
            self.field = trial;
            self.jets = jets;
            self.steps += 1;
            self.dt_history.push(dt);
            self.c_estimate = self.jets.mean_phase();
            return Ok(StepInfo { dt, halvings, projection });
        }
        Err(Error::Aborted {
            step: self.steps + 1,
            reason: format!("{} dt halvings exhausted; last failure: {reason}", control.max_halvings),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: FlowState,
    pub c: f64,
    pub converged: bool,
    pub rows: Vec<MonitorRow>,
    pub reports: Vec<EstimateReport>,
}

/// Steps until the phase is spatially constant within `tol_c`, or `max_steps`.
/// `observer` sees every accepted state.
pub fn run_with(
    mut state: FlowState,
    control: &StepControl,
    mut observer: impl FnMut(&FlowState),
) -> Result<RunOutcome> {
    control.validate()?;
    let tol_mon = monitors::monitor_tolerance(state.grid());
    let mut rows = vec![monitors::monitor_row(&state, 0.0)];
    let mut reports = vec![monitors::estimate_report(&state, tol_mon, control.tol_boundary)];
    observer(&state);
    let osc0 = state.jets.phase_oscillation();
    let mut converged = state.is_converged(control.tol_converge);
    while !converged && state.steps < control.max_steps {
        let info = state.step(control)?;
        converged = state.is_converged(control.tol_converge);
        if state.steps % control.report_every == 0 || converged {
            rows.push(monitors::monitor_row(&state, info.dt));
            reports.push(monitors::estimate_report(&state, tol_mon, control.tol_boundary));
        }
        observer(&state);
        let osc = state.jets.phase_oscillation();
        if osc0 > 0.0 && osc > 10.0 * osc0 {
            return Err(Error::Aborted {
                step: state.steps,
                reason: format!("phase oscillation grew from {osc0:e} to {osc:e}"),
            });
        }
    }
    if rows.last().map(|r| r.step) != Some(state.steps) {
        let dt = state.dt_history.last().copied().unwrap_or(0.0);
        rows.push(monitors::monitor_row(&state, dt));
        reports.push(monitors::estimate_report(&state, tol_mon, control.tol_boundary));
    }
    state.converged = converged;
    state.c_estimate = state.jets.mean_phase();
    Ok(RunOutcome { c: state.c_estimate, converged, state, rows, reports })
}

pub fn run(state: FlowState, control: &StepControl) -> Result<RunOutcome> {
    run_with(state, control, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};
    use approx::assert_abs_diff_eq;

    fn interval(a: f64, b: f64) -> ConvexDomain {
        make_domain(&DomainSpec::Interval { a, b }).unwrap()
    }

    fn unit_disc() -> ConvexDomain {
        make_domain(&DomainSpec::Disc { center: Point::zeros(), radius: 1.0 }).unwrap()
    }

    fn quad(a: Matrix2<f64>, b: Point) -> Generator {
        Generator::Quadratic { a, b, x_c: Point::zeros() }
    }

    fn line(a: f64) -> Matrix2<f64> {
        Matrix2::new(a, 0.0, 0.0, 0.0)
    }

    #[test]
    fn init_disc_quadratic() {
        let s = init_state(
            &unit_disc(),
            None,
            &quad(Matrix2::identity(), Point::zeros()),
            Resolution::Polar { ns: 8, nphi: 16 },
            &StepControl::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(s.baseline.theta0, PI / 2.0, epsilon = 1e-10);
        assert!(s.baseline.theta0 < PI);
        assert_abs_diff_eq!(s.omega_tilde.shape(), unit_disc().shape(), epsilon = 1e-15);
    }

    #[test]
    fn init_interval_pushforward() {
        let s = init_state(
            &interval(0.0, 1.0),
            None,
            &quad(line(2.0), Point::new(1.0, 0.0)),
            Resolution::Interval(10),
            &StepControl::default(),
        )
        .unwrap();
        assert_eq!(s.omega_tilde.interval(), Some((1.0, 3.0)));
        assert_abs_diff_eq!(s.baseline.theta0, 2.0f64.atan(), epsilon = 1e-12);
    }

    #[test]
    fn init_rejects_nonconvex_perturbation() {
        let g = Generator::Perturbed {
            a: line(2.0),
            b: Point::new(1.0, 0.0),
            x_c: Point::zeros(),
            eps: 1.0,
            center: Point::new(0.5, 0.0),
            width: 0.2,
        };
        let err = init_state(&interval(0.0, 1.0), None, &g, Resolution::Interval(50), &StepControl::default());
        assert!(matches!(err, Err(Error::NonConvex { .. })), "{err:?}");
    }

    #[test]
    fn init_rejects_unreachable_target() {
        let far = make_domain(&DomainSpec::Disc { center: Point::new(10.0, 0.0), radius: 1.0 }).unwrap();
        let err = init_state(
            &unit_disc(),
            Some(&far),
            &quad(Matrix2::identity(), Point::zeros()),
            Resolution::Polar { ns: 8, nphi: 16 },
            &StepControl::default(),
        );
        assert!(matches!(err, Err(Error::Incompatible(_))), "{err:?}");
    }

    #[test]
    fn init_rejects_bump_touching_boundary() {
        let g = Generator::Perturbed {
            a: Matrix2::identity(),
            b: Point::zeros(),
            x_c: Point::zeros(),
            eps: 1e-3,
            center: Point::new(0.8, 0.0),
            width: 0.3,
        };
        let err = init_state(&unit_disc(), None, &g, Resolution::Polar { ns: 8, nphi: 16 }, &StepControl::default());
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn projection_reproduces_exact_steady_ghosts_1d() {
        let omega = interval(0.0, 1.0);
        let g = Arc::new(build_grid(&omega, Resolution::Interval(10)).unwrap());
        let mut f = Field::from_fn(g, 0.0, |p| 0.5 * p[0] * p[0]);
        let exact = f.ghosts.clone();
        f.ghosts = vec![0.3, -0.2];
        let report = enforce_boundary(&mut f, &omega, 1e-12, 50).unwrap();
        assert!(report.non_monotone.is_empty());
        assert_abs_diff_eq!(f.ghosts[0], exact[0], epsilon = 1e-12);
        assert_abs_diff_eq!(f.ghosts[1], exact[1], epsilon = 1e-12);
        let bj = crate::discretization::boundary_jets(&f);
        assert_abs_diff_eq!(bj[0].jet.grad[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bj[1].jet.grad[0], 1.0, epsilon = 1e-12);
        assert!(boundary_residual(&f, &omega) <= 1e-12);
    }

    #[test]
    fn projection_is_a_fixed_point_on_compatible_quadratic() {
        let d = unit_disc();
        let g = Arc::new(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap());
        let mut f = Field::from_fn(g, 0.0, |p| 0.5 * p.norm_squared());
        let before = f.ghosts.clone();
        assert!(boundary_residual(&f, &d) <= 1e-12);
        enforce_boundary(&mut f, &d, 1e-12, 50).unwrap();
        for (a, b) in before.iter().zip(&f.ghosts) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // knock one ghost off and project again
        f.ghosts[5] += 0.1;
        enforce_boundary(&mut f, &d, 1e-12, 50).unwrap();
        assert_abs_diff_eq!(f.ghosts[5], before[5], epsilon = 1e-11);
        assert!(boundary_residual(&f, &d) <= 1e-12);
    }

    #[test]
    fn cfl_arithmetic_1d() {
        let s = init_state(
            &interval(0.0, 1.0),
            None,
            &quad(line(1.0), Point::zeros()),
            Resolution::Interval(10),
            &StepControl::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(s.cfl_dt(&StepControl::default()), 0.0025, epsilon = 1e-15);
    }

    #[test]
    fn one_step_on_quadratic_fixed_point() {
        let control = StepControl::default();
        let mut s = init_state(
            &unit_disc(),
            None,
            &quad(Matrix2::identity(), Point::zeros()),
            Resolution::Polar { ns: 8, nphi: 16 },
            &control,
        )
        .unwrap();
        let u0 = s.field.values.clone();
        let grads0: Vec<Point> = s.jets.jets.iter().map(|j| j.grad).collect();
        let info = s.step(&control).unwrap();
        for (i, u) in s.field.values.iter().enumerate() {
            assert_abs_diff_eq!(*u, u0[i] + info.dt * PI / 2.0, epsilon = 1e-13);
            assert_abs_diff_eq!(s.jets.jets[i].grad, grads0[i], epsilon = 1e-11);
        }
    }

    #[test]
    fn one_step_1d_constant_phase() {
        let control = StepControl::default();
        let mut s = init_state(
            &interval(0.0, 1.0),
            None,
            &Generator::Quadratic { a: line(2.0), b: Point::new(1.0, 0.0), x_c: Point::zeros() },
            Resolution::Interval(10),
            &control,
        )
        .unwrap();
        let u0 = s.field.values.clone();
        let info = s.step(&control).unwrap();
        assert_abs_diff_eq!(info.dt, 0.0025, epsilon = 1e-15);
        for (i, u) in s.field.values.iter().enumerate() {
            assert_abs_diff_eq!(*u, u0[i] + 0.0025 * 2.0f64.atan(), epsilon = 1e-13);
        }
    }

    #[test]
    fn fixed_point_converges_at_step_zero() {
        let s = init_state(
            &unit_disc(),
            None,
            &quad(Matrix2::new(2.0, 0.0, 0.0, 1.0), Point::zeros()),
            Resolution::Polar { ns: 8, nphi: 16 },
            &StepControl::default(),
        )
        .unwrap();
        let out = run(s, &StepControl::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.state.steps, 0);
        assert_abs_diff_eq!(out.c, 2.0f64.atan() + PI / 4.0, epsilon = 1e-10);
    }

    #[test]
    fn perturbed_1d_run_converges_to_arctan_two() {
        let control = StepControl { tol_converge: 1e-7, ..StepControl::default() };
        let g = Generator::Perturbed {
            a: line(2.0),
            b: Point::new(1.0, 0.0),
            x_c: Point::zeros(),
            eps: 0.01,
            center: Point::new(0.4, 0.0),
            width: 0.25,
        };
        let s = init_state(&interval(0.0, 1.0), None, &g, Resolution::Interval(40), &control).unwrap();
        let out = run(s, &control).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.c, 2.0f64.atan(), epsilon = 1e-5);
        assert!(out.reports.iter().all(|r| r.all_passed()), "{:?}", out.reports.iter().find(|r| !r.all_passed()));
    }

    #[test]
    fn control_validation() {
        assert!(StepControl { sigma: 1.5, ..StepControl::default() }.validate().is_err());
        assert!(StepControl { sigma: 0.0, ..StepControl::default() }.validate().is_err());
        assert!(StepControl { tol_boundary: -1.0, ..StepControl::default() }.validate().is_err());
        assert!(StepControl::default().validate().is_ok());
    }

    #[test]
    fn solver_finds_the_decreasing_root_from_the_wrong_side() {
        // concave with roots 0 and 2; start left of the crest
        let f = |x: f64| (1.0 - (x - 1.0) * (x - 1.0), -2.0 * (x - 1.0));
        let (x, _, monotone) = solve_decreasing(f, -5.0, 1e-12, 200).unwrap();
        assert_abs_diff_eq!(x, 2.0, epsilon = 1e-12);
        assert!(monotone);
    }
}
