//! Steady second boundary problem `F(D²u) = c` in `Ω`, `h̃(Du) = 0` on `∂Ω`:
//! closed form in 1D, damped Newton on the discrete system otherwise.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::Serialize;

use crate::discretization::{differentiate, Field, Grid};
use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::geometry::{ConvexDomain, Point};

/// `u(x) = ½k(x−a)² + ã(x−a)`, `k = (b̃−ã)/(b−a)`, `c = arctan k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm1d {
    pub a: f64,
    pub ta: f64,
    pub k: f64,
    pub c: f64,
}

pub fn steady_1d_closed_form(a: f64, b: f64, ta: f64, tb: f64) -> Result<ClosedForm1d> {
    if !(a < b) || !(ta < tb) || ![a, b, ta, tb].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput(format!("degenerate intervals ({a}, {b}) → ({ta}, {tb})")));
    }
    let k = (tb - ta) / (b - a);
    Ok(ClosedForm1d { a, ta, k, c: k.atan() })
}

impl ClosedForm1d {
    pub fn value(&self, x: f64) -> f64 {
        let d = x - self.a;
        0.5 * self.k * d * d + self.ta * d
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.k * (x - self.a) + self.ta
    }

    /// The closed form sampled on `grid`, residuals measured on the discrete
    /// system; the anchor stays at `u(a) = 0`.
    pub fn sample(&self, grid: Arc<Grid>, omega_tilde: &ConvexDomain) -> SteadySolution {
        let field = Field::from_fn(grid, 0.0, |p| self.value(p[0]));
        let (interior, boundary, _) = residual_parts(&field, self.c, omega_tilde);
        let anchor = self.value(self.a).abs();
        SteadySolution {
            field,
            c: self.c,
            iterations: 0,
            interior_residual: interior,
            boundary_residual: boundary,
            anchor_residual: anchor,
            converged: true,
            failure: None,
            history: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions { tol: 1e-10, max_iter: 50, max_halvings: 30 }
    }
}

#[derive(Clone, Debug)]
pub struct SteadySolution {
    pub field: Field,
    pub c: f64,
    pub iterations: usize,
    pub interior_residual: f64,
    pub boundary_residual: f64,
    pub anchor_residual: f64,
    pub converged: bool,
    pub failure: Option<String>,
    /// Euclidean residual norm after each accepted iterate, starting with the guess.
    pub history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteadyReport {
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
    pub interior_residual: f64,
    pub boundary_residual: f64,
    pub anchor_residual: f64,
    pub failure: Option<String>,
    pub history: Vec<f64>,
}

impl SteadySolution {
    pub fn report(&self) -> SteadyReport {
        SteadyReport {
            c: self.c,
            iterations: self.iterations,
            converged: self.converged,
            interior_residual: self.interior_residual,
            boundary_residual: self.boundary_residual,
            anchor_residual: self.anchor_residual,
            failure: self.failure.clone(),
            history: self.history.clone(),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.interior_residual.max(self.boundary_residual).max(self.anchor_residual)
    }
}

/// Residual vector `[F − c at nodes, h̃(Du) at columns, u(anchor)]`.
fn residual(field: &Field, c: f64, omega_tilde: &ConvexDomain) -> DVector<f64> {
    let grid = field.grid();
    let jets = differentiate(field);
    let parts = grid.boundary_gradient_parts(&field.values);
    let mut r = Vec::with_capacity(grid.node_count() + grid.ghost_count() + 1);
    r.extend(jets.jets.iter().map(|j| j.phase - c));
    r.extend(parts.iter().zip(&field.ghosts).map(|((b, d), g)| omega_tilde.h(&(b + *g * d))));
    r.push(field.values[grid.anchor_node()]);
    DVector::from_vec(r)
}

fn residual_parts(field: &Field, c: f64, omega_tilde: &ConvexDomain) -> (f64, f64, f64) {
    let r = residual(field, c, omega_tilde);
    let (n, g) = (field.grid().node_count(), field.grid().ghost_count());
    let max = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (max(&r.as_slice()[..n]), max(&r.as_slice()[n..n + g]), r[n + g].abs())
}

/// Sparse columns of the (linear) discrete Hessian and boundary gradient maps.
struct LinearMaps {
    /// Per unknown (nodes, then ghosts): `(node, ∂D²u_node)`.
    hess: Vec<Vec<(usize, Matrix2<f64>)>>,
    /// Per node unknown: `(column, ∂base_column)`.
    base: Vec<Vec<(usize, Point)>>,
    dir: Vec<Point>,
}

impl LinearMaps {
    fn new(grid: &Grid) -> Self {
        let (n, g) = (grid.node_count(), grid.ghost_count());
        let mut values = vec![0.0; n];
        let mut ghosts = vec![0.0; g];
        let mut hess = Vec::with_capacity(n + g);
        let mut base = Vec::with_capacity(n);
        let nonzero = |m: &Matrix2<f64>| m.iter().any(|v| *v != 0.0);
        for m in 0..n + g {
            if m < n {
                values[m] = 1.0;
            } else {
                ghosts[m - n] = 1.0;
            }
            let d = grid.derivatives(&values, &ghosts);
            hess.push(d.iter().enumerate().filter(|(_, d)| nonzero(&d.hess)).map(|(i, d)| (i, d.hess)).collect());
            if m < n {
                let parts = grid.boundary_gradient_parts(&values);
                base.push(parts.iter().enumerate().filter(|(_, (b, _))| b.norm() != 0.0).map(|(k, (b, _))| (k, *b)).collect());
                values[m] = 0.0;
            } else {
                ghosts[m - n] = 0.0;
            }
        }
        let dir = grid.boundary_gradient_parts(&values).into_iter().map(|(_, d)| d).collect();
        LinearMaps { hess, base, dir }
    }
}

fn jacobian(field: &Field, maps: &LinearMaps, omega_tilde: &ConvexDomain) -> DMatrix<f64> {
    let grid = field.grid();
    let (n, g) = (grid.node_count(), grid.ghost_count());
    let size = n + g + 1;
    let jets = differentiate(field);
    let parts = grid.boundary_gradient_parts(&field.values);
    let beta: Vec<Point> =
        parts.iter().zip(&field.ghosts).map(|((b, d), gh)| omega_tilde.eval(&(b + *gh * d)).grad).collect();
    let mut jac = DMatrix::zeros(size, size);
    for (m, col) in maps.hess.iter().enumerate() {
        for (i, w) in col {
            jac[(*i, m)] = (jets.jets[*i].metric * w).trace();
        }
    }
    for (m, col) in maps.base.iter().enumerate() {
        for (k, b) in col {
            jac[(n + k, m)] = beta[*k].dot(b);
        }
    }
    for k in 0..g {
        jac[(n + k, n + k)] = beta[k].dot(&maps.dir[k]);
    }
    for i in 0..n {
        jac[(i, size - 1)] = -1.0;
    }
    jac[(n + g, grid.anchor_node())] = 1.0;
    jac
}

/// The alternating angular pattern `(−1)^k` on every ring and the ghosts. With
/// `N_φ ≡ 0 (mod 4)` it is invisible to the discrete operator (above every
/// ring's mode cap, constant in `s`, even across the pole), so the Jacobian is
/// singular along it.
fn null_mode(grid: &Grid) -> Option<DVector<f64>> {
    let p = grid.as_polar()?;
    if p.nphi() % 4 != 0 {
        return None;
    }
    let (n, g) = (grid.node_count(), grid.ghost_count());
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut v = DVector::zeros(n + g + 1);
    for i in 0..n {
        v[i] = sign(i % p.nphi());
    }
    for k in 0..g {
        v[n + k] = sign(k);
    }
    Some(v.normalize())
}

/// Newton step `J δ = −r`, bordered by the null mode when there is one so that
/// the step carries no component along it.
fn newton_step(jac: DMatrix<f64>, r: &DVector<f64>, null: Option<&DVector<f64>>) -> Option<DVector<f64>> {
    let size = r.len();
    match null {
        None => jac.lu().solve(&(-r)),
        Some(v) => {
            let mut m = jac.resize(size + 1, size + 1, 0.0);
            m.view_mut((0, size), (size, 1)).copy_from(v);
            m.view_mut((size, 0), (1, size)).copy_from(&v.transpose());
            let mut rhs = DVector::zeros(size + 1);
            rhs.rows_mut(0, size).copy_from(&(-r));
            m.lu().solve(&rhs).map(|x| x.rows(0, size).into_owned())
        }
    }
}

/// Damped Newton on the augmented system with unknowns `(u, ghosts, c)`.
pub fn solve_steady(omega_tilde: &ConvexDomain, guess: &Field, options: &SteadyOptions) -> Result<SteadySolution> {
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(Error::InvalidInput("steady tolerance and iteration cap must be positive".into()));
    }
    let grid = guess.grid().clone();
    if omega_tilde.dim() != grid.dim() {
        return Err(Error::InvalidInput("Ω and Ω̃ have different dimensions".into()));
    }
    let jets = differentiate(guess);
    let (node, lambda1) = jets.min_eigenvalue();
    if !(lambda1 > 0.0) {
        return Err(Error::NonConvex { node, min_eigenvalue: lambda1 });
    }
    let (n, g) = (grid.node_count(), grid.ghost_count());
    let maps = LinearMaps::new(&grid);
    let null = null_mode(&grid);
    let mut field = guess.clone();
    let mut c = jets.mean_phase();
    let mut r = residual(&field, c, omega_tilde);
    let mut history = vec![r.norm()];
    let mut failure = None;
    let mut iterations = 0;
    while r.amax() > options.tol && iterations < options.max_iter {
        let jac = jacobian(&field, &maps, omega_tilde);
        let Some(step) = newton_step(jac, &r, null.as_ref()) else {
            failure = Some(format!("singular Jacobian at iteration {}", iterations + 1));
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let mut trial = field.clone();
            for (u, d) in trial.values.iter_mut().zip(step.rows(0, n).iter()) {
                *u += lambda * d;
            }
            for (u, d) in trial.ghosts.iter_mut().zip(step.rows(n, g).iter()) {
                *u += lambda * d;
            }
            let tc = c + lambda * step[n + g];
            if differentiate(&trial).min_eigenvalue().1 > 0.0 {
                let tr = residual(&trial, tc, omega_tilde);
                if tr.norm() < r.norm() {
                    accepted = Some((trial, tc, tr));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((f, tc, tr)) = accepted else {
            failure = Some(format!("line search stagnated at iteration {}", iterations + 1));
            break;
        };
        field = f;
        c = tc;
        r = tr;
        iterations += 1;
        history.push(r.norm());
    }
    let converged = r.amax() <= options.tol;
    if !converged && failure.is_none() {
        failure = Some(format!("no convergence in {} iterations", options.max_iter));
    }
    let max = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SteadySolution {
        interior_residual: max(&r.as_slice()[..n]),
        boundary_residual: max(&r.as_slice()[n..n + g]),
        anchor_residual: r[n + g].abs(),
        field,
        c,
        iterations,
        converged,
        failure,
        history,
    })
}

/// `(sup |D(u_flow − u_steady)|, |c_flow − c_steady|)` over all nodes.
pub fn compare_fields(flow: &Field, c_flow: f64, steady: &SteadySolution) -> Result<(f64, f64)> {
    if !flow.grid().same_discretization(steady.field.grid()) {
        return Err(Error::GridMismatch("flow and steady fields live on different grids".into()));
    }
    let (a, b) = (differentiate(flow), differentiate(&steady.field));
    let gap = a.jets.iter().zip(&b.jets).map(|(x, y)| (x.grad - y.grad).norm()).fold(0.0, f64::max);
    Ok((gap, (c_flow - steady.c).abs()))
}

pub fn compare_flow_vs_steady(flow: &FlowState, steady: &SteadySolution) -> Result<(f64, f64)> {
    compare_fields(&flow.field, flow.c_estimate, steady)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Resolution};
    use crate::flow::bump;
    use crate::geometry::{make_domain, pushforward_quadratic, DomainSpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn closed_forms() {
        let s = steady_1d_closed_form(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.c, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(s.derivative(0.0), 0.0);
        assert_abs_diff_eq!(s.derivative(1.0), 1.0);
        assert_abs_diff_eq!(s.value(0.5), 0.125);
        let s = steady_1d_closed_form(0.0, 1.0, 1.0, 3.0).unwrap();
        assert_eq!(s.k, 2.0);
        assert_abs_diff_eq!(s.c, 1.1071487177940904, epsilon = 1e-15);
        assert_abs_diff_eq!(s.derivative(0.0), 1.0);
        assert_abs_diff_eq!(s.derivative(1.0), 3.0);
        assert_abs_diff_eq!(s.value(0.5), 0.75);
        let s = steady_1d_closed_form(0.0, 2.0, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(s.c, FRAC_PI_4, epsilon = 1e-15);
        assert!(steady_1d_closed_form(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(steady_1d_closed_form(0.0, 1.0, 2.0, 1.0).is_err());
    }

    fn disc() -> ConvexDomain {
        make_domain(&DomainSpec::Disc { center: Point::zeros(), radius: 1.0 }).unwrap()
    }

    #[test]
    fn disc_exact_root() {
        let d = disc();
        let g = Arc::new(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap());
        let guess = Field::from_fn(g, 0.0, |p| 0.5 * p.norm_squared());
        let s = solve_steady(&d, &guess, &SteadyOptions::default()).unwrap();
        assert!(s.converged && s.iterations <= 1, "{:?}", s.report());
        assert_abs_diff_eq!(s.c, FRAC_PI_2, epsilon = 1e-10);
        let (gap, dc) = compare_fields(&guess, FRAC_PI_2, &s).unwrap();
        assert!(gap <= 1e-10 && dc <= 1e-10);
    }

    #[test]
    fn interval_from_bumped_guess() {
        let omega = make_domain(&DomainSpec::Interval { a: 0.0, b: 1.0 }).unwrap();
        let target = make_domain(&DomainSpec::Interval { a: 1.0, b: 3.0 }).unwrap();
        let g = Arc::new(build_grid(&omega, Resolution::Interval(40)).unwrap());
        let center = Point::new(0.5, 0.0);
        let guess = Field::from_fn(g.clone(), 0.0, |p| p[0] * p[0] + p[0] + 0.01 * bump(p, &center, 0.3));
        let s = solve_steady(&target, &guess, &SteadyOptions::default()).unwrap();
        assert!(s.converged, "{:?}", s.report());
        let cf = steady_1d_closed_form(0.0, 1.0, 1.0, 3.0).unwrap();
        assert!((s.c - cf.c).abs() <= 1e-8);
        for w in s.history.windows(2) {
            assert!(w[1] < w[0]);
        }
        let exact = cf.sample(g, &target);
        assert!(exact.max_residual() <= 1e-12, "{:?}", exact.report());
        let (gap, dc) = compare_fields(&exact.field, cf.c, &s).unwrap();
        assert!(gap <= 1e-8 && dc <= 1e-8, "{gap} {dc}");
    }

    #[test]
    fn disc_to_ellipse_quadratic_root_and_gauge() {
        let d = disc();
        let a = Matrix2::new(2.0, 0.0, 0.0, 1.0);
        let target = pushforward_quadratic(&d, &a, &Point::zeros(), &Point::zeros()).unwrap();
        let g = Arc::new(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap());
        let guess = Field::from_fn(g.clone(), 0.0, |p| 0.5 * p.dot(&(a * p)) + 0.02 * bump(p, &Point::new(0.1, 0.2), 0.5));
        let s = solve_steady(&target, &guess, &SteadyOptions::default()).unwrap();
        assert!(s.converged, "{:?}", s.report());
        assert_abs_diff_eq!(s.c, 2f64.atan() + 1f64.atan(), epsilon = 1e-8);
        let mut shifted = guess.clone();
        shifted.values.iter_mut().chain(shifted.ghosts.iter_mut()).for_each(|v| *v += 3.0);
        let t = solve_steady(&target, &shifted, &SteadyOptions::default()).unwrap();
        let (gap, dc) = compare_fields(&t.field, t.c, &s).unwrap();
        assert!(gap <= 1e-10 && dc <= 1e-10, "{gap} {dc}");
        for (x, y) in s.field.values.iter().zip(&t.field.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let d = disc();
        let g1 = Arc::new(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap());
        let g2 = Arc::new(build_grid(&d, Resolution::Polar { ns: 10, nphi: 16 }).unwrap());
        let s = solve_steady(&d, &Field::from_fn(g1, 0.0, |p| 0.5 * p.norm_squared()), &SteadyOptions::default()).unwrap();
        let other = Field::from_fn(g2, 0.0, |p| 0.5 * p.norm_squared());
        assert!(matches!(compare_fields(&other, 0.0, &s), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn rejects_nonconvex_guess() {
        let d = disc();
        let g = Arc::new(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap());
        let guess = Field::from_fn(g, 0.0, |p| -p.norm_squared());
        assert!(matches!(solve_steady(&d, &guess, &SteadyOptions::default()), Err(Error::NonConvex { .. })));
    }
}
