//! Discrete Legendre transform `u*(y) = max_x ⟨x, y⟩ − u(x)` and the duality
//! checks built on it.
//!
//! Each dual value starts from the best source node, takes one step of the
//! local quadratic model at that node (exact for quadratic data), and is then
//! polished by Newton's method on `DU(x) = y` with the smooth interpolant `U`
//! of the source field. The polish removes the cell-to-cell jitter of the
//! nearest-node model, which would otherwise dominate dual Hessians.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::discretization::{boundary_jets, differentiate, Field, Grid, Interpolant, JetField};
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Clone, Debug)]
pub struct DualField {
    /// `u*` on the target grid, ghosts included; `t` is the source time.
    pub field: Field,
    /// Per node, then per ghost: the maximizer fell outside the source domain.
    pub extrapolated: Vec<bool>,
}

impl DualField {
    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    pub fn extrapolated_count(&self) -> usize {
        self.extrapolated.iter().filter(|e| **e).count()
    }

    pub fn node_extrapolated(&self, i: usize) -> bool {
        self.extrapolated[i]
    }
}

fn solve(h: &Matrix2<f64>, r: &Point, n: usize) -> Option<Point> {
    if n == 1 {
        (h[(0, 0)] > 0.0).then(|| Point::new(r[0] / h[(0, 0)], 0.0))
    } else {
        h.cholesky().map(|c| c.solve(r))
    }
}

struct Source<'a> {
    n: usize,
    positions: Vec<Point>,
    values: &'a [f64],
    jets: JetField,
    interp: Interpolant,
    grid: &'a Grid,
}

impl Source<'_> {
    /// `(u*(y), maximizer)`.
    fn conjugate(&self, y: &Point) -> (f64, Point) {
        let (best, _) = self
            .positions
            .iter()
            .zip(self.values)
            .enumerate()
            .map(|(i, (x, u))| (i, x.dot(y) - u))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let jet = &self.jets.jets[best];
        let xh = self.positions[best];
        let delta = solve(&jet.hess, &(y - jet.grad), self.n).unwrap_or_else(Point::zeros);
        let model = self.values[best] + jet.grad.dot(&delta) + 0.5 * delta.dot(&(jet.hess * delta));
        let quad = (xh + delta).dot(y) - model;
        self.polish(y, xh + delta).unwrap_or((quad, xh + delta))
    }

    fn polish(&self, y: &Point, start: Point) -> Option<(f64, Point)> {
        let tol = 1e-13 * (1.0 + y.norm());
        let reach = 2.0 * self.grid.mesh_size();
        let mut x = start;
        for _ in 0..12 {
            let (_, d) = self.interp.eval(&x);
            let r = d.grad - y;
            let step = solve(&d.hess, &r, self.n)?;
            if step.norm() > 4.0 * reach {
                return None;
            }
            x -= step;
            if (x - start).norm() > reach {
                return None;
            }
            if r.norm() <= tol || step.norm() <= 1e-15 * (1.0 + x.norm()) {
                let (u, _) = self.interp.eval(&x);
                return Some((x.dot(y) - u, x));
            }
        }
        None
    }
}

/// Conjugate of `field` sampled on every node and ghost of `target`.
pub fn legendre_transform(field: &Field, target: Arc<Grid>) -> Result<DualField> {
    let n = field.dim();
    if target.dim() != n {
        return Err(Error::GridMismatch("source and target grids differ in dimension".into()));
    }
    let jets = differentiate(field);
    let (node, lambda1) = jets.min_eigenvalue();
    if !(lambda1 > 0.0) {
        return Err(Error::NonConvex { node, min_eigenvalue: lambda1 });
    }
    let grid = field.grid();
    let source = Source {
        n,
        positions: (0..grid.node_count()).map(|i| grid.node_position(i)).collect(),
        values: &field.values,
        jets,
        interp: Interpolant::new(field),
        grid,
    };
    let omega = grid.domain();
    let mut extrapolated = Vec::with_capacity(target.node_count() + target.ghost_count());
    let mut eval = |y: Point| {
        let (v, x) = source.conjugate(&y);
        extrapolated.push(omega.h(&x) < 0.0);
        v
    };
    let values: Vec<f64> = (0..target.node_count()).map(|i| eval(target.node_position(i))).collect();
    let ghosts: Vec<f64> = (0..target.ghost_count()).map(|k| eval(target.ghost_position(k))).collect();
    Ok(DualField { field: Field::new(target, values, ghosts, field.t), extrapolated })
}

/// Nodes whose jets do not lean on ghost values: all but the outer ring in 2D,
/// all but the endpoints in 1D.
fn inner_nodes(grid: &Grid) -> Vec<usize> {
    match grid.as_polar() {
        Some(p) => (0..(p.ns() - 1) * p.nphi()).collect(),
        None => (1..grid.node_count() - 1).collect(),
    }
}

/// Linear (1D) or bilinear-in-index (2D) interpolation of nodal matrices at `y`;
/// `None` outside the node hull of `grid` or next to an excluded node.
fn interpolate_nodal(grid: &Grid, y: &Point, data: &[Matrix2<f64>], exclude: &[bool]) -> Option<Matrix2<f64>> {
    if let Some(p) = grid.as_polar() {
        let (s, phi) = p.param_coords(y);
        let t = s / p.ds() - 0.5;
        if !(0.0..=(p.ns() - 1) as f64).contains(&t) {
            return None;
        }
        let j = (t.floor() as usize).min(p.ns() - 2);
        let ft = t - j as f64;
        let u = phi / p.dphi();
        let k = (u.floor() as usize) % p.nphi();
        let fu = u - u.floor();
        let k1 = (k + 1) % p.nphi();
        let idx = |j: usize, k: usize| j * p.nphi() + k;
        let corners = [(idx(j, k), (1.0 - ft) * (1.0 - fu)), (idx(j, k1), (1.0 - ft) * fu), (idx(j + 1, k), ft * (1.0 - fu)), (idx(j + 1, k1), ft * fu)];
        if corners.iter().any(|(i, _)| exclude[*i]) {
            return None;
        }
        Some(corners.iter().map(|(i, w)| *w * data[*i]).sum())
    } else {
        let g = grid.as_interval().expect("interval layout");
        let t = (y[0] - grid.node_position(0)[0]) / g.dx();
        if !(0.0..=g.cells() as f64).contains(&t) {
            return None;
        }
        let i = (t.floor() as usize).min(g.cells() - 1);
        let f = t - i as f64;
        if exclude[i] || exclude[i + 1] {
            return None;
        }
        Some((1.0 - f) * data[i] + f * data[i + 1])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampledMax {
    pub max: f64,
    pub samples: usize,
    pub skipped: usize,
}

impl SampledMax {
    fn add(&mut self, v: Option<f64>) {
        match v {
            Some(v) => {
                self.max = self.max.max(v);
                self.samples += 1;
            }
            None => self.skipped += 1,
        }
    }
}

/// `max ‖D²u*(Du(x))·D²u(x) − I‖_F` over interior source nodes.
pub fn hessian_inverse_check(field: &Field, dual: &DualField) -> SampledMax {
    let n = field.dim();
    let jets = differentiate(field);
    let dual_jets = differentiate(&dual.field);
    let dual_grid = dual.grid();
    let mut exclude = vec![true; dual_grid.node_count()];
    for i in inner_nodes(dual_grid) {
        exclude[i] = dual.node_extrapolated(i);
    }
    let hess: Vec<Matrix2<f64>> = dual_jets.jets.iter().map(|j| j.hess).collect();
    let eye = if n == 1 { Matrix2::new(1.0, 0.0, 0.0, 0.0) } else { Matrix2::identity() };
    let mut out = SampledMax::default();
    for i in inner_nodes(field.grid()) {
        let jet = &jets.jets[i];
        out.add(interpolate_nodal(dual_grid, &jet.grad, &hess, &exclude).map(|h| (h * jet.hess - eye).norm()));
    }
    out
}

/// `max |∂_t u* − F(D²u*) + nπ/2|` over interior dual nodes, differencing consecutive
/// slices and averaging `F` over each pair.
pub fn dual_flow_residual(slices: &[Field], target: Arc<Grid>) -> Result<SampledMax> {
    if slices.len() < 2 {
        return Err(Error::InvalidInput("the dual residual needs at least two time slices".into()));
    }
    let n = slices[0].dim() as f64;
    let duals = slices.iter().map(|f| legendre_transform(f, target.clone())).collect::<Result<Vec<_>>>()?;
    let phases: Vec<JetField> = duals.iter().map(|d| differentiate(&d.field)).collect();
    let interior = inner_nodes(&target);
    let mut out = SampledMax::default();
    for k in 0..duals.len() - 1 {
        let (a, b) = (&duals[k], &duals[k + 1]);
        let dt = b.field.t - a.field.t;
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("time slices must be strictly increasing".into()));
        }
        for &i in &interior {
            let r = (!a.node_extrapolated(i) && !b.node_extrapolated(i)).then(|| {
                let ut = (b.field.values[i] - a.field.values[i]) / dt;
                let f = 0.5 * (phases[k].jets[i].phase + phases[k + 1].jets[i].phase);
                (ut - f + n * FRAC_PI_2).abs()
            });
            out.add(r);
        }
    }
    Ok(out)
}

/// `max |u** − u|` over source nodes whose double conjugate stayed inside the domain.
pub fn involution_error(field: &Field, dual: &DualField) -> Result<SampledMax> {
    let back = legendre_transform(&dual.field, field.grid().clone())?;
    let mut out = SampledMax::default();
    for i in 0..field.grid().node_count() {
        out.add((!back.node_extrapolated(i)).then(|| (back.field.values[i] - field.values[i]).abs()));
    }
    Ok(out)
}

/// `max |h_Ω(Du*)|` on the dual boundary: the dual boundary condition, diagnostic only.
pub fn dual_boundary_residual(dual: &DualField, source: &Grid) -> f64 {
    boundary_jets(&dual.field).iter().map(|bj| source.domain().h(&bj.jet.grad).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreReport {
    pub t: f64,
    pub involution: SampledMax,
    pub hessian_inverse: SampledMax,
    pub dual_flow: Option<SampledMax>,
    pub dual_boundary_max: f64,
    pub extrapolated: usize,
}
