//! Boundary-fitted grids and the finite-difference jets of a field: gradient,
//! Hessian, sorted eigenvalues, Lagrangian phase and linearized metric.

mod dump;
mod grid;
mod interp;
mod ring;
pub mod stencil;

use std::sync::Arc;

use nalgebra::Matrix2;

pub use dump::{format_field, parse_field, read_field, write_field, FieldDump};
pub use grid::{build_grid, ring_mode_cap, Derivs, Grid, IntervalGrid, PolarGrid, Resolution};
pub use interp::Interpolant;
pub use ring::RingOps;

use crate::geometry::{BoundaryPoint, Point};

/// Node values of `u` on a grid plus its ghost layer.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub ghosts: Vec<f64>,
    pub t: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, ghosts: Vec<f64>, t: f64) -> Self {
        assert_eq!(values.len(), grid.node_count(), "value array does not match the grid");
        assert_eq!(ghosts.len(), grid.ghost_count(), "ghost array does not match the grid");
        Field { grid, values, ghosts, t }
    }

    /// Samples `f` at nodes and ghost positions.
    pub fn from_fn(grid: Arc<Grid>, t: f64, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(&grid.node_position(i))).collect();
        let ghosts = (0..grid.ghost_count()).map(|k| f(&grid.ghost_position(k))).collect();
        Field { grid, values, ghosts, t }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
}

/// Sorted eigenvalues `λ₁ ≤ … ≤ λ_n`, `n ∈ {1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    vals: [f64; 2],
    n: usize,
}

impl Spectrum {
    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.n]
    }

    pub fn min(&self) -> f64 {
        self.vals[0]
    }

    pub fn max(&self) -> f64 {
        self.vals[self.n - 1]
    }
}

pub fn eigen_sym(h: &Matrix2<f64>, n: usize) -> Spectrum {
    match n {
        1 => Spectrum { vals: [h[(0, 0)], h[(0, 0)]], n: 1 },
        2 => {
            let m = 0.5 * (h[(0, 0)] + h[(1, 1)]);
            let d = 0.5 * (h[(0, 0)] - h[(1, 1)]);
            let r = d.hypot(h[(0, 1)]);
            Spectrum { vals: [m - r, m + r], n: 2 }
        }
        _ => panic!("only n = 1, 2 are supported"),
    }
}

/// `F = Σ arctan λᵢ`.
pub fn lagrangian_phase(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|l| l.atan()).sum()
}

/// `g = (I + H²)⁻¹`.
pub fn linearized_metric(h: &Matrix2<f64>, n: usize) -> Matrix2<f64> {
    match n {
        1 => Matrix2::new(1.0 / (1.0 + h[(0, 0)] * h[(0, 0)]), 0.0, 0.0, 0.0),
        2 => {
            let (a, b, c) = (h[(0, 0)], h[(0, 1)], h[(1, 1)]);
            // I + H² for symmetric H = [[a, b], [b, c]]
            let p = 1.0 + a * a + b * b;
            let q = b * (a + c);
            let r = 1.0 + b * b + c * c;
            let det = p * r - q * q;
            Matrix2::new(r / det, -q / det, -q / det, p / det)
        }
        _ => panic!("only n = 1, 2 are supported"),
    }
}

pub fn metric_trace(g: &Matrix2<f64>, n: usize) -> f64 {
    (0..n).map(|i| g[(i, i)]).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub grad: Point,
    pub hess: Matrix2<f64>,
    pub spectrum: Spectrum,
    pub phase: f64,
    pub metric: Matrix2<f64>,
}

impl Jet {
    pub fn from_derivs(d: Derivs, n: usize) -> Self {
        let spectrum = eigen_sym(&d.hess, n);
        Jet {
            grad: d.grad,
            hess: d.hess,
            spectrum,
            phase: lagrangian_phase(spectrum.as_slice()),
            metric: linearized_metric(&d.hess, n),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JetField {
    pub n: usize,
    pub jets: Vec<Jet>,
}

impl JetField {
    pub fn min_phase(&self) -> f64 {
        self.jets.iter().map(|j| j.phase).fold(f64::INFINITY, f64::min)
    }

    pub fn max_phase(&self) -> f64 {
        self.jets.iter().map(|j| j.phase).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn phase_oscillation(&self) -> f64 {
        self.max_phase() - self.min_phase()
    }

    pub fn mean_phase(&self) -> f64 {
        self.jets.iter().map(|j| j.phase).sum::<f64>() / self.jets.len() as f64
    }

    /// `(node, λ₁)` at the node with the smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> (usize, f64) {
        self.jets
            .iter()
            .enumerate()
            .map(|(i, j)| (i, j.spectrum.min()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }
}

pub fn differentiate(field: &Field) -> JetField {
    let n = field.dim();
    let jets = field
        .grid
        .derivatives(&field.values, &field.ghosts)
        .into_iter()
        .map(|d| Jet::from_derivs(d, n))
        .collect();
    JetField { n, jets }
}

/// Jet of `u` at one boundary point.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryJet {
    pub point: BoundaryPoint,
    pub jet: Jet,
}

pub fn boundary_jets(field: &Field) -> Vec<BoundaryJet> {
    let n = field.dim();
    field
        .grid
        .boundary_derivatives(&field.values, &field.ghosts)
        .into_iter()
        .enumerate()
        .map(|(k, d)| BoundaryJet { point: field.grid.boundary_point(k), jet: Jet::from_derivs(d, n) })
        .collect()
}
