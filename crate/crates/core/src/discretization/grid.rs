use std::f64::consts::PI;

use nalgebra::{Matrix2, SymmetricEigen};

use super::ring::RingOps;
use super::stencil::fd_weights;
use crate::error::{Error, Result};
use crate::geometry::{inner_normal, BoundaryParam, BoundaryPoint, ConvexDomain, DomainKind, Point};

pub const MIN_INTERVAL_CELLS: usize = 8;
pub const MIN_RADIAL: usize = 8;
pub const MIN_ANGULAR: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution {
    Interval(usize),
    Polar { ns: usize, nphi: usize },
}

/// Gradient and Hessian at one point; 1D data uses the first component only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivs {
    pub grad: Point,
    pub hess: Matrix2<f64>,
}

/// Uniform nodes `x_j = a + jΔ`, `j = 0..=N`, one ghost beyond each endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalGrid {
    a: f64,
    b: f64,
    cells: usize,
    dx: f64,
}

/// Cell-centred polar grid `x = c + s·L(cos φ, sin φ)`, `s_j = (j+½)Δs`,
/// with one ghost ring at `s = 1 + Δs/2` and the boundary at `s = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarGrid {
    center: Point,
    axes: Matrix2<f64>,
    ns: usize,
    nphi: usize,
    ds: f64,
    dphi: f64,
    /// `L⁻¹e_k`, `L⁻¹e⊥_k`: the Cartesian gradient is `u_s a + (u_φ/s) b`.
    frame_a: Vec<Point>,
    frame_b: Vec<Point>,
    direction: Vec<Point>,
    ring_ops: Vec<RingOps>,
    boundary_ops: RingOps,
    /// Quadratic extrapolation of ring data to `s = 1` from rings `ns−1, ns−2, ns−3`.
    extrap: [f64; 3],
    /// Second radial derivative at `s = 1` from the ghost ring and rings `ns−1..ns−3`.
    boundary_dss: [f64; 4],
    sigma_min: f64,
    sigma_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    Interval(IntervalGrid),
    Polar(PolarGrid),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: ConvexDomain,
    layout: Layout,
}

/// Angular modes kept on ring `j`: at most `⌊6(j+½)⌋`, never fewer than 3.
pub fn ring_mode_cap(j: usize, nphi: usize) -> usize {
    let wanted = (6.0 * (j as f64 + 0.5)).floor() as usize;
    wanted.max(3).min(nphi / 2 - 1)
}

pub fn build_grid(domain: &ConvexDomain, resolution: Resolution) -> Result<Grid> {
    let layout = match (domain.kind(), resolution) {
        (DomainKind::Interval, Resolution::Interval(cells)) => {
            if cells < MIN_INTERVAL_CELLS {
                return Err(Error::InvalidInput(format!(
                    "interval resolution {cells} below minimum {MIN_INTERVAL_CELLS}"
                )));
            }
            let (a, b) = domain.interval().expect("interval domain");
            Layout::Interval(IntervalGrid { a, b, cells, dx: (b - a) / cells as f64 })
        }
        (DomainKind::Disc | DomainKind::Ellipse, Resolution::Polar { ns, nphi }) => {
            if ns < MIN_RADIAL || nphi < MIN_ANGULAR || nphi % 2 != 0 {
                return Err(Error::InvalidInput(format!(
                    "polar resolution ({ns}, {nphi}) needs N_s ≥ {MIN_RADIAL}, N_φ ≥ {MIN_ANGULAR} and even N_φ"
                )));
            }
            Layout::Polar(PolarGrid::new(domain, ns, nphi))
        }
        (kind, res) => {
            return Err(Error::InvalidInput(format!("resolution {res:?} does not fit a {kind:?} domain")))
        }
    };
    Ok(Grid { domain: domain.clone(), layout })
}

impl PolarGrid {
    fn new(domain: &ConvexDomain, ns: usize, nphi: usize) -> Self {
        let axes = *domain.axes();
        let inv = axes.try_inverse().expect("SPD axes");
        let dphi = 2.0 * PI / nphi as f64;
        let mut frame_a = Vec::with_capacity(nphi);
        let mut frame_b = Vec::with_capacity(nphi);
        let mut direction = Vec::with_capacity(nphi);
        for k in 0..nphi {
            let (s, c) = (k as f64 * dphi).sin_cos();
            let e = Point::new(c, s);
            frame_a.push(inv * e);
            frame_b.push(inv * Point::new(-s, c));
            direction.push(axes * e);
        }
        let ring_ops = (0..ns).map(|j| RingOps::new(nphi, ring_mode_cap(j, nphi))).collect();
        let extrap_w = fd_weights(0.0, &[-0.5, -1.5, -2.5], 0);
        let dss_w = fd_weights(0.0, &[0.5, -0.5, -1.5, -2.5], 2);
        let ds = 1.0 / ns as f64;
        let sv = SymmetricEigen::new(axes).eigenvalues;
        PolarGrid {
            center: domain.center(),
            axes,
            ns,
            nphi,
            ds,
            dphi,
            frame_a,
            frame_b,
            direction,
            ring_ops,
            boundary_ops: RingOps::new(nphi, nphi / 2 - 1),
            extrap: [extrap_w[0][0], extrap_w[0][1], extrap_w[0][2]],
            boundary_dss: [
                dss_w[2][0] / (ds * ds),
                dss_w[2][1] / (ds * ds),
                dss_w[2][2] / (ds * ds),
                dss_w[2][3] / (ds * ds),
            ],
            sigma_min: sv.min(),
            sigma_max: sv.max(),
        }
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn nphi(&self) -> usize {
        self.nphi
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn dphi(&self) -> f64 {
        self.dphi
    }

    pub fn radius(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.ds
    }

    pub fn angle(&self, k: usize) -> f64 {
        k as f64 * self.dphi
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// `L` in `x = c + s·L(cos φ, sin φ)`.
    pub fn axes(&self) -> &Matrix2<f64> {
        &self.axes
    }

    pub fn mode_cap(&self, j: usize) -> usize {
        self.ring_ops[j].cap()
    }

    /// Node across the pole from `(0, k)`.
    pub fn across_pole(&self, k: usize) -> usize {
        (k + self.nphi / 2) % self.nphi
    }

    fn position(&self, s: f64, k: usize) -> Point {
        self.center + s * self.direction[k]
    }

    /// Parameter coordinates `(s, φ)` of a Cartesian point, `φ ∈ [0, 2π)`.
    pub fn param_coords(&self, p: &Point) -> (f64, f64) {
        let z = self.axes.try_inverse().expect("SPD axes") * (p - self.center);
        let phi = z[1].atan2(z[0]).rem_euclid(2.0 * PI);
        (z.norm(), phi)
    }

    fn ring<'a>(&self, values: &'a [f64], j: usize) -> &'a [f64] {
        &values[j * self.nphi..(j + 1) * self.nphi]
    }

    /// Rings `−2..=ns` (two across-pole reflections, interior rings, ghost ring).
    pub(super) fn extended(&self, values: &[f64], ghosts: &[f64]) -> Vec<f64> {
        let n = self.nphi;
        let mut ext = vec![0.0; (self.ns + 3) * n];
        ext[2 * n..(self.ns + 2) * n].copy_from_slice(values);
        ext[(self.ns + 2) * n..].copy_from_slice(ghosts);
        for k in 0..n {
            let opp = self.across_pole(k);
            ext[n + k] = values[opp];
            ext[k] = values[n + opp];
        }
        ext
    }

    fn chain(&self, k: usize, s: f64, p: [f64; 5]) -> Derivs {
        let [us, uphi, uss, usphi, uphiphi] = p;
        let (a, b) = (self.frame_a[k], self.frame_b[k]);
        let p11 = uss;
        let p12 = (usphi - uphi / s) / s;
        let p22 = (uphiphi + s * us) / (s * s);
        let grad = us * a + (uphi / s) * b;
        let hess = p11 * a * a.transpose()
            + p12 * (a * b.transpose() + b * a.transpose())
            + p22 * b * b.transpose();
        Derivs { grad, hess }
    }

    fn derivatives(&self, values: &[f64], ghosts: &[f64]) -> Vec<Derivs> {
        let (n, ns, ds) = (self.nphi, self.ns, self.ds);
        let ext = self.extended(values, ghosts);
        let r = |j: isize| &ext[((j + 2) as usize) * n..((j + 3) as usize) * n];
        let mut out = Vec::with_capacity(ns * n);
        let mut us = vec![0.0; n];
        let mut uss = vec![0.0; n];
        let mut uphi = vec![0.0; n];
        let mut uphiphi = vec![0.0; n];
        let mut usphi = vec![0.0; n];
        for j in 0..ns {
            let ji = j as isize;
            let (rm2, rm1, r0, rp1) = (r(ji - 2), r(ji - 1), r(ji), r(ji + 1));
            if j + 2 <= ns {
                let rp2 = r(ji + 2);
                for k in 0..n {
                    us[k] = (-rp2[k] + 8.0 * rp1[k] - 8.0 * rm1[k] + rm2[k]) / (12.0 * ds);
                }
            } else {
                for k in 0..n {
                    us[k] = (rp1[k] - rm1[k]) / (2.0 * ds);
                }
            }
            for k in 0..n {
                uss[k] = (rp1[k] - 2.0 * r0[k] + rm1[k]) / (ds * ds);
            }
            let ops = &self.ring_ops[j];
            ops.first(r0, &mut uphi);
            ops.second(r0, &mut uphiphi);
            ops.first(&us, &mut usphi);
            let s = self.radius(j);
            for k in 0..n {
                out.push(self.chain(k, s, [us[k], uphi[k], uss[k], usphi[k], uphiphi[k]]));
            }
        }
        out
    }

    fn extrapolated_uphi(&self, values: &[f64]) -> Vec<f64> {
        let n = self.nphi;
        let mut acc = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for (i, w) in self.extrap.iter().enumerate() {
            let j = self.ns - 1 - i;
            self.ring_ops[j].first(self.ring(values, j), &mut tmp);
            acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a += w * t);
        }
        acc
    }

    fn boundary_gradient_parts(&self, values: &[f64]) -> Vec<(Point, Point)> {
        let outer = self.ring(values, self.ns - 1);
        let uphi = self.extrapolated_uphi(values);
        (0..self.nphi)
            .map(|k| {
                let (a, b) = (self.frame_a[k], self.frame_b[k]);
                let base = (-outer[k] / self.ds) * a + uphi[k] * b;
                (base, a / self.ds)
            })
            .collect()
    }

    fn boundary_derivatives(&self, values: &[f64], ghosts: &[f64]) -> Vec<Derivs> {
        let n = self.nphi;
        let rings: Vec<&[f64]> = (1..=3).map(|i| self.ring(values, self.ns - i)).collect();
        let us: Vec<f64> = (0..n).map(|k| (ghosts[k] - rings[0][k]) / self.ds).collect();
        let uphi = self.extrapolated_uphi(values);
        let mut uphiphi = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for (i, w) in self.extrap.iter().enumerate() {
            let j = self.ns - 1 - i;
            self.ring_ops[j].second(self.ring(values, j), &mut tmp);
            uphiphi.iter_mut().zip(&tmp).for_each(|(a, t)| *a += w * t);
        }
        let mut usphi = vec![0.0; n];
        self.boundary_ops.first(&us, &mut usphi);
        let w = &self.boundary_dss;
        (0..n)
            .map(|k| {
                let uss = w[0] * ghosts[k] + w[1] * rings[0][k] + w[2] * rings[1][k] + w[3] * rings[2][k];
                self.chain(k, 1.0, [us[k], uphi[k], uss, usphi[k], uphiphi[k]])
            })
            .collect()
    }
}

impl IntervalGrid {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    fn derivatives(&self, values: &[f64], ghosts: &[f64]) -> Vec<Derivs> {
        let n = values.len();
        let at = |j: isize| -> f64 {
            if j < 0 {
                ghosts[0]
            } else if j as usize >= n {
                ghosts[1]
            } else {
                values[j as usize]
            }
        };
        (0..n as isize)
            .map(|j| {
                let (l, c, r) = (at(j - 1), at(j), at(j + 1));
                Derivs {
                    grad: Point::new((r - l) / (2.0 * self.dx), 0.0),
                    hess: Matrix2::new((r - 2.0 * c + l) / (self.dx * self.dx), 0.0, 0.0, 0.0),
                }
            })
            .collect()
    }
}

impl Grid {
    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> Resolution {
        match &self.layout {
            Layout::Interval(g) => Resolution::Interval(g.cells),
            Layout::Polar(g) => Resolution::Polar { ns: g.ns, nphi: g.nphi },
        }
    }

    pub fn as_polar(&self) -> Option<&PolarGrid> {
        match &self.layout {
            Layout::Polar(g) => Some(g),
            Layout::Interval(_) => None,
        }
    }

    pub fn as_interval(&self) -> Option<&IntervalGrid> {
        match &self.layout {
            Layout::Interval(g) => Some(g),
            Layout::Polar(_) => None,
        }
    }

    pub fn node_count(&self) -> usize {
        match &self.layout {
            Layout::Interval(g) => g.cells + 1,
            Layout::Polar(g) => g.ns * g.nphi,
        }
    }

    /// Number of ghost values, equal to the number of boundary columns.
    pub fn ghost_count(&self) -> usize {
        match &self.layout {
            Layout::Interval(_) => 2,
            Layout::Polar(g) => g.nphi,
        }
    }

    pub fn node_position(&self, i: usize) -> Point {
        match &self.layout {
            Layout::Interval(g) => Point::new(g.a + i as f64 * g.dx, 0.0),
            Layout::Polar(g) => g.position(g.radius(i / g.nphi), i % g.nphi),
        }
    }

    pub fn ghost_position(&self, column: usize) -> Point {
        match &self.layout {
            Layout::Interval(g) => {
                if column == 0 {
                    Point::new(g.a - g.dx, 0.0)
                } else {
                    Point::new(g.b + g.dx, 0.0)
                }
            }
            Layout::Polar(g) => g.position(1.0 + 0.5 * g.ds, column),
        }
    }

    pub fn boundary_point(&self, column: usize) -> BoundaryPoint {
        let param = match &self.layout {
            Layout::Interval(_) if column == 0 => BoundaryParam::Left,
            Layout::Interval(_) => BoundaryParam::Right,
            Layout::Polar(g) => BoundaryParam::Angle(g.angle(column)),
        };
        inner_normal(&self.domain, param).expect("parameter matches the grid's domain")
    }

    /// Node carrying the boundary column in 1D (the endpoint itself).
    pub fn boundary_node(&self, column: usize) -> Option<usize> {
        match &self.layout {
            Layout::Interval(g) => Some(if column == 0 { 0 } else { g.cells }),
            Layout::Polar(_) => None,
        }
    }

    /// Smallest resolved Cartesian spacing; sets the explicit step size.
    pub fn cfl_spacing(&self) -> f64 {
        match &self.layout {
            Layout::Interval(g) => g.dx,
            Layout::Polar(g) => {
                let angular = (0..g.ns)
                    .map(|j| g.radius(j) * PI / g.mode_cap(j) as f64)
                    .fold(f64::INFINITY, f64::min);
                g.sigma_min * g.ds.min(angular)
            }
        }
    }

    /// Mesh size `Δ` entering the monitor tolerance `1e−8 + 10Δ²`.
    pub fn mesh_size(&self) -> f64 {
        match &self.layout {
            Layout::Interval(g) => g.dx,
            Layout::Polar(g) => g.ds * g.sigma_max,
        }
    }

    /// Node nearest the domain centre (first one on ties).
    pub fn anchor_node(&self) -> usize {
        let c = self.domain.center();
        (0..self.node_count())
            .map(|i| (i, (self.node_position(i) - c).norm()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 - 1e-14 { cur } else { best })
            .0
    }

    /// Node derivatives; a linear function of `(values, ghosts)`.
    pub fn derivatives(&self, values: &[f64], ghosts: &[f64]) -> Vec<Derivs> {
        debug_assert_eq!(values.len(), self.node_count());
        debug_assert_eq!(ghosts.len(), self.ghost_count());
        match &self.layout {
            Layout::Interval(g) => g.derivatives(values, ghosts),
            Layout::Polar(g) => g.derivatives(values, ghosts),
        }
    }

    /// Per column `(base, dir)` with boundary gradient `Du = base + ghost·dir`;
    /// `base` depends on interior values only.
    pub fn boundary_gradient_parts(&self, values: &[f64]) -> Vec<(Point, Point)> {
        match &self.layout {
            Layout::Interval(g) => {
                let n = g.cells;
                let w = 1.0 / (2.0 * g.dx);
                vec![
                    (Point::new(values[1] * w, 0.0), Point::new(-w, 0.0)),
                    (Point::new(-values[n - 1] * w, 0.0), Point::new(w, 0.0)),
                ]
            }
            Layout::Polar(g) => g.boundary_gradient_parts(values),
        }
    }

    /// Gradient and Hessian at the boundary points (one-sided radial stencils in 2D).
    pub fn boundary_derivatives(&self, values: &[f64], ghosts: &[f64]) -> Vec<Derivs> {
        match &self.layout {
            Layout::Interval(g) => {
                let all = g.derivatives(values, ghosts);
                vec![all[0], all[g.cells]]
            }
            Layout::Polar(g) => g.boundary_derivatives(values, ghosts),
        }
    }

    pub fn same_discretization(&self, other: &Grid) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn interval_layout() {
        let d = make_domain(&DomainSpec::Interval { a: 0.0, b: 1.0 }).unwrap();
        let g = build_grid(&d, Resolution::Interval(10)).unwrap();
        assert_eq!(g.node_count(), 11);
        assert_abs_diff_eq!(g.as_interval().unwrap().dx(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(g.ghost_position(0)[0], -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(g.ghost_position(1)[0], 1.1, epsilon = 1e-15);
        assert!(build_grid(&d, Resolution::Interval(4)).is_err());
        assert!(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).is_err());
    }

    #[test]
    fn disc_layout() {
        let d = make_domain(&DomainSpec::Disc { center: Point::zeros(), radius: 1.0 }).unwrap();
        let g = build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap();
        assert_eq!(g.node_count(), 128);
        assert_abs_diff_eq!(g.node_position(0).norm(), 1.0 / 16.0, epsilon = 1e-15);
        let p = g.as_polar().unwrap();
        assert_eq!(p.across_pole(3), 11);
        assert_eq!(p.across_pole(12), 4);
        for i in 0..g.node_count() {
            assert!(d.h(&g.node_position(i)) > 0.0);
        }
        for k in 0..16 {
            assert!(d.h(&g.ghost_position(k)) < 0.0);
        }
        assert!(build_grid(&d, Resolution::Polar { ns: 8, nphi: 15 }).is_err());
        assert!(build_grid(&d, Resolution::Polar { ns: 7, nphi: 16 }).is_err());
        assert!(build_grid(&d, Resolution::Polar { ns: 8, nphi: 14 }).is_err());
    }

    #[test]
    fn ellipse_boundary_radii() {
        let d = make_domain(&DomainSpec::Ellipse {
            center: Point::zeros(),
            matrix: Matrix2::new(1.0, 0.0, 0.0, 4.0),
        })
        .unwrap();
        let g = build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap();
        assert_abs_diff_eq!(g.boundary_point(0).position, Point::new(1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(g.boundary_point(4).position, Point::new(0.0, 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(d.boundary_radius(PI / 2.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mode_caps_keep_quadratic_content() {
        assert_eq!(ring_mode_cap(0, 32), 3);
        assert_eq!(ring_mode_cap(1, 32), 9);
        assert_eq!(ring_mode_cap(5, 32), 15);
        assert_eq!(ring_mode_cap(0, 16), 3);
    }

    #[test]
    fn anchor_is_nearest_the_centre() {
        let d = make_domain(&DomainSpec::Interval { a: 0.0, b: 1.0 }).unwrap();
        let g = build_grid(&d, Resolution::Interval(10)).unwrap();
        assert_eq!(g.anchor_node(), 5);
        let d = make_domain(&DomainSpec::Disc { center: Point::zeros(), radius: 1.0 }).unwrap();
        let g = build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap();
        assert_eq!(g.anchor_node(), 0);
    }
}
