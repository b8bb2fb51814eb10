//! Smooth interpolant of a field, for evaluation off the grid.
//!
//! Polar grids: trigonometric interpolation on every ring, cubic Lagrange
//! across rings, continued through the pole by `u(−s, φ) = u(s, φ + π)`.
//! Interval grids: cubic Lagrange on nodes and ghosts.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Matrix2;

use super::stencil::fd_weights;
use super::{Derivs, Field, Grid};
use crate::geometry::Point;

#[derive(Clone, Debug)]
struct Series {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Series {
    fn new(v: &[f64], dphi: f64) -> Self {
        let n = v.len();
        let half = n / 2;
        let mut cos = vec![0.0; half + 1];
        let mut sin = vec![0.0; half + 1];
        for m in 0..=half {
            let w = if m == 0 || (n % 2 == 0 && m == half) { 1.0 } else { 2.0 } / n as f64;
            for (k, vk) in v.iter().enumerate() {
                let a = (m * k) as f64 * dphi;
                cos[m] += w * vk * a.cos();
                sin[m] += w * vk * a.sin();
            }
        }
        Series { cos, sin }
    }

    /// Value and first two φ-derivatives; `flip` evaluates the ring reflected through the pole.
    fn eval(&self, phi: f64, flip: bool) -> [f64; 3] {
        let mut out = [0.0; 3];
        for m in 0..self.cos.len() {
            let sign = if flip && m % 2 == 1 { -1.0 } else { 1.0 };
            let mf = m as f64;
            let (s, c) = (mf * phi).sin_cos();
            let (a, b) = (sign * self.cos[m], sign * self.sin[m]);
            out[0] += a * c + b * s;
            out[1] += mf * (b * c - a * s);
            out[2] -= mf * mf * (a * c + b * s);
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Data {
    Interval { x0: f64, dx: f64, values: Vec<f64> },
    Polar { rings: Vec<Series>, linv: Matrix2<f64>, center: Point, ds: f64, ns: usize },
}

#[derive(Clone, Debug)]
pub struct Interpolant {
    grid: Arc<Grid>,
    data: Data,
}

/// Start index of a 4-point stencil around `x`, on nodes `first + i` for `i` in `first..=last`.
fn stencil_start(x: f64, first: isize, last: isize) -> isize {
    (x.floor() as isize - 1).clamp(first, last - 3)
}

impl Interpolant {
    pub fn new(field: &Field) -> Self {
        let grid = field.grid().clone();
        let data = if let Some(p) = grid.as_polar() {
            let ext = p.extended(&field.values, &field.ghosts);
            // rings −2 and −1 are built from rings 1 and 0 and evaluated flipped
            let rings = ext.chunks(p.nphi()).skip(2).map(|r| Series::new(r, p.dphi())).collect();
            Data::Polar {
                rings,
                linv: p.axes().try_inverse().expect("SPD axes"),
                center: p.center(),
                ds: p.ds(),
                ns: p.ns(),
            }
        } else {
            let ig = grid.as_interval().expect("interval layout");
            let mut values = Vec::with_capacity(field.values.len() + 2);
            values.push(field.ghosts[0]);
            values.extend_from_slice(&field.values);
            values.push(field.ghosts[1]);
            Data::Interval { x0: grid.node_position(0)[0] - ig.dx(), dx: ig.dx(), values }
        };
        Interpolant { grid, data }
    }

    /// `[[u, u_φ, u_φφ], [u_s, u_sφ, ·], [u_ss, ·, ·]]` at parameter `(s, φ)`.
    fn polar_series(&self, rings: &[Series], ds: f64, ns: usize, s: f64, phi: f64) -> [[f64; 3]; 3] {
        // ring j sits at (j + ½)Δs and is stored at index j; rings −1, −2 are 0, 1 flipped
        let t = s / ds - 0.5;
        let j0 = stencil_start(t, -2, ns as isize);
        let nodes: Vec<f64> = (0..4).map(|i| (j0 + i) as f64).collect();
        let w = fd_weights(t, &nodes, 2);
        let mut acc = [[0.0; 3]; 3];
        for i in 0..4 {
            let j = j0 + i as isize;
            let r = if j < 0 { rings[(-1 - j) as usize].eval(phi, true) } else { rings[j as usize].eval(phi, false) };
            for (d, wd) in w.iter().enumerate() {
                for (e, re) in r.iter().enumerate() {
                    acc[d][e] += wd[i] * re;
                }
            }
        }
        let scale = [1.0, 1.0 / ds, 1.0 / (ds * ds)];
        for (d, row) in acc.iter_mut().enumerate() {
            row.iter_mut().for_each(|v| *v *= scale[d]);
        }
        acc
    }

    fn polar_derivs(&self, rings: &[Series], linv: &Matrix2<f64>, ds: f64, ns: usize, s: f64, phi: f64) -> Derivs {
        let a = self.polar_series(rings, ds, ns, s, phi);
        let (us, uphi, uss, usphi, uphiphi) = (a[1][0], a[0][1], a[2][0], a[1][1], a[0][2]);
        let e = Point::new(phi.cos(), phi.sin());
        let ep = Point::new(-phi.sin(), phi.cos());
        let (fa, fb) = (linv.transpose() * e, linv.transpose() * ep);
        let p12 = (usphi - uphi / s) / s;
        let p22 = (uphiphi + s * us) / (s * s);
        Derivs {
            grad: us * fa + (uphi / s) * fb,
            hess: uss * fa * fa.transpose() + p12 * (fa * fb.transpose() + fb * fa.transpose()) + p22 * fb * fb.transpose(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Value, gradient and Hessian of the interpolant at `x`.
    pub fn eval(&self, x: &Point) -> (f64, Derivs) {
        match &self.data {
            Data::Interval { x0, dx, values } => {
                let t = (x[0] - x0) / dx;
                let i0 = stencil_start(t, 0, values.len() as isize - 1);
                let nodes: Vec<f64> = (0..4).map(|i| (i0 + i) as f64).collect();
                let w = fd_weights(t, &nodes, 2);
                let v = &values[i0 as usize..i0 as usize + 4];
                let dot = |w: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                (
                    dot(&w[0]),
                    Derivs {
                        grad: Point::new(dot(&w[1]) / dx, 0.0),
                        hess: Matrix2::new(dot(&w[2]) / (dx * dx), 0.0, 0.0, 0.0),
                    },
                )
            }
            Data::Polar { rings, linv, center, ds, ns } => {
                let q = linv * (x - center);
                let (s, phi) = (q.norm(), q[1].atan2(q[0]).rem_euclid(2.0 * PI));
                let u = self.polar_series(rings, *ds, *ns, s, phi)[0][0];
                // the polar chain rule is singular at the pole: average two antipodal offsets
                let near = 0.05 * ds;
                let (grad, hess) = if s < near {
                    let d1 = self.polar_derivs(rings, linv, *ds, *ns, near, phi);
                    let d2 = self.polar_derivs(rings, linv, *ds, *ns, near, phi + PI);
                    (0.5 * (d1.grad + d2.grad), 0.5 * (d1.hess + d2.hess))
                } else {
                    let d = self.polar_derivs(rings, linv, *ds, *ns, s, phi);
                    (d.grad, d.hess)
                };
                (u, Derivs { grad, hess })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Resolution};
    use crate::geometry::{make_domain, DomainSpec};
    use approx::assert_abs_diff_eq;

    fn check(field: &Field, f: impl Fn(&Point) -> (f64, Point, Matrix2<f64>), points: &[Point], tol: f64) {
        let it = Interpolant::new(field);
        for p in points {
            let (u, d) = it.eval(p);
            let (eu, eg, eh) = f(p);
            assert_abs_diff_eq!(u, eu, epsilon = tol);
            assert_abs_diff_eq!(d.grad, eg, epsilon = tol);
            // 1/s² in the polar chain rule amplifies rounding near the pole
            assert_abs_diff_eq!(d.hess, eh, epsilon = 100.0 * tol);
        }
    }

    #[test]
    fn quadratics_are_reproduced_on_an_offset_ellipse() {
        let m = Matrix2::new(1.0, 0.3, 0.3, 2.0);
        let d = make_domain(&DomainSpec::Ellipse { center: Point::new(0.4, -0.2), matrix: m }).unwrap();
        let g = Arc::new(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap());
        let a = Matrix2::new(2.0, 0.5, 0.5, 1.0);
        let b = Point::new(0.3, -0.7);
        let exact = |p: &Point| (0.5 * p.dot(&(a * p)) + b.dot(p), a * p + b, a);
        let field = Field::from_fn(g, 0.0, |p| exact(p).0);
        let pts: Vec<Point> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.37;
                d.center() + 0.6 * (i as f64 / 40.0) * Point::new(t.cos(), 0.5 * t.sin())
            })
            .collect();
        check(&field, exact, &pts, 1e-10);
    }

    #[test]
    fn interval_cubic_is_exact() {
        let d = make_domain(&DomainSpec::Interval { a: 0.0, b: 1.0 }).unwrap();
        let g = Arc::new(build_grid(&d, Resolution::Interval(10)).unwrap());
        let cubic = |p: &Point| {
            let x = p[0];
            (x * x * x - x, Point::new(3.0 * x * x - 1.0, 0.0), Matrix2::new(6.0 * x, 0.0, 0.0, 0.0))
        };
        let field = Field::from_fn(g, 0.0, |p| cubic(p).0);
        let pts: Vec<Point> = [0.0, 0.013, 0.5, 0.77, 1.0].iter().map(|&x| Point::new(x, 0.0)).collect();
        check(&field, cubic, &pts, 1e-10);
    }

    #[test]
    fn smooth_function_converges() {
        let d = make_domain(&DomainSpec::Disc { center: Point::zeros(), radius: 1.0 }).unwrap();
        let f = |p: &Point| (p[0] + 0.3 * p[1]).exp();
        let err = |ns: usize| {
            let g = Arc::new(build_grid(&d, Resolution::Polar { ns, nphi: 2 * ns }).unwrap());
            let it = Interpolant::new(&Field::from_fn(g, 0.0, f));
            (0..50)
                .map(|i| {
                    let t = i as f64 * 0.71;
                    let p = (i as f64 / 55.0) * Point::new(t.cos(), t.sin());
                    (it.eval(&p).0 - f(&p)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 < 1e-4 && e2 < e1 / 8.0, "{e1} {e2}");
    }
}
