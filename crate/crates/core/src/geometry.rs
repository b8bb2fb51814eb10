//! Convex domains described by strictly concave quadratic defining functions.
//!
//! Every domain is stored in the normal form `h(p) = s·(1 − (p−c)ᵀM(p−c))`,
//! so intervals, discs and ellipses share one evaluator. `h` is positive
//! inside, zero on the boundary and negative outside; `D²h = −2sM` gives the
//! strict concavity constant `θ = 2s·λ_min(M)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Samples used for the arclength mean of `|Dh|` on ellipse boundaries.
const NORMALIZATION_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Disc,
    Ellipse,
}

/// User-facing description of a domain.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Disc { center: Point, radius: f64 },
    /// `{p : (p − center)ᵀ matrix (p − center) ≤ 1}`.
    Ellipse { center: Point, matrix: Matrix2<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDomain {
    kind: DomainKind,
    center: Point,
    shape: Matrix2<f64>,
    /// `shape^{-1/2}`: maps the unit disc onto the domain (2D only).
    axes: Matrix2<f64>,
    interval: (f64, f64),
    theta: f64,
    scale: f64,
}

/// Boundary parameter: an angle for planar domains, an endpoint tag in 1D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryParam {
    Angle(f64),
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub position: Point,
    /// Inner unit normal.
    pub normal: Point,
    pub param: BoundaryParam,
}

/// Value, gradient and Hessian of a defining function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefiningJet {
    pub h: f64,
    pub grad: Point,
    pub hess: Matrix2<f64>,
}

fn spd_check(m: &Matrix2<f64>, what: &str) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has non-finite entries")));
    }
    let asym = (m[(0, 1)] - m[(1, 0)]).abs();
    if asym > 1e-12 * m.abs().max().max(1.0) {
        return Err(Error::InvalidInput(format!("{what} is not symmetric")));
    }
    let eig = SymmetricEigen::new(symmetrize(m)).eigenvalues;
    if eig.min() <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "{what} is not positive definite (eigenvalues {:e}, {:e})",
            eig[0], eig[1]
        )));
    }
    Ok(())
}

fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Matrix2::new(m[(0, 0)], off, off, m[(1, 1)])
}

fn inverse_sqrt_spd(m: &Matrix2<f64>) -> Matrix2<f64> {
    let eig = SymmetricEigen::new(*m);
    let d = Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let q = eig.eigenvectors;
    symmetrize(&(q * d * q.transpose()))
}

fn is_scalar_multiple_of_identity(m: &Matrix2<f64>) -> bool {
    let tol = 1e-14 * m.abs().max();
    (m[(0, 0)] - m[(1, 1)]).abs() <= tol && m[(0, 1)].abs() <= tol && m[(1, 0)].abs() <= tol
}

pub fn make_domain(spec: &DomainSpec) -> Result<ConvexDomain> {
    match *spec {
        DomainSpec::Interval { a, b } => {
            if !(a.is_finite() && b.is_finite()) || a >= b {
                return Err(Error::InvalidInput(format!("degenerate interval ({a}, {b})")));
            }
            let half = 0.5 * (b - a);
            // (b−p)(p−a)/(b−a) = (half/2)·(1 − (p−c)²/half²)
            let shape = Matrix2::new(1.0 / (half * half), 0.0, 0.0, 0.0);
            let scale = 0.5 * half;
            Ok(ConvexDomain {
                kind: DomainKind::Interval,
                center: Point::new(0.5 * (a + b), 0.0),
                shape,
                axes: Matrix2::new(half, 0.0, 0.0, 0.0),
                interval: (a, b),
                theta: 2.0 * scale * shape[(0, 0)],
                scale,
            })
        }
        DomainSpec::Disc { center, radius } => {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(Error::InvalidInput(format!("disc radius {radius} must be positive")));
            }
            let shape = Matrix2::identity() / (radius * radius);
            let scale = 0.5 * radius;
            Ok(ConvexDomain {
                kind: DomainKind::Disc,
                center,
                shape,
                axes: Matrix2::identity() * radius,
                interval: (0.0, 0.0),
                theta: 2.0 * scale / (radius * radius),
                scale,
            })
        }
        DomainSpec::Ellipse { center, matrix } => {
            spd_check(&matrix, "ellipse shape matrix")?;
            Ok(ellipse_from_shape(center, symmetrize(&matrix)))
        }
    }
}

fn ellipse_from_shape(center: Point, shape: Matrix2<f64>) -> ConvexDomain {
    if is_scalar_multiple_of_identity(&shape) {
        let radius = 1.0 / shape[(0, 0)].sqrt();
        return make_domain(&DomainSpec::Disc { center, radius })
            .expect("positive radius from SPD shape");
    }
    let axes = inverse_sqrt_spd(&shape);
    // |Dh| = 2s|M(p−c)|; pick s so that its arclength mean over ∂Ω is 1.
    let (mut weighted, mut length) = (0.0, 0.0);
    for i in 0..NORMALIZATION_SAMPLES {
        let phi = 2.0 * PI * i as f64 / NORMALIZATION_SAMPLES as f64;
        let e = Point::new(phi.cos(), phi.sin());
        let tangent = axes * Point::new(-phi.sin(), phi.cos());
        let ds = tangent.norm();
        weighted += 2.0 * (shape * axes * e).norm() * ds;
        length += ds;
    }
    let scale = length / weighted;
    let lambda_min = SymmetricEigen::new(shape).eigenvalues.min();
    ConvexDomain {
        kind: DomainKind::Ellipse,
        center,
        shape,
        axes,
        interval: (0.0, 0.0),
        theta: 2.0 * scale * lambda_min,
        scale,
    }
}

impl ConvexDomain {
    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            _ => 2,
        }
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn shape(&self) -> &Matrix2<f64> {
        &self.shape
    }

    /// Linear map sending the unit disc (or `[-1, 1]`) onto the domain about its centre.
    pub fn axes(&self) -> &Matrix2<f64> {
        &self.axes
    }

    /// Endpoints of an interval domain.
    pub fn interval(&self) -> Option<(f64, f64)> {
        (self.kind == DomainKind::Interval).then_some(self.interval)
    }

    /// Strict concavity constant: `D²h ⪯ −θ·I`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same zero set, defining function multiplied by `factor > 0`.
    pub fn rescaled(&self, factor: f64) -> ConvexDomain {
        assert!(factor > 0.0, "defining-function scale must be positive");
        ConvexDomain { scale: self.scale * factor, theta: self.theta * factor, ..self.clone() }
    }

    pub fn eval(&self, p: &Point) -> DefiningJet {
        eval_defining(self, p)
    }

    pub fn h(&self, p: &Point) -> f64 {
        let d = p - self.center;
        self.scale * (1.0 - d.dot(&(self.shape * d)))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.h(p) > 0.0
    }

    /// Distance from the centre to the boundary in direction `(cos φ, sin φ)`.
    pub fn boundary_radius(&self, phi: f64) -> f64 {
        let e = Point::new(phi.cos(), phi.sin());
        1.0 / e.dot(&(self.shape * e)).sqrt()
    }

    /// Boundary point at parameter `phi`: `c + L(cos φ, sin φ)`, `L = M^{-1/2}`.
    pub fn boundary_position(&self, phi: f64) -> Point {
        self.center + self.axes * Point::new(phi.cos(), phi.sin())
    }
}

pub fn eval_defining(domain: &ConvexDomain, p: &Point) -> DefiningJet {
    let d = p - domain.center;
    let md = domain.shape * d;
    DefiningJet {
        h: domain.scale * (1.0 - d.dot(&md)),
        grad: -2.0 * domain.scale * md,
        hess: -2.0 * domain.scale * domain.shape,
    }
}

pub fn inner_normal(domain: &ConvexDomain, param: BoundaryParam) -> Result<BoundaryPoint> {
    let position = match (domain.kind, param) {
        (DomainKind::Interval, BoundaryParam::Left) => Point::new(domain.interval.0, 0.0),
        (DomainKind::Interval, BoundaryParam::Right) => Point::new(domain.interval.1, 0.0),
        (DomainKind::Disc | DomainKind::Ellipse, BoundaryParam::Angle(phi)) => {
            domain.boundary_position(phi)
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "boundary parameter {param:?} does not fit a {:?} domain",
                domain.kind
            )))
        }
    };
    let grad = eval_defining(domain, &position).grad;
    Ok(BoundaryPoint { position, normal: grad / grad.norm(), param })
}

/// Image of `domain` under `p ↦ A(p − x_c) + b`, i.e. `Du₀(Ω)` for the
/// quadratic `u₀ = ½(x−x_c)ᵀA(x−x_c) + bᵀx`.
pub fn pushforward_quadratic(
    domain: &ConvexDomain,
    a: &Matrix2<f64>,
    b: &Point,
    x_c: &Point,
) -> Result<ConvexDomain> {
    let a = if domain.dim() == 1 {
        if !(a[(0, 0)].is_finite() && a[(0, 0)] > 0.0) {
            return Err(Error::InvalidInput(format!("A = {} is not positive", a[(0, 0)])));
        }
        Matrix2::new(a[(0, 0)], 0.0, 0.0, 1.0)
    } else {
        spd_check(a, "quadratic coefficient matrix A")?;
        symmetrize(a)
    };
    affine_image(domain, &a, &(b - a * x_c))
}

/// Image of `domain` under the invertible affine map `p ↦ L p + offset`.
pub fn affine_image(domain: &ConvexDomain, linear: &Matrix2<f64>, offset: &Point) -> Result<ConvexDomain> {
    if domain.dim() == 1 {
        let l = linear[(0, 0)];
        if !(l.is_finite() && l != 0.0) {
            return Err(Error::InvalidInput("singular 1D affine map".into()));
        }
        let (a, b) = domain.interval;
        let (ya, yb) = (l * a + offset[0], l * b + offset[0]);
        return make_domain(&DomainSpec::Interval { a: ya.min(yb), b: ya.max(yb) });
    }
    let inv = linear
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("singular affine map".into()))?;
    let shape = symmetrize(&(inv.transpose() * domain.shape * inv));
    let center = linear * domain.center + offset;
    spd_check(&shape, "image shape matrix")?;
    Ok(ellipse_from_shape(center, shape))
}
