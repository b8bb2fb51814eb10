//! File outputs: 1D profiles, ten-level SVG contour plots, JSON reports.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::discretization::{differentiate, Field, Interpolant, Jet};
use crate::error::{Error, Result};
use crate::geometry::Point;

pub const PROFILE_HEADER: &str = "x,u,du,d2u,F";

/// One `x,u,u',u'',F` line per node of a 1D field.
pub fn profile_csv(field: &Field) -> Result<String> {
    if field.dim() != 1 {
        return Err(Error::InvalidInput("profiles are written for 1D fields only".into()));
    }
    let jets = differentiate(field);
    let grid = field.grid();
    let mut out = format!("{PROFILE_HEADER}\n");
    for (i, j) in jets.jets.iter().enumerate() {
        writeln!(out, "{},{},{},{},{}", grid.node_position(i)[0], field.values[i], j.grad[0], j.hess[(0, 0)], j.phase)
            .expect("writing to a String");
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(format!("serializing {}: {e}", path.display())))?;
    write_text(path, &(text + "\n"))
}

const LEVELS: usize = 10;
const RASTER: usize = 96;
const PANEL: f64 = 360.0;
const MARGIN: f64 = 24.0;

/// Sampled values on a square raster over the bounding box; `NaN` outside Ω.
struct Raster {
    lo: Point,
    step: f64,
    values: Vec<f64>,
}

impl Raster {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * (RASTER + 1) + i]
    }
}

fn rasters(field: &Field) -> (Raster, Raster) {
    let grid = field.grid();
    let domain = grid.domain();
    let it = Interpolant::new(field);
    // the bounding box of c + L·(unit disc) has half-widths ‖row_i(L)‖
    let axes = domain.axes();
    let half = Point::new(axes.row(0).norm(), axes.row(1).norm());
    let side = 2.0 * half.max();
    let lo = domain.center() - Point::new(0.5 * side, 0.5 * side);
    let step = side / RASTER as f64;
    let mut u = Vec::with_capacity((RASTER + 1) * (RASTER + 1));
    let mut f = Vec::with_capacity(u.capacity());
    for j in 0..=RASTER {
        for i in 0..=RASTER {
            let p = lo + step * Point::new(i as f64, j as f64);
            if domain.contains(&p) {
                let (v, d) = it.eval(&p);
                u.push(v);
                f.push(Jet::from_derivs(d, 2).phase);
            } else {
                u.push(f64::NAN);
                f.push(f64::NAN);
            }
        }
    }
    (Raster { lo, step, values: u }, Raster { lo, step, values: f })
}

/// Marching squares: line segments of `{v = level}` in raster coordinates.
fn march(r: &Raster, level: f64) -> Vec<(Point, Point)> {
    let mut segs = Vec::new();
    for j in 0..RASTER {
        for i in 0..RASTER {
            let c = [r.at(i, j), r.at(i + 1, j), r.at(i + 1, j + 1), r.at(i, j + 1)];
            if c.iter().any(|v| v.is_nan()) {
                continue;
            }
            let corner = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            // edges: bottom, right, top, left
            let mut cross: [Option<Point>; 4] = [None; 4];
            for e in 0..4 {
                let (a, b) = (c[e] - level, c[(e + 1) % 4] - level);
                if (a < 0.0) != (b < 0.0) {
                    let w = a / (a - b);
                    let (p, q) = (corner[e], corner[(e + 1) % 4]);
                    cross[e] = Some(Point::new(i as f64 + p.0 + w * (q.0 - p.0), j as f64 + p.1 + w * (q.1 - p.1)));
                }
            }
            let hits: Vec<usize> = (0..4).filter(|&e| cross[e].is_some()).collect();
            let pairs: Vec<(usize, usize)> = match hits.len() {
                2 => vec![(hits[0], hits[1])],
                4 => {
                    let centre = c.iter().sum::<f64>() / 4.0;
                    if (centre < level) == (c[0] < level) {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(0, 3), (1, 2)]
                    }
                }
                _ => Vec::new(),
            };
            segs.extend(pairs.into_iter().map(|(a, b)| (cross[a].unwrap(), cross[b].unwrap())));
        }
    }
    segs
}

fn panel(out: &mut String, r: &Raster, title: &str, x0: f64, boundary: &[Point]) {
    let finite = r.values.iter().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = finite.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let px = |p: &Point| (x0 + MARGIN + PANEL * p[0] / RASTER as f64, MARGIN + PANEL * (1.0 - p[1] / RASTER as f64));
    writeln!(out, r#"<g><text x="{:.1}" y="16" font-size="13" font-family="sans-serif">{title}: [{lo:.6e}, {hi:.6e}]</text>"#, x0 + MARGIN).unwrap();
    let mut d = String::new();
    for (k, p) in boundary.iter().enumerate() {
        let (x, y) = px(&((p - r.lo) / r.step));
        write!(d, "{}{x:.2} {y:.2} ", if k == 0 { "M" } else { "L" }).unwrap();
    }
    writeln!(out, r#"<path d="{d}Z" fill="none" stroke="black" stroke-width="1"/>"#).unwrap();
    // a constant panel would only contour rounding noise
    if hi - lo > 1e-10 * hi.abs().max(1.0) {
        for k in 0..LEVELS {
            let level = lo + (k as f64 + 0.5) * (hi - lo) / LEVELS as f64;
            let mut d = String::new();
            for (a, b) in march(r, level) {
                let ((ax, ay), (bx, by)) = (px(&a), px(&b));
                write!(d, "M{ax:.2} {ay:.2} L{bx:.2} {by:.2} ").unwrap();
            }
            let hue = 240.0 * (1.0 - k as f64 / (LEVELS - 1) as f64);
            writeln!(out, r#"<path data-level="{level:e}" d="{}" fill="none" stroke="hsl({hue:.0},80%,45%)" stroke-width="1"/>"#, d.trim_end()).unwrap();
        }
    }
    out.push_str("</g>\n");
}

/// Single SVG with ten-level contours of `u` (left) and `F(D²u)` (right).
pub fn contour_svg(field: &Field) -> Result<String> {
    if field.dim() != 2 {
        return Err(Error::InvalidInput("contour plots need a 2D field".into()));
    }
    let (u, f) = rasters(field);
    let domain = field.grid().domain();
    let boundary: Vec<Point> = (0..256).map(|k| domain.boundary_position(2.0 * std::f64::consts::PI * k as f64 / 256.0)).collect();
    let width = 2.0 * (PANEL + 2.0 * MARGIN);
    let height = PANEL + 2.0 * MARGIN;
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    );
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    panel(&mut out, &u, &format!("u, t = {}", field.t), 0.0, &boundary);
    panel(&mut out, &f, "F", PANEL + 2.0 * MARGIN, &boundary);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Resolution};
    use crate::geometry::{make_domain, DomainSpec};
    use std::sync::Arc;

    #[test]
    fn profile_has_one_row_per_node() {
        let d = make_domain(&DomainSpec::Interval { a: 0.0, b: 1.0 }).unwrap();
        let g = Arc::new(build_grid(&d, Resolution::Interval(10)).unwrap());
        let field = Field::from_fn(g, 0.0, |p| p[0] * p[0] + p[0]);
        let csv = profile_csv(&field).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PROFILE_HEADER);
        assert_eq!(lines.len(), 12);
        let row: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
        assert!((row[2] - (2.0 * row[0] + 1.0)).abs() < 1e-12);
        assert!((row[3] - 2.0).abs() < 1e-10);
        assert!((row[4] - 2f64.atan()).abs() < 1e-10);
    }

    #[test]
    fn radial_quadratic_gives_concentric_circles() {
        let d = make_domain(&DomainSpec::Disc { center: Point::zeros(), radius: 1.0 }).unwrap();
        let g = Arc::new(build_grid(&d, Resolution::Polar { ns: 8, nphi: 16 }).unwrap());
        let field = Field::from_fn(g, 0.0, |p| 0.5 * p.norm_squared());
        let (u, _) = rasters(&field);
        for k in [1, 5, 9] {
            let level = 0.5 * (0.1 * k as f64) * (0.1 * k as f64);
            let segs = march(&u, level);
            assert!(!segs.is_empty());
            let centre = RASTER as f64 / 2.0;
            for (a, _) in segs {
                let r = ((a - Point::new(centre, centre)) * u.step).norm();
                assert!((r - 0.1 * k as f64).abs() < 0.01, "level {k}: radius {r}");
            }
        }
        let svg = contour_svg(&field).unwrap();
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
        // F is constant up to rounding, so only the u panel is contoured
        assert_eq!(svg.matches("data-level").count(), LEVELS);
    }
}
