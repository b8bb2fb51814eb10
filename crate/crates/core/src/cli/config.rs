//! Line-based run configuration: `key = value`, `#` comments, dotted keys.
//!
//! ```text
//! mode = flow                      # flow | steady | legendre-check | monitor-replay
//! omega.kind = disc                # interval | disc | ellipse
//! omega.center = 0, 0
//! omega.radius = 1
//! omega.matrix = 1, 0, 0, 1        # ellipse shape matrix, row-major
//! omega.interval = 0, 1
//! omega_tilde = pushforward        # or omega_tilde.kind = ... with the omega keys
//! generator.kind = perturbed       # quadratic | perturbed
//! generator.a = 2, 0, 0, 1         # a single number in 1D
//! generator.b = 0, 0
//! generator.xc = 0, 0
//! generator.eps = 0.01
//! generator.bump_center = 0.2, 0.1 # drawn from `seed` when absent
//! generator.bump_width = 0.4
//! grid.n = 200                     # 1D cells
//! grid.ns = 24                     # 2D rings and angular nodes
//! grid.nphi = 48
//! control.sigma = 0.5
//! control.tol_c = 1e-6
//! control.tol_b = 1e-12
//! control.newton_max_iter = 50
//! control.max_steps = 2000000
//! control.report_every = 1
//! output.dump_every = 0            # 0: final slice only
//! output.svg = true
//! seed = 1
//! steady.tol = 1e-10
//! steady.max_iter = 50
//! steady.guess = initial           # or a field dump path
//! legendre.t_start = 0.05
//! legendre.gap = 0.01
//! legendre.tol = 0.05
//! replay.monitors = run/monitors.csv
//! replay.field = run/field_final.txt
//! ```
//!
//! Relative paths resolve against the directory of the configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{build_grid, Resolution};
use crate::error::{Error, Result};
use crate::flow::{bump_fits, Generator, StepControl};
use crate::geometry::{make_domain, ConvexDomain, DomainSpec, Point};
use crate::steady::SteadyOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Flow,
    Steady,
    LegendreCheck,
    MonitorReplay,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "flow" => Ok(Mode::Flow),
            "steady" => Ok(Mode::Steady),
            "legendre-check" => Ok(Mode::LegendreCheck),
            "monitor-replay" => Ok(Mode::MonitorReplay),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Raw `key → (line, value)` table; overrides carry line 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (usize, String)>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = ConfigMap::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(err(format!("invalid key {k:?}")));
            }
            if let Some((first, _)) = map.entries.insert(k.to_string(), (i + 1, v.to_string())) {
                return Err(err(format!("duplicate key {k:?} (first set on line {first})")));
            }
        }
        Ok(map)
    }

    /// Applies `key=value`, replacing any value from the file.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("override {assignment:?} is not key=value")))?;
        let k = k.trim();
        if !valid_key(k) {
            return Err(Error::InvalidInput(format!("invalid override key {k:?}")));
        }
        self.entries.insert(k.to_string(), (0, v.trim().to_string()));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    fn err(&self, key: &str, message: String) -> Error {
        match self.line(key) {
            0 => Error::InvalidInput(format!("{key}: {message}")),
            line => Error::Parse { line, message: format!("{key}: {message}") },
        }
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| self.err(key, format!("not a number: {s:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn scalar(&self, key: &str) -> Result<Option<f64>> {
        match self.numbers(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(self.err(key, "expected a single number".into())),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.get(key).map(|v| v.parse::<usize>().map_err(|_| self.err(key, format!("not a count: {v:?}")))).transpose()
    }

    fn point(&self, key: &str, dim: usize) -> Result<Option<Point>> {
        match self.numbers(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some(Point::new(v[0], v[1]))),
            Some(v) if v.len() == 1 && dim == 1 => Ok(Some(Point::new(v[0], 0.0))),
            Some(_) => Err(self.err(key, format!("expected {dim} coordinate(s)"))),
        }
    }

    fn matrix(&self, key: &str, dim: usize) -> Result<Option<Matrix2<f64>>> {
        match self.numbers(key)? {
            None => Ok(None),
            Some(v) if v.len() == 4 => Ok(Some(Matrix2::new(v[0], v[1], v[2], v[3]))),
            Some(v) if v.len() == 1 && dim == 1 => Ok(Some(Matrix2::new(v[0], 0.0, 0.0, 0.0))),
            Some(_) => Err(self.err(key, "expected 4 entries (row-major 2×2)".into())),
        }
    }

    fn flag(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some("true" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "no" | "0") => Ok(Some(false)),
            Some(v) => Err(self.err(key, format!("not a boolean: {v:?}"))),
        }
    }

    fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }
}

const KNOWN: &[&str] = &[
    "mode",
    "omega.kind",
    "omega.center",
    "omega.radius",
    "omega.matrix",
    "omega.interval",
    "omega_tilde",
    "omega_tilde.kind",
    "omega_tilde.center",
    "omega_tilde.radius",
    "omega_tilde.matrix",
    "omega_tilde.interval",
    "generator.kind",
    "generator.a",
    "generator.b",
    "generator.xc",
    "generator.eps",
    "generator.bump_center",
    "generator.bump_width",
    "grid.n",
    "grid.ns",
    "grid.nphi",
    "control.sigma",
    "control.tol_c",
    "control.tol_b",
    "control.newton_max_iter",
    "control.max_steps",
    "control.report_every",
    "output.dump_every",
    "output.svg",
    "seed",
    "steady.tol",
    "steady.max_iter",
    "steady.guess",
    "legendre.t_start",
    "legendre.gap",
    "legendre.tol",
    "replay.monitors",
    "replay.field",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendreOptions {
    pub t_start: f64,
    pub gap: f64,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub omega: ConvexDomain,
    pub omega_tilde: Option<ConvexDomain>,
    pub generator: Generator,
    pub resolution: Resolution,
    pub control: StepControl,
    pub dump_every: usize,
    pub svg: bool,
    pub seed: u64,
    pub steady: SteadyOptions,
    pub steady_guess: Option<PathBuf>,
    pub legendre: LegendreOptions,
    pub replay_monitors: Option<PathBuf>,
    pub replay_field: Option<PathBuf>,
}

fn domain(map: &ConfigMap, prefix: &str) -> Result<ConvexDomain> {
    let key = |k: &str| format!("{prefix}.{k}");
    let kind = map.get(&key("kind")).ok_or_else(|| Error::InvalidInput(format!("{prefix}.kind is required")))?;
    let spec = match kind {
        "interval" => {
            let iv = map.numbers(&key("interval"))?.ok_or_else(|| map.err(&key("kind"), "interval needs .interval = a, b".into()))?;
            if iv.len() != 2 {
                return Err(map.err(&key("interval"), "expected two endpoints".into()));
            }
            DomainSpec::Interval { a: iv[0], b: iv[1] }
        }
        "disc" => DomainSpec::Disc {
            center: map.point(&key("center"), 2)?.unwrap_or_else(Point::zeros),
            radius: map.scalar(&key("radius"))?.unwrap_or(1.0),
        },
        "ellipse" => DomainSpec::Ellipse {
            center: map.point(&key("center"), 2)?.unwrap_or_else(Point::zeros),
            matrix: map.matrix(&key("matrix"), 2)?.ok_or_else(|| map.err(&key("kind"), "ellipse needs .matrix".into()))?,
        },
        other => return Err(map.err(&key("kind"), format!("unknown domain kind {other:?}"))),
    };
    make_domain(&spec).map_err(|e| map.err(&key("kind"), e.to_string()))
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = ConfigMap::parse(&text)?;
        for o in overrides {
            map.set(o)?;
        }
        Self::from_map(&map, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_map(map: &ConfigMap, base: &Path) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(map.err(k, "unknown key".into()));
        }
        let mode = map.get("mode").map(|m| m.parse::<Mode>().map_err(|e| map.err("mode", e))).transpose()?;
        let omega = domain(map, "omega")?;
        let n = omega.dim();
        let omega_tilde = match (map.get("omega_tilde"), map.get("omega_tilde.kind")) {
            (Some("pushforward") | None, None) => None,
            (None, Some(_)) => Some(domain(map, "omega_tilde")?),
            (Some(v), _) => return Err(map.err("omega_tilde", format!("expected `pushforward` or omega_tilde.* keys, got {v:?}"))),
        };
        if omega_tilde.as_ref().is_some_and(|t| t.dim() != n) {
            return Err(map.err("omega_tilde.kind", "Ω and Ω̃ have different dimensions".into()));
        }

        let seed = map.get("seed").map(|v| v.parse::<u64>().map_err(|_| map.err("seed", format!("not a seed: {v:?}")))).transpose()?.unwrap_or(0);
        let a = map.matrix("generator.a", n)?.unwrap_or_else(Matrix2::identity);
        let a = if n == 1 { Matrix2::new(a[(0, 0)], 0.0, 0.0, 0.0) } else { a };
        let b = map.point("generator.b", n)?.unwrap_or_else(Point::zeros);
        let x_c = map.point("generator.xc", n)?.unwrap_or_else(Point::zeros);
        let spd = if n == 1 { a[(0, 0)] > 0.0 } else { (a - a.transpose()).norm() <= 1e-14 * a.norm() && a.cholesky().is_some() };
        if !spd {
            return Err(map.err("generator.a", "A must be symmetric positive definite".into()));
        }
        let generator = match map.get("generator.kind").unwrap_or("quadratic") {
            "quadratic" => Generator::Quadratic { a, b, x_c },
            "perturbed" => {
                let eps = map.scalar("generator.eps")?.ok_or_else(|| map.err("generator.kind", "perturbed needs generator.eps".into()))?;
                let width = map.scalar("generator.bump_width")?.unwrap_or(0.25);
                if !(width > 0.0) {
                    return Err(map.err("generator.bump_width", "width must be positive".into()));
                }
                let center = match map.point("generator.bump_center", n)? {
                    Some(c) => c,
                    None => random_bump_center(&omega, width, seed).ok_or_else(|| {
                        map.err("generator.bump_width", "no bump of this width fits strictly inside Ω".into())
                    })?,
                };
                Generator::Perturbed { a, b, x_c, eps, center, width }
            }
            other => return Err(map.err("generator.kind", format!("unknown generator {other:?}"))),
        };

        let resolution = if n == 1 {
            Resolution::Interval(map.count("grid.n")?.unwrap_or(100))
        } else {
            Resolution::Polar { ns: map.count("grid.ns")?.unwrap_or(16), nphi: map.count("grid.nphi")?.unwrap_or(32) }
        };
        build_grid(&omega, resolution).map_err(|e| map.err(if n == 1 { "grid.n" } else { "grid.ns" }, e.to_string()))?;

        let d = StepControl::default();
        let control = StepControl {
            sigma: map.scalar("control.sigma")?.unwrap_or(d.sigma),
            tol_converge: map.scalar("control.tol_c")?.unwrap_or(d.tol_converge),
            tol_boundary: map.scalar("control.tol_b")?.unwrap_or(d.tol_boundary),
            boundary_max_iter: map.count("control.newton_max_iter")?.unwrap_or(d.boundary_max_iter),
            max_steps: map.count("control.max_steps")?.unwrap_or(d.max_steps),
            report_every: map.count("control.report_every")?.unwrap_or(d.report_every),
            max_halvings: d.max_halvings,
        };
        control.validate().map_err(|e| map.err("control.sigma", e.to_string()))?;

        let ds = SteadyOptions::default();
        let steady = SteadyOptions {
            tol: map.scalar("steady.tol")?.unwrap_or(ds.tol),
            max_iter: map.count("steady.max_iter")?.unwrap_or(ds.max_iter),
            max_halvings: ds.max_halvings,
        };
        if !(steady.tol > 0.0) || steady.max_iter == 0 {
            return Err(map.err("steady.tol", "steady tolerance and iteration cap must be positive".into()));
        }
        let existing = |key: &str| -> Result<Option<PathBuf>> {
            match map.get(key) {
                None => Ok(None),
                Some(v) => {
                    let p = resolve(base, v);
                    if p.exists() {
                        Ok(Some(p))
                    } else {
                        Err(map.err(key, format!("{} does not exist", p.display())))
                    }
                }
            }
        };
        let steady_guess = match map.get("steady.guess") {
            None | Some("initial") => None,
            Some(_) => existing("steady.guess")?,
        };
        let legendre = LegendreOptions {
            t_start: map.scalar("legendre.t_start")?.unwrap_or(0.05),
            gap: map.scalar("legendre.gap")?.unwrap_or(0.01),
            tol: map.scalar("legendre.tol")?.unwrap_or(0.05),
        };
        if !(legendre.t_start >= 0.0 && legendre.gap > 0.0 && legendre.tol > 0.0) {
            return Err(map.err("legendre.gap", "legendre times and tolerance must be positive".into()));
        }

        Ok(RunConfig {
            mode,
            omega,
            omega_tilde,
            generator,
            resolution,
            control,
            dump_every: map.count("output.dump_every")?.unwrap_or(0),
            svg: map.flag("output.svg")?.unwrap_or(true),
            seed,
            steady,
            steady_guess,
            legendre,
            replay_monitors: existing("replay.monitors")?,
            replay_field: existing("replay.field")?,
        })
    }
}

/// Uniform draw of a bump centre whose support lies strictly inside `omega`.
pub fn random_bump_center(omega: &ConvexDomain, width: f64, seed: u64) -> Option<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = omega.center();
    let reach = if let Some((a, b)) = omega.interval() { 0.5 * (b - a) } else { omega.axes().norm() };
    (0..10_000)
        .map(|_| {
            let x = rng.gen_range(-reach..reach);
            let y = if omega.dim() == 1 { 0.0 } else { rng.gen_range(-reach..reach) };
            c + Point::new(x, y)
        })
        .find(|p| bump_fits(omega, p, width))
}
