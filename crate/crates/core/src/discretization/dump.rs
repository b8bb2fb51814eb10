//! Plain-text field dumps.
//!
//! ```text
//! n t N...              header: dimension, time, resolution (N, or N_s N_φ)
//! index coords value    one line per node, then one per ghost
//! ```
//!
//! Nodes come first (`index < node_count`), ghosts follow in column order.
//! Numbers are written in shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{Field, Grid, Resolution};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub n: usize,
    pub t: f64,
    pub resolution: Resolution,
    pub values: Vec<f64>,
}

pub fn format_field(field: &Field) -> String {
    let grid = field.grid();
    let n = grid.dim();
    let mut out = String::new();
    match grid.resolution() {
        Resolution::Interval(cells) => writeln!(out, "1 {} {}", field.t, cells),
        Resolution::Polar { ns, nphi } => writeln!(out, "2 {} {} {}", field.t, ns, nphi),
    }
    .expect("writing to a String");
    let nodes = grid.node_count();
    let points = (0..nodes)
        .map(|i| (grid.node_position(i), field.values[i]))
        .chain((0..grid.ghost_count()).map(|k| (grid.ghost_position(k), field.ghosts[k])));
    for (index, (p, v)) in points.enumerate() {
        if n == 1 {
            writeln!(out, "{index} {} {v}", p[0])
        } else {
            writeln!(out, "{index} {} {} {v}", p[0], p[1])
        }
        .expect("writing to a String");
    }
    out
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    std::fs::write(path, format_field(field)).map_err(|e| Error::io(path, e))
}

pub fn parse_field(text: &str) -> Result<FieldDump> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty field dump".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>().map_err(|_| parse_err(line, format!("not a number: {s:?}")))
    };
    let int = |s: &str, line: usize| -> Result<usize> {
        s.parse::<usize>().map_err(|_| parse_err(line, format!("not an integer: {s:?}")))
    };
    let (n, resolution) = match head.as_slice() {
        ["1", _, cells] => (1, Resolution::Interval(int(cells, hl)?)),
        ["2", _, ns, nphi] => (2, Resolution::Polar { ns: int(ns, hl)?, nphi: int(nphi, hl)? }),
        _ => return Err(parse_err(hl, format!("bad header {header:?}"))),
    };
    let t = num(head[1], hl)?;
    let mut values = Vec::new();
    for (ln, line) in lines {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != n + 2 {
            return Err(parse_err(ln, format!("expected {} columns, found {}", n + 2, cols.len())));
        }
        let index = int(cols[0], ln)?;
        if index != values.len() {
            return Err(parse_err(ln, format!("expected index {}, found {index}", values.len())));
        }
        values.push(num(cols[n + 1], ln)?);
    }
    Ok(FieldDump { n, t, resolution, values })
}

pub fn read_field(path: &Path) -> Result<FieldDump> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text)
}

impl FieldDump {
    /// Attaches the dump to `grid`, which must have the dumped resolution.
    pub fn into_field(self, grid: Arc<Grid>) -> Result<Field> {
        if grid.resolution() != self.resolution || grid.dim() != self.n {
            return Err(Error::GridMismatch(format!(
                "dump has resolution {:?}, grid has {:?}",
                self.resolution,
                grid.resolution()
            )));
        }
        let nodes = grid.node_count();
        if self.values.len() != nodes + grid.ghost_count() {
            return Err(Error::GridMismatch(format!(
                "dump has {} entries, grid needs {}",
                self.values.len(),
                nodes + grid.ghost_count()
            )));
        }
        let mut values = self.values;
        let ghosts = values.split_off(nodes);
        Ok(Field::new(grid, values, ghosts, self.t))
    }
}
