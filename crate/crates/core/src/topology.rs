//! Map lattices: unit coordinates, lattice distance and radius-r neighborhoods.
//!
//! Units are numbered row-major from 0. Square lattices (grid, string,
//! cylinder, torus) use the Chebyshev distance on `(row, col)`, with the
//! column axis wrapped for a cylinder and both axes wrapped for a torus, so
//! a grid neighborhood of radius `r` holds `(2r + 1)^2` units away from the
//! borders. Hexagonal maps store odd rows shifted half a cell to the right
//! and measure distance in axial hex coordinates; they never wrap.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Grid,
    String,
    Cylinder,
    Torus,
    HexGrid,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Grid => "grid",
            TopologyKind::String => "string",
            TopologyKind::Cylinder => "cylinder",
            TopologyKind::Torus => "torus",
            TopologyKind::HexGrid => "hex",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grid" => Ok(TopologyKind::Grid),
            "string" => Ok(TopologyKind::String),
            "cylinder" => Ok(TopologyKind::Cylinder),
            "torus" => Ok(TopologyKind::Torus),
            "hex" | "hexgrid" => Ok(TopologyKind::HexGrid),
            other => Err(Error::InvalidTopology(format!("unknown topology `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MapTopology {
    kind: TopologyKind,
    rows: usize,
    cols: usize,
}

impl MapTopology {
    pub fn new(kind: TopologyKind, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidTopology(format!(
                "rows and cols must be positive, got {rows}x{cols}"
            )));
        }
        if kind == TopologyKind::String && cols != 1 {
            return Err(Error::InvalidTopology(format!(
                "a string has a single column, got {cols}"
            )));
        }
        Ok(Self { kind, rows, cols })
    }

    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        Self::new(TopologyKind::Grid, rows, cols)
    }

    pub fn string(len: usize) -> Result<Self> {
        Self::new(TopologyKind::String, len, 1)
    }

    pub fn cylinder(rows: usize, cols: usize) -> Result<Self> {
        Self::new(TopologyKind::Cylinder, rows, cols)
    }

    pub fn torus(rows: usize, cols: usize) -> Result<Self> {
        Self::new(TopologyKind::Torus, rows, cols)
    }

    pub fn hex(rows: usize, cols: usize) -> Result<Self> {
        Self::new(TopologyKind::HexGrid, rows, cols)
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn unit_count(&self) -> usize {
        self.rows * self.cols
    }

    /// True for 2-D square lattices (the ones with 8 compass neighbors).
    pub fn is_square_2d(&self) -> bool {
        matches!(
            self.kind,
            TopologyKind::Grid | TopologyKind::Cylinder | TopologyKind::Torus
        )
    }

    fn check(&self, unit: usize) -> Result<()> {
        if unit >= self.unit_count() {
            Err(Error::UnitOutOfRange {
                index: unit,
                len: self.unit_count(),
            })
        } else {
            Ok(())
        }
    }

    pub fn unit_coords(&self, unit: usize) -> Result<(usize, usize)> {
        self.check(unit)?;
        Ok((unit / self.cols, unit % self.cols))
    }

    pub fn unit_at(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.rows && col < self.cols).then(|| row * self.cols + col)
    }

    /// Lattice distance between two units. Panics on out-of-range units.
    pub fn lattice_distance(&self, a: usize, b: usize) -> usize {
        assert!(a < self.unit_count() && b < self.unit_count());
        let (ra, ca) = (a / self.cols, a % self.cols);
        let (rb, cb) = (b / self.cols, b % self.cols);
        let dr = ra.abs_diff(rb);
        let dc = ca.abs_diff(cb);
        match self.kind {
            TopologyKind::Grid | TopologyKind::String => dr.max(dc),
            TopologyKind::Cylinder => dr.max(dc.min(self.cols - dc)),
            TopologyKind::Torus => dr.min(self.rows - dr).max(dc.min(self.cols - dc)),
            TopologyKind::HexGrid => {
                let (qa, qb) = (axial_q(ra, ca), axial_q(rb, cb));
                let dq = qa - qb;
                let dr = ra as i64 - rb as i64;
                ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as usize
            }
        }
    }

    /// `V_r(unit)`: every unit at lattice distance at most `r`, in index order.
    pub fn neighborhood(&self, unit: usize, r: usize) -> Result<Vec<usize>> {
        self.check(unit)?;
        Ok((0..self.unit_count())
            .filter(|&j| self.lattice_distance(unit, j) <= r)
            .collect())
    }

    /// The unit one step away in compass direction `(d_row, d_col)`, with wrapping
    /// where the topology wraps. Only meaningful for square lattices.
    pub fn step(&self, unit: usize, d_row: isize, d_col: isize) -> Option<usize> {
        let (row, col) = self.unit_coords(unit).ok()?;
        let wrap_rows = self.kind == TopologyKind::Torus;
        let wrap_cols = matches!(self.kind, TopologyKind::Torus | TopologyKind::Cylinder);
        let r = shift(row, d_row, self.rows, wrap_rows)?;
        let c = shift(col, d_col, self.cols, wrap_cols)?;
        let target = r * self.cols + c;
        (target != unit).then_some(target)
    }
}

fn axial_q(row: usize, col: usize) -> i64 {
    col as i64 - ((row as i64) - (row as i64 & 1)) / 2
}

fn shift(pos: usize, delta: isize, len: usize, wrap: bool) -> Option<usize> {
    let moved = pos as isize + delta;
    if wrap {
        Some(moved.rem_euclid(len as isize) as usize)
    } else if moved < 0 || moved >= len as isize {
        None
    } else {
        Some(moved as usize)
    }
}

/// Piecewise-constant neighborhood radius: `(first_iteration, radius)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadiusSchedule {
    steps: Vec<(usize, usize)>,
}

impl RadiusSchedule {
    pub fn new(steps: Vec<(usize, usize)>) -> Result<Self> {
        let Some(&(first, _)) = steps.first() else {
            return Err(Error::InvalidSchedule("radius schedule is empty".into()));
        };
        if first != 0 {
            return Err(Error::InvalidSchedule(format!(
                "radius schedule must start at iteration 0, starts at {first}"
            )));
        }
        for w in steps.windows(2) {
            let ((t0, r0), (t1, r1)) = (w[0], w[1]);
            if t1 <= t0 {
                return Err(Error::InvalidSchedule(format!(
                    "thresholds must increase strictly ({t0} then {t1})"
                )));
            }
            if r1 > r0 {
                return Err(Error::InvalidSchedule(format!(
                    "radii must not increase ({r0} then {r1})"
                )));
            }
        }
        Ok(Self { steps })
    }

    pub fn constant(radius: usize) -> Self {
        Self {
            steps: vec![(0, radius)],
        }
    }

    /// Splits `total` iterations into equal consecutive segments, one per radius.
    pub fn evenly_spaced(radii: &[usize], total: usize) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidSchedule("no radii given".into()));
        }
        if total < radii.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} radius segments do not fit in {total} iterations",
                radii.len()
            )));
        }
        let steps = radii
            .iter()
            .enumerate()
            .map(|(k, &r)| (k * total / radii.len(), r))
            .collect();
        Self::new(steps)
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    pub fn radius_at(&self, t: usize) -> usize {
        self.steps
            .iter()
            .take_while(|&&(start, _)| start <= t)
            .last()
            .map(|&(_, r)| r)
            .unwrap_or(self.steps[0].1)
    }

    /// True when no radius change happens at or after iteration `t`.
    pub fn is_final_at(&self, t: usize) -> bool {
        let current = self.radius_at(t);
        self.steps
            .iter()
            .all(|&(start, r)| start <= t || r == current)
    }

    pub fn max_radius(&self) -> usize {
        self.steps[0].1
    }
}

impl fmt::Display for RadiusSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.steps.iter().map(|(t, r)| format!("{r}@{t}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for RadiusSchedule {
    type Err = Error;

    /// Parses `"r@t,r@t,..."`, e.g. `"2@0,1@400,0@800"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (r, t) = part
                .split_once('@')
                .ok_or_else(|| Error::InvalidSchedule(format!("expected r@t, got `{part}`")))?;
            let r = r
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSchedule(format!("bad radius in `{part}`")))?;
            let t = t
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSchedule(format!("bad iteration in `{part}`")))?;
            steps.push((t, r));
        }
        Self::new(steps)
    }
}
