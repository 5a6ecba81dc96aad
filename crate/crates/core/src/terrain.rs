//! Regular-grid heightmap of the test ground.
//!
//! Node `(row, col)` sits at `(origin_x + col * cell_size, origin_y + row * cell_size)`.
//! Heights between nodes are bilinearly interpolated, so the surface is
//! continuous and piecewise linear along each axis.

use std::fmt::Write as _;

use thiserror::Error;

/// Absolute slack applied to bounds checks so that queries landing exactly on
/// the far edge do not fail due to rounding.
const BOUNDS_EPS: f64 = 1e-9;

/// Cell size used by the built-in scenario layouts.
pub const SCENARIO_CELL_SIZE: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("query ({x:.4}, {y:.4}) outside terrain bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid terrain: {0}")]
    Invalid(String),
    #[error("terrain file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, TerrainError>;

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainGrid {
    cell_size: f64,
    origin: [f64; 2],
    rows: usize,
    cols: usize,
    heights: Vec<f64>,
}

impl TerrainGrid {
    /// Builds a grid from row-major heights (`rows * cols` values).
    pub fn new(
        cell_size: f64,
        origin: [f64; 2],
        rows: usize,
        cols: usize,
        heights: Vec<f64>,
    ) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(TerrainError::Invalid(format!("cell_size must be > 0, got {cell_size}")));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(TerrainError::Invalid("origin must be finite".into()));
        }
        if rows < 2 || cols < 2 {
            return Err(TerrainError::Invalid(format!(
                "grid must be at least 2x2, got {rows}x{cols}"
            )));
        }
        if heights.len() != rows * cols {
            return Err(TerrainError::Invalid(format!(
                "expected {} heights, got {}",
                rows * cols,
                heights.len()
            )));
        }
        if let Some(bad) = heights.iter().position(|h| !h.is_finite()) {
            return Err(TerrainError::Invalid(format!("non-finite height at index {bad}")));
        }
        Ok(Self { cell_size, origin, rows, cols, heights })
    }

    /// Grid with every node at `height`.
    pub fn flat(cell_size: f64, origin: [f64; 2], rows: usize, cols: usize, height: f64) -> Result<Self> {
        Self::new(cell_size, origin, rows, cols, vec![height; rows * cols])
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(
        cell_size: f64,
        origin: [f64; 2],
        rows: usize,
        cols: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut heights = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let x = origin[0] + c as f64 * cell_size;
                let y = origin[1] + r as f64 * cell_size;
                heights.push(f(x, y));
            }
        }
        Self::new(cell_size, origin, rows, cols, heights)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn node(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.cols + col]
    }

    pub fn node_position(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + col as f64 * self.cell_size,
            self.origin[1] + row as f64 * self.cell_size,
        ]
    }

    /// `[x_min, x_max, y_min, y_max]`.
    pub fn extent(&self) -> [f64; 4] {
        [
            self.origin[0],
            self.origin[0] + (self.cols - 1) as f64 * self.cell_size,
            self.origin[1],
            self.origin[1] + (self.rows - 1) as f64 * self.cell_size,
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let [x0, x1, y0, y1] = self.extent();
        x.is_finite()
            && y.is_finite()
            && x >= x0 - BOUNDS_EPS
            && x <= x1 + BOUNDS_EPS
            && y >= y0 - BOUNDS_EPS
            && y <= y1 + BOUNDS_EPS
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Splits a coordinate into (cell index, fraction). Coordinates within
    /// 1e-9 cells of a node snap to it so node queries are exact.
    fn locate(&self, v: f64, origin: f64, n: usize) -> (usize, f64) {
        let mut f = (v - origin) / self.cell_size;
        let nearest = f.round();
        if (f - nearest).abs() < 1e-9 {
            f = nearest;
        }
        let f = f.clamp(0.0, (n - 1) as f64);
        let i = (f.floor() as usize).min(n - 2);
        (i, f - i as f64)
    }

    pub fn height_at(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return Err(TerrainError::OutOfBounds { x, y });
        }
        let (c, tx) = self.locate(x, self.origin[0], self.cols);
        let (r, ty) = self.locate(y, self.origin[1], self.rows);
        let h00 = self.node(r, c);
        let h01 = self.node(r, c + 1);
        let h10 = self.node(r + 1, c);
        let h11 = self.node(r + 1, c + 1);
        Ok(h00 * (1.0 - tx) * (1.0 - ty)
            + h01 * tx * (1.0 - ty)
            + h10 * (1.0 - tx) * ty
            + h11 * tx * ty)
    }

    /// Central-difference gradient `(dh/dx, dh/dy)`, one-sided at the border.
    pub fn gradient_at(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        if !self.contains(x, y) {
            return Err(TerrainError::OutOfBounds { x, y });
        }
        let [x0, x1, y0, y1] = self.extent();
        let h = self.cell_size;
        let diff = |lo: f64, hi: f64, eval: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            Ok((eval(hi)? - eval(lo)?) / (hi - lo))
        };
        let gx = diff((x - h).max(x0), (x + h).min(x1), &|xx| self.height_at(xx, y))?;
        let gy = diff((y - h).max(y0), (y + h).min(y1), &|yy| self.height_at(x, yy))?;
        Ok([gx, gy])
    }

    /// Inclination of the surface normal from vertical, degrees in `[0, 90)`.
    pub fn slope_at(&self, x: f64, y: f64) -> Result<f64> {
        let [gx, gy] = self.gradient_at(x, y)?;
        Ok(gx.hypot(gy).atan().to_degrees())
    }

    /// Distance along `direction` to the first terrain intersection, or `None`
    /// when nothing is hit within `max_range` or the ray leaves the grid.
    ///
    /// Marches at a quarter cell and bisects the bracketing step down to 1e-5 m.
    pub fn raycast(&self, origin: [f64; 3], direction: [f64; 3], max_range: f64) -> Option<f64> {
        if !(max_range > 0.0) {
            return None;
        }
        let clearance = |t: f64| -> Option<f64> {
            let x = origin[0] + t * direction[0];
            let y = origin[1] + t * direction[1];
            let z = origin[2] + t * direction[2];
            self.height_at(x, y).ok().map(|h| z - h)
        };
        let first = clearance(0.0)?;
        if first <= 0.0 {
            return Some(0.0);
        }
        let step = self.cell_size / 4.0;
        let mut lo = 0.0;
        let mut k = 1usize;
        loop {
            let t = (k as f64 * step).min(max_range);
            let c = clearance(t)?;
            if c <= 0.0 {
                let mut hi = t;
                while hi - lo > 1e-5 {
                    let mid = 0.5 * (lo + hi);
                    match clearance(mid) {
                        Some(c) if c > 0.0 => lo = mid,
                        _ => hi = mid,
                    }
                }
                return Some(0.5 * (lo + hi));
            }
            if t >= max_range {
                return None;
            }
            lo = t;
            k += 1;
        }
    }

    /// Serializes to the `terrain v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "terrain v1 {} {} {} {} {}\n",
            self.rows, self.cols, self.cell_size, self.origin[0], self.origin[1]
        );
        for r in 0..self.rows {
            let row = &self.heights[r * self.cols..(r + 1) * self.cols];
            for (i, h) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{h}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `terrain v1` text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(TerrainError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let perr = |line: usize, msg: String| TerrainError::Parse { line: line + 1, msg };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 7 || fields[0] != "terrain" || fields[1] != "v1" {
            return Err(perr(
                hline,
                "expected `terrain v1 <rows> <cols> <cell_size> <origin_x> <origin_y>`".into(),
            ));
        }
        let rows: usize = fields[2].parse().map_err(|_| perr(hline, "bad rows".into()))?;
        let cols: usize = fields[3].parse().map_err(|_| perr(hline, "bad cols".into()))?;
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| perr(hline, format!("bad {what}")))
        };
        let cell_size = num(fields[4], "cell_size")?;
        let origin = [num(fields[5], "origin_x")?, num(fields[6], "origin_y")?];
        let mut heights = Vec::with_capacity(rows.saturating_mul(cols));
        let mut seen_rows = 0;
        for (ln, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| perr(ln, format!("bad height `{t}`"))))
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(perr(ln, format!("expected {cols} heights, got {}", row.len())));
            }
            heights.extend(row);
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(TerrainError::Parse {
                line: hline + 1,
                msg: format!("header declares {rows} rows, found {seen_rows}"),
            });
        }
        Self::new(cell_size, origin, rows, cols, heights)
    }
}

/// Axis-aligned region whose traversal counts as a climb of `slope_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimbZone {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub slope_deg: f64,
}

impl ClimbZone {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Built-in test-ground layouts. All face +x: approach strip, feature, landing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioTerrain {
    Flat,
    Slope { angle_deg: f64 },
    Stair { rise: f64, run: f64, count: u32 },
    WalledRoom,
}

/// Flat strip before a slope or stair begins.
pub const APPROACH_LENGTH: f64 = 1.5;
/// Flat strip after a slope or stair ends.
pub const LANDING_LENGTH: f64 = 2.5;
pub const SCENARIO_WIDTH: f64 = 3.0;
const RAMP_MAX_RISE: f64 = 1.0;
const RAMP_MAX_RUN: f64 = 6.0;
pub const ROOM_LENGTH: f64 = 5.0;
pub const ROOM_WIDTH: f64 = 4.0;
pub const ROOM_WALL_HEIGHT: f64 = 1.0;
pub const ROOM_WALL_THICKNESS: f64 = 0.1;

impl ScenarioTerrain {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScenarioTerrain::Slope { angle_deg } if !(angle_deg > 0.0 && angle_deg < 90.0) => Err(
                TerrainError::Invalid(format!("slope angle must be in (0, 90), got {angle_deg}")),
            ),
            ScenarioTerrain::Stair { rise, run, count } => {
                if !(rise > 0.0 && rise.is_finite()) || !(run > 0.0 && run.is_finite()) {
                    Err(TerrainError::Invalid(format!(
                        "stair rise and run must be > 0, got rise={rise} run={run}"
                    )))
                } else if count < 1 {
                    Err(TerrainError::Invalid("stair count must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Slope the climb gate sees for this layout: the ramp angle, or
    /// `atan(rise / run)` for a stair.
    pub fn effective_slope_deg(&self) -> f64 {
        match *self {
            ScenarioTerrain::Flat | ScenarioTerrain::WalledRoom => 0.0,
            ScenarioTerrain::Slope { angle_deg } => angle_deg,
            ScenarioTerrain::Stair { rise, run, count } => {
                (rise * count as f64).atan2(run * count as f64).to_degrees()
            }
        }
    }

    fn ramp_geometry(angle_deg: f64) -> (f64, f64) {
        let tan = angle_deg.to_radians().tan();
        let rise = RAMP_MAX_RISE.min(RAMP_MAX_RUN * tan);
        (rise, rise / tan)
    }

    /// Region of the climbing feature, if the layout has one.
    pub fn climb_zone(&self) -> Option<ClimbZone> {
        let (len, slope) = match *self {
            ScenarioTerrain::Flat | ScenarioTerrain::WalledRoom => return None,
            ScenarioTerrain::Slope { angle_deg } => (Self::ramp_geometry(angle_deg).1, angle_deg),
            ScenarioTerrain::Stair { run, count, .. } => {
                (run * count as f64, self.effective_slope_deg())
            }
        };
        Some(ClimbZone {
            x_min: APPROACH_LENGTH,
            x_max: APPROACH_LENGTH + len,
            y_min: f64::NEG_INFINITY,
            y_max: f64::INFINITY,
            slope_deg: slope,
        })
    }

    /// Builds the deterministic grid for this layout.
    pub fn build(&self) -> Result<TerrainGrid> {
        self.validate()?;
        let cs = SCENARIO_CELL_SIZE;
        let nodes = |len: f64| (len / cs).round() as usize + 1;
        // Node indices are compared as integers so feature faces land on the
        // same node regardless of float rounding in `origin + i * cs`.
        let idx = |x: f64| (x / cs).round() as i64;
        match *self {
            ScenarioTerrain::Flat => TerrainGrid::flat(cs, [0.0, 0.0], nodes(4.0), nodes(6.0), 0.0),
            ScenarioTerrain::Slope { angle_deg } => {
                let (rise, run) = Self::ramp_geometry(angle_deg);
                let tan = angle_deg.to_radians().tan();
                let length = APPROACH_LENGTH + run + LANDING_LENGTH;
                TerrainGrid::from_fn(cs, [0.0, 0.0], nodes(SCENARIO_WIDTH), nodes(length), |x, _| {
                    ((x - APPROACH_LENGTH) * tan).clamp(0.0, rise)
                })
            }
            ScenarioTerrain::Stair { rise, run, count } => {
                let length = APPROACH_LENGTH + (count as f64 - 1.0) * run + LANDING_LENGTH;
                let faces: Vec<i64> = (0..count)
                    .map(|k| idx(APPROACH_LENGTH + k as f64 * run))
                    .collect();
                TerrainGrid::from_fn(cs, [0.0, 0.0], nodes(SCENARIO_WIDTH), nodes(length), |x, _| {
                    let i = idx(x);
                    faces.iter().filter(|&&f| i >= f).count() as f64 * rise
                })
            }
            ScenarioTerrain::WalledRoom => {
                let (cols, rows) = (nodes(ROOM_LENGTH), nodes(ROOM_WIDTH));
                let t = idx(ROOM_WALL_THICKNESS);
                TerrainGrid::from_fn(cs, [0.0, 0.0], rows, cols, |x, y| {
                    let (i, j) = (idx(x), idx(y));
                    let edge = i < t || j < t || i > cols as i64 - 1 - t || j > rows as i64 - 1 - t;
                    if edge {
                        ROOM_WALL_HEIGHT
                    } else {
                        0.0
                    }
                })
            }
        }
    }
}

/// Convenience wrapper over [`ScenarioTerrain::build`].
pub fn build_scenario_terrain(kind: ScenarioTerrain) -> Result<TerrainGrid> {
    kind.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ramp(angle_deg: f64) -> TerrainGrid {
        let tan = angle_deg.to_radians().tan();
        TerrainGrid::from_fn(0.05, [0.0, 0.0], 41, 81, |x, _| x * tan).unwrap()
    }

    #[test]
    fn flat_height_is_constant() {
        let g = TerrainGrid::flat(0.1, [0.0, 0.0], 5, 5, 0.0).unwrap();
        assert_eq!(g.height_at(0.13, 0.37).unwrap(), 0.0);
        let g = TerrainGrid::flat(0.1, [-0.2, -0.2], 5, 5, 2.0).unwrap();
        assert_eq!(g.height_at(0.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn bilinear_midpoint() {
        // row 0 at y=0 has height 0, row 1 at y=1 has height 1
        let g = TerrainGrid::new(1.0, [0.0, 0.0], 2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(g.height_at(0.5, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        // hand evaluation at (0.25, 0.8): linear in y only
        assert_abs_diff_eq!(g.height_at(0.25, 0.8).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn out_of_bounds_queries_error() {
        let g = TerrainGrid::flat(0.1, [0.0, 0.0], 3, 3, 0.0).unwrap();
        assert!(matches!(g.height_at(0.3, 0.1), Err(TerrainError::OutOfBounds { .. })));
        assert!(g.slope_at(-0.01, 0.1).is_err());
        assert!(g.height_at(f64::NAN, 0.1).is_err());
        assert!(g.height_at(0.2, 0.2).is_ok());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TerrainGrid::new(0.0, [0.0, 0.0], 2, 2, vec![0.0; 4]).is_err());
        assert!(TerrainGrid::new(0.1, [0.0, 0.0], 1, 2, vec![0.0; 2]).is_err());
        assert!(TerrainGrid::new(0.1, [0.0, 0.0], 2, 2, vec![0.0; 3]).is_err());
        assert!(TerrainGrid::new(0.1, [0.0, 0.0], 2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn slopes_of_analytic_ramps() {
        let flat = TerrainGrid::flat(0.1, [0.0, 0.0], 5, 5, 0.3).unwrap();
        assert_eq!(flat.slope_at(0.2, 0.2).unwrap(), 0.0);
        assert_abs_diff_eq!(ramp(45.0).slope_at(2.0, 1.0).unwrap(), 45.0, epsilon = 0.5);
        assert_abs_diff_eq!(ramp(40.0).slope_at(2.0, 1.0).unwrap(), 40.0, epsilon = 0.5);
        // border uses one-sided differences and stays exact on a plane
        assert_abs_diff_eq!(ramp(40.0).slope_at(0.0, 0.0).unwrap(), 40.0, epsilon = 1e-9);
    }

    #[test]
    fn raycast_examples() {
        let floor = TerrainGrid::flat(0.05, [0.0, 0.0], 41, 81, 0.0).unwrap();
        assert_eq!(floor.raycast([0.5, 1.0, 1.0], [1.0, 0.0, 0.0], 10.0), None);
        let d = floor.raycast([1.0, 1.0, 1.0], [0.0, 0.0, -1.0], 10.0).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-3);

        // 2 m step whose top starts 1.5 m ahead of the ray origin
        let cs = 0.005;
        let step = TerrainGrid::from_fn(cs, [0.0, 0.0], 3, 801, |x, _| {
            if (x / cs).round() as i64 >= (1.5 / cs).round() as i64 { 2.0 } else { 0.0 }
        })
        .unwrap();
        let d = step.raycast([0.0, 0.005, 1.0], [1.0, 0.0, 0.0], 4.0).unwrap();
        assert_abs_diff_eq!(d, 1.5, epsilon = 5e-3);
    }

    #[test]
    fn raycast_respects_max_range() {
        let floor = TerrainGrid::flat(0.05, [0.0, 0.0], 41, 81, 0.0).unwrap();
        assert_eq!(floor.raycast([1.0, 1.0, 1.0], [0.0, 0.0, -1.0], 0.5), None);
        assert_eq!(floor.raycast([1.0, 1.0, 1.0], [0.0, 0.0, -1.0], 0.0), None);
    }

    #[test]
    fn scenario_layouts() {
        let flat = build_scenario_terrain(ScenarioTerrain::Flat).unwrap();
        assert_eq!(flat.slope_at(1.0, 1.0).unwrap(), 0.0);

        let slope = build_scenario_terrain(ScenarioTerrain::Slope { angle_deg: 40.0 }).unwrap();
        let zone = ScenarioTerrain::Slope { angle_deg: 40.0 }.climb_zone().unwrap();
        let mid = 0.5 * (zone.x_min + zone.x_max);
        assert_abs_diff_eq!(slope.slope_at(mid, 1.5).unwrap(), 40.0, epsilon = 0.5);

        let kind = ScenarioTerrain::Stair { rise: 0.15, run: 0.30, count: 5 };
        let stair = build_scenario_terrain(kind).unwrap();
        assert_abs_diff_eq!(stair.max_height(), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(kind.effective_slope_deg(), 0.5f64.atan().to_degrees(), epsilon = 1e-12);
        assert_abs_diff_eq!(kind.effective_slope_deg(), 26.565, epsilon = 1e-3);
        // first tread top and approach floor
        assert_eq!(stair.height_at(1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(stair.height_at(1.6, 1.0).unwrap(), 0.15, epsilon = 1e-12);
    }

    #[test]
    fn scenario_validation() {
        for bad in [
            ScenarioTerrain::Slope { angle_deg: 0.0 },
            ScenarioTerrain::Slope { angle_deg: 90.0 },
            ScenarioTerrain::Stair { rise: 0.0, run: 0.3, count: 2 },
            ScenarioTerrain::Stair { rise: 0.1, run: -0.3, count: 2 },
            ScenarioTerrain::Stair { rise: 0.1, run: 0.3, count: 0 },
        ] {
            assert!(build_scenario_terrain(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn walled_room_has_walls() {
        let room = build_scenario_terrain(ScenarioTerrain::WalledRoom).unwrap();
        assert_eq!(room.height_at(0.0, 2.0).unwrap(), ROOM_WALL_HEIGHT);
        assert_eq!(room.height_at(2.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn text_format_roundtrip() {
        let g = TerrainGrid::from_fn(0.25, [-1.0, 0.5], 3, 4, |x, y| 0.1 * x - y / 3.0).unwrap();
        let text = g.to_text();
        assert!(text.starts_with("terrain v1 3 4 0.25 -1 0.5\n"));
        assert_eq!(TerrainGrid::from_text(&text).unwrap(), g);
    }

    #[test]
    fn text_format_errors() {
        assert!(TerrainGrid::from_text("").is_err());
        assert!(TerrainGrid::from_text("terrain v2 2 2 1 0 0\n0 0\n0 0\n").is_err());
        let short_row = TerrainGrid::from_text("terrain v1 2 2 1 0 0\n0 0\n0\n");
        assert!(matches!(short_row, Err(TerrainError::Parse { line: 3, .. })));
        assert!(TerrainGrid::from_text("terrain v1 3 2 1 0 0\n0 0\n0 0\n").is_err());
    }
}
