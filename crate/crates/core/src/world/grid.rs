use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::error::MapError;

/// Default cell edge length; one forward primitive crosses exactly one cell.
pub const DEFAULT_CELL_SIZE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    pub cell: Cell,
    /// Object category; carried as metadata only.
    pub category_label: String,
}

/// Continuous agent pose in meters; heading in radians, counter-clockwise
/// from +x, normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_heading(heading) }
    }

    pub fn at_cell(grid: &OccupancyGrid, cell: Cell, heading: f64) -> Self {
        let (x, y) = grid.cell_center(cell);
        Self::new(x, y, heading)
    }
}

pub fn normalize_heading(h: f64) -> f64 {
    let r = h.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Sealed 2-D occupancy map. Row `y` of the file is `y` in world
/// coordinates; cell `(x, y)` covers `[x·s, (x+1)·s] × [y·s, (y+1)·s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cell_size: f64,
    occupied: Vec<bool>,
    goal: GoalSpec,
}

impl OccupancyGrid {
    /// Builds and validates a grid from a row-major occupancy vector.
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        occupied: Vec<bool>,
        goal: GoalSpec,
    ) -> Result<Self, MapError> {
        if width < 3 || height < 3 {
            return Err(MapError::TooSmall { width, height });
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(MapError::BadCellSize(cell_size));
        }
        assert_eq!(occupied.len(), width * height, "occupancy vector length");
        let grid = Self { width, height, cell_size, occupied, goal };
        for x in 0..width {
            for y in [0, height - 1] {
                if !grid.is_occupied(Cell::new(x, y)) {
                    return Err(MapError::UnsealedBorder { x, y });
                }
            }
        }
        for y in 0..height {
            for x in [0, width - 1] {
                if !grid.is_occupied(Cell::new(x, y)) {
                    return Err(MapError::UnsealedBorder { x, y });
                }
            }
        }
        let g = grid.goal.cell;
        if g.x >= width || g.y >= height {
            return Err(MapError::GoalOutOfBounds { x: g.x, y: g.y, width, height });
        }
        if grid.is_occupied(g) {
            return Err(MapError::GoalOccupied { x: g.x, y: g.y });
        }
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn goal(&self) -> &GoalSpec {
        &self.goal
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn cell_at_index(&self, i: usize) -> Cell {
        Cell::new(i % self.width, i / self.width)
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        c.x >= self.width || c.y >= self.height || self.occupied[self.index(c)]
    }

    pub fn is_occupied_i(&self, x: i64, y: i64) -> bool {
        !self.in_bounds(x, y) || self.occupied[y as usize * self.width + x as usize]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_occupied(c)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(move |c| self.is_free(*c))
    }

    pub fn free_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    pub fn cell_center(&self, c: Cell) -> (f64, f64) {
        ((c.x as f64 + 0.5) * self.cell_size, (c.y as f64 + 0.5) * self.cell_size)
    }

    /// Cell containing a world point (floor convention); `None` off-grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        let cx = (x / self.cell_size).floor();
        let cy = (y / self.cell_size).floor();
        if cx < 0.0 || cy < 0.0 || !cx.is_finite() || !cy.is_finite() {
            return None;
        }
        let (cx, cy) = (cx as usize, cy as usize);
        (cx < self.width && cy < self.height).then_some(Cell::new(cx, cy))
    }

    /// True when the point lies in the closed square of any occupied cell.
    pub fn point_blocked(&self, x: f64, y: f64) -> bool {
        let fx = x / self.cell_size;
        let fy = y / self.cell_size;
        let xs = touching_indices(fx);
        let ys = touching_indices(fy);
        xs.iter().flatten().any(|&ix| ys.iter().flatten().any(|&iy| self.is_occupied_i(ix, iy)))
    }

    pub fn with_cell(&self, c: Cell, occupied: bool) -> Result<Self, MapError> {
        let mut cells = self.occupied.clone();
        let i = self.index(c);
        cells[i] = occupied;
        Self::new(self.width, self.height, self.cell_size, cells, self.goal.clone())
    }

    pub fn with_goal(&self, goal: GoalSpec) -> Result<Self, MapError> {
        Self::new(self.width, self.height, self.cell_size, self.occupied.clone(), goal)
    }

    /// Serializes to the text map format accepted by [`load_map`].
    pub fn to_map_string(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * (self.height + 1) + 64);
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            self.width,
            self.height,
            self.cell_size,
            self.goal.cell.x,
            self.goal.cell.y,
            self.goal.category_label
        );
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_occupied(Cell::new(x, y)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

fn touching_indices(f: f64) -> [Option<i64>; 2] {
    let fl = f.floor();
    let i = fl as i64;
    if fl == f {
        [Some(i - 1), Some(i)]
    } else {
        [Some(i), None]
    }
}

/// Parses the map text format: a header `W H cell_size goal_x goal_y label`
/// followed by `H` rows of `#` (occupied) and `.` (free).
pub fn load_map(source: &[u8]) -> Result<OccupancyGrid, MapError> {
    let text = std::str::from_utf8(source)
        .map_err(|e| MapError::Malformed { line: 1, reason: format!("not UTF-8: {e}") })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(MapError::Malformed { line: 1, reason: "empty file".into() })?;
    let mut parts = header.trim().splitn(6, char::is_whitespace);
    let mut field = |name: &str| {
        parts
            .next()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| MapError::Malformed { line: 1, reason: format!("header missing `{name}`") })
    };
    let bad = |name: &str, v: &str| MapError::Malformed {
        line: 1,
        reason: format!("header field `{name}` has invalid value `{v}`"),
    };
    let w_s = field("W")?;
    let h_s = field("H")?;
    let cs_s = field("cell_size")?;
    let gx_s = field("goal_x")?;
    let gy_s = field("goal_y")?;
    let label = parts.next().unwrap_or("").trim().to_string();
    let width: usize = w_s.parse().map_err(|_| bad("W", w_s))?;
    let height: usize = h_s.parse().map_err(|_| bad("H", h_s))?;
    let cell_size: f64 = cs_s.parse().map_err(|_| bad("cell_size", cs_s))?;
    let gx: usize = gx_s.parse().map_err(|_| bad("goal_x", gx_s))?;
    let gy: usize = gy_s.parse().map_err(|_| bad("goal_y", gy_s))?;
    if width < 3 || height < 3 {
        return Err(MapError::TooSmall { width, height });
    }

    let mut occupied = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (idx, line) in lines {
        let line = line.trim_end();
        if rows == height {
            return Err(MapError::Malformed { line: idx + 1, reason: "extra rows after grid".into() });
        }
        if line.chars().count() != width {
            return Err(MapError::Malformed {
                line: idx + 1,
                reason: format!("row has {} cells, expected {width}", line.chars().count()),
            });
        }
        for ch in line.chars() {
            match ch {
                '#' => occupied.push(true),
                '.' => occupied.push(false),
                other => {
                    return Err(MapError::Malformed {
                        line: idx + 1,
                        reason: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
        rows += 1;
    }
    if rows != height {
        return Err(MapError::Malformed {
            line: rows + 2,
            reason: format!("found {rows} rows, expected {height}"),
        });
    }
    OccupancyGrid::new(
        width,
        height,
        cell_size,
        occupied,
        GoalSpec { cell: Cell::new(gx, gy), category_label: label },
    )
}
