//! Oracle geodesic distances on the occupancy grid.
//!
//! Paths are 8-connected: straight edges cost one cell, diagonal edges
//! `√2` cells, and a diagonal is only allowed when both orthogonal
//! neighbors are free. Costs are carried as exact `(straight, diagonal)`
//! edge counts so A* and Dijkstra agree bit-for-bit on the returned metres.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use crate::error::GeodesicError;
use crate::world::{Cell, OccupancyGrid, NEIGHBORS_8};

/// Path cost as edge counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub const ZERO: Self = Self { straight: 0, diagonal: 0 };

    /// Length in cell units.
    pub fn cells(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    pub fn meters(self, cell_size: f64) -> f64 {
        cell_size * self.cells()
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { straight: self.straight + 1, ..self }
        }
    }
}

/// Free neighbors of `c` with a flag marking diagonal moves.
pub fn neighbors(grid: &OccupancyGrid, c: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
    let (x, y) = (c.x as i64, c.y as i64);
    NEIGHBORS_8.iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x + dx, y + dy);
        if grid.is_occupied_i(nx, ny) {
            return None;
        }
        let diagonal = dx != 0 && dy != 0;
        if diagonal && (grid.is_occupied_i(x + dx, y) || grid.is_occupied_i(x, y + dy)) {
            return None;
        }
        Some((Cell::new(nx as usize, ny as usize), diagonal))
    })
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + lo * SQRT_2
}

#[derive(PartialEq)]
struct Entry {
    key: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* shortest path cost between two free cells; `Ok(None)` when no path exists.
pub fn shortest_path_cost(
    grid: &OccupancyGrid,
    from: Cell,
    to: Cell,
) -> Result<Option<PathCost>, GeodesicError> {
    for c in [from, to] {
        if grid.is_occupied(c) {
            return Err(GeodesicError::BlockedEndpoint(c));
        }
    }
    let n = grid.width() * grid.height();
    let mut best: Vec<Option<PathCost>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    let start = grid.index(from);
    best[start] = Some(PathCost::ZERO);
    heap.push(Entry { key: octile(from, to), index: start });
    let goal = grid.index(to);
    while let Some(Entry { key, index }) = heap.pop() {
        let g = best[index].expect("queued cells have a cost");
        let cell = grid.cell_at_index(index);
        // Stale entry: a cheaper route was found after this was queued.
        if key > g.cells() + octile(cell, to) {
            continue;
        }
        if index == goal {
            return Ok(Some(g));
        }
        for (next, diagonal) in neighbors(grid, cell) {
            let cand = g.step(diagonal);
            let j = grid.index(next);
            if best[j].is_none_or(|b| cand.cells() < b.cells()) {
                best[j] = Some(cand);
                heap.push(Entry { key: cand.cells() + octile(next, to), index: j });
            }
        }
    }
    Ok(None)
}

/// Geodesic distance in metres, `Ok(None)` when unreachable.
pub fn geodesic_distance(grid: &OccupancyGrid, from: Cell, to: Cell) -> Result<Option<f64>, GeodesicError> {
    Ok(shortest_path_cost(grid, from, to)?.map(|c| c.meters(grid.cell_size())))
}

/// Distance-to-goal for every cell, computed once per goal by Dijkstra.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    goal: Cell,
    width: usize,
    cell_size: f64,
    cost: Vec<Option<PathCost>>,
}

impl DistanceField {
    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn cost(&self, c: Cell) -> Option<PathCost> {
        if c.x >= self.width {
            return None;
        }
        self.cost.get(c.y * self.width + c.x).copied().flatten()
    }

    /// Metres to the goal; `f64::INFINITY` for occupied or unreachable cells.
    pub fn dist(&self, c: Cell) -> f64 {
        self.cost(c).map_or(f64::INFINITY, |p| p.meters(self.cell_size))
    }

    pub fn is_reachable(&self, c: Cell) -> bool {
        self.cost(c).is_some()
    }

    /// `x,y,dist_m` rows; unreachable cells print as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,dist_m\n");
        for (i, c) in self.cost.iter().enumerate() {
            let (x, y) = (i % self.width, i / self.width);
            match c {
                Some(p) => {
                    let _ = writeln!(out, "{x},{y},{:.6}", p.meters(self.cell_size));
                }
                None => {
                    let _ = writeln!(out, "{x},{y},inf");
                }
            }
        }
        out
    }
}

pub fn distance_field(grid: &OccupancyGrid, goal: Cell) -> Result<DistanceField, GeodesicError> {
    if grid.is_occupied(goal) {
        return Err(GeodesicError::BlockedEndpoint(goal));
    }
    let n = grid.width() * grid.height();
    let mut cost: Vec<Option<PathCost>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let gi = grid.index(goal);
    cost[gi] = Some(PathCost::ZERO);
    heap.push(Entry { key: 0.0, index: gi });
    while let Some(Entry { index, .. }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        let g = cost[index].expect("queued cells have a cost");
        for (next, diagonal) in neighbors(grid, grid.cell_at_index(index)) {
            let cand = g.step(diagonal);
            let j = grid.index(next);
            if !done[j] && cost[j].is_none_or(|b| cand.cells() < b.cells()) {
                cost[j] = Some(cand);
                heap.push(Entry { key: cand.cells(), index: j });
            }
        }
    }
    Ok(DistanceField { goal, width: grid.width(), cell_size: grid.cell_size(), cost })
}
