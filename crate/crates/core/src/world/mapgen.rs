//! Seeded random map generation.

use rand::Rng;

use super::grid::{Cell, GoalSpec, OccupancyGrid, DEFAULT_CELL_SIZE};
use crate::rng::seeded;

const LABELS: [&str; 6] = ["chair", "bed", "toilet", "couch", "plant", "tv"];

/// Walled rectangle with a free interior; goal at the center.
pub fn open_room(width: usize, height: usize) -> OccupancyGrid {
    let mut occ = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            if x == 0 || y == 0 || x == width - 1 || y == height - 1 {
                occ[y * width + x] = true;
            }
        }
    }
    let goal = GoalSpec { cell: Cell::new(width / 2, height / 2), category_label: "chair".into() };
    OccupancyGrid::new(width, height, DEFAULT_CELL_SIZE, occ, goal).expect("open room is valid")
}

/// Builds a grid from ASCII rows (`#` occupied, `.` free, `G` goal).
pub fn from_ascii(rows: &[&str], label: &str) -> OccupancyGrid {
    let height = rows.len();
    let width = rows[0].len();
    let mut occ = Vec::with_capacity(width * height);
    let mut goal = None;
    for (y, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), width, "ragged ascii map");
        for (x, ch) in row.chars().enumerate() {
            occ.push(ch == '#');
            if ch == 'G' {
                goal = Some(Cell::new(x, y));
            }
        }
    }
    let goal = GoalSpec { cell: goal.expect("ascii map needs a G"), category_label: label.into() };
    OccupancyGrid::new(width, height, DEFAULT_CELL_SIZE, occ, goal).expect("ascii map is valid")
}

/// Layout family for [`generate_styled`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapStyle {
    /// Scattered rectangular blocks.
    #[default]
    Blocks,
    /// Four rooms split by walls with two-cell doorways, plus scattered blocks.
    Rooms,
    /// Perfect maze of one-cell corridors with a share of walls knocked out
    /// so some loops exist; `obstacle_rate` is the share of walls kept.
    Maze,
}

impl MapStyle {
    pub fn name(self) -> &'static str {
        match self {
            Self::Blocks => "blocks",
            Self::Rooms => "rooms",
            Self::Maze => "maze",
        }
    }
}

impl std::str::FromStr for MapStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "blocks" => Ok(Self::Blocks),
            "rooms" => Ok(Self::Rooms),
            "maze" => Ok(Self::Maze),
            other => Err(format!("unknown map style '{other}' (expected blocks, rooms or maze)")),
        }
    }
}

/// Deterministic random square map keyed by `seed`, block style.
pub fn generate_map(seed: u64, size: usize, obstacle_rate: f64) -> OccupancyGrid {
    generate_styled(seed, size, obstacle_rate, MapStyle::Blocks)
}

/// Deterministic random square map keyed by `seed`.
///
/// Obstacles are axis-aligned blocks (1–3 cells thick, 1–4 long) dropped
/// until the interior occupancy fraction reaches `obstacle_rate`; room walls,
/// when present, count toward it. The goal is drawn uniformly from the
/// largest 8-connected free component so it is reachable from a large share
/// of the map.
pub fn generate_styled(seed: u64, size: usize, obstacle_rate: f64, style: MapStyle) -> OccupancyGrid {
    assert!(size >= 5, "generated maps need size >= 5");
    let rate = obstacle_rate.clamp(0.0, 0.9);
    let mut rng = seeded(seed, 0x6d61_7067);
    if style == MapStyle::Maze {
        return maze(&mut rng, size, rate);
    }
    let mut occ = open_room(size, size).occupied_cells();
    let interior = (size - 2) * (size - 2);
    let target = (rate * interior as f64).round() as usize;
    let mut filled = 0usize;
    if style == MapStyle::Rooms && size >= 9 {
        filled += room_walls(&mut rng, &mut occ, size);
    }
    let mut attempts = 0usize;
    while filled < target && attempts < 100 * interior {
        attempts += 1;
        let (mut w, mut h) = (rng.random_range(1..=3usize), rng.random_range(1..=4usize));
        if rng.random_bool(0.5) {
            std::mem::swap(&mut w, &mut h);
        }
        let x0 = rng.random_range(1..size - 1);
        let y0 = rng.random_range(1..size - 1);
        for y in y0..(y0 + h).min(size - 1) {
            for x in x0..(x0 + w).min(size - 1) {
                if filled < target && !occ[y * size + x] {
                    occ[y * size + x] = true;
                    filled += 1;
                }
            }
        }
    }

    let components = free_components(size, size, &occ);
    let largest = components.iter().max_by_key(|c| c.len()).filter(|c| !c.is_empty());
    let goal_cell = match largest {
        Some(comp) => comp[rng.random_range(0..comp.len())],
        None => {
            // Everything filled; carve out the center.
            let c = Cell::new(size / 2, size / 2);
            occ[c.y * size + c.x] = false;
            c
        }
    };
    let label = LABELS[rng.random_range(0..LABELS.len())];
    let goal = GoalSpec { cell: goal_cell, category_label: label.into() };
    OccupancyGrid::new(size, size, DEFAULT_CELL_SIZE, occ, goal).expect("generated map is valid")
}

fn maze(rng: &mut crate::rng::Rng, size: usize, keep: f64) -> OccupancyGrid {
    let mut occ = vec![true; size * size];
    let n = (size - 1) / 2;
    let at = |i: usize| 2 * i + 1;
    let mut seen = vec![false; n * n];
    let mut stack = vec![(0usize, 0usize)];
    seen[0] = true;
    occ[at(0) * size + at(0)] = false;
    while let Some(&(cx, cy)) = stack.last() {
        let mut next = Vec::with_capacity(4);
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
            if nx >= 0
                && ny >= 0
                && (nx as usize) < n
                && (ny as usize) < n
                && !seen[ny as usize * n + nx as usize]
            {
                next.push((nx as usize, ny as usize));
            }
        }
        if next.is_empty() {
            stack.pop();
            continue;
        }
        let (nx, ny) = next[rng.random_range(0..next.len())];
        seen[ny * n + nx] = true;
        occ[at(ny) * size + at(nx)] = false;
        occ[(at(cy) + at(ny)) / 2 * size + (at(cx) + at(nx)) / 2] = false;
        stack.push((nx, ny));
    }
    // Interior walls between two corridor cells may be knocked out.
    for y in 1..size - 1 {
        for x in 1..size - 1 {
            let between = (x % 2 == 0) != (y % 2 == 0) && x < 2 * n && y < 2 * n;
            if between && occ[y * size + x] && !rng.random_bool(keep) {
                occ[y * size + x] = false;
            }
        }
    }
    let free: Vec<Cell> =
        (0..size * size).filter(|&i| !occ[i]).map(|i| Cell::new(i % size, i / size)).collect();
    let goal_cell = free[rng.random_range(0..free.len())];
    let label = LABELS[rng.random_range(0..LABELS.len())];
    let goal = GoalSpec { cell: goal_cell, category_label: label.into() };
    OccupancyGrid::new(size, size, DEFAULT_CELL_SIZE, occ, goal).expect("maze is valid")
}

/// One full-height wall with a doorway, then one wall across each half.
/// Returns the number of cells filled.
fn room_walls(rng: &mut crate::rng::Rng, occ: &mut [bool], size: usize) -> usize {
    let mut filled = 0;
    let mut set = |occ: &mut [bool], x: usize, y: usize| {
        if !occ[y * size + x] {
            occ[y * size + x] = true;
            filled += 1;
        }
    };
    let wx = rng.random_range(size / 3..=size - 1 - size / 3);
    let door = rng.random_range(1..size - 2);
    for y in 1..size - 1 {
        if y != door && y != door + 1 {
            set(occ, wx, y);
        }
    }
    for (lo, hi) in [(1, wx), (wx + 1, size - 1)] {
        if hi - lo < 3 {
            continue;
        }
        let wy = rng.random_range(size / 3..=size - 1 - size / 3);
        let door = rng.random_range(lo..hi - 1);
        for x in lo..hi {
            if x != door && x != door + 1 {
                set(occ, x, wy);
            }
        }
    }
    filled
}

/// Free-cell components under 8-connectivity without corner cutting.
fn free_components(width: usize, height: usize, occ: &[bool]) -> Vec<Vec<Cell>> {
    let mut label = vec![usize::MAX; occ.len()];
    let mut comps = Vec::new();
    let free = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && (x as usize) < width
            && (y as usize) < height
            && !occ[y as usize * width + x as usize]
    };
    for start in 0..occ.len() {
        if occ[start] || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = Vec::new();
        let mut stack = vec![start];
        label[start] = id;
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % width) as i64, (i / width) as i64);
            comp.push(Cell::new(x as usize, y as usize));
            for (dx, dy) in super::NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if !free(nx, ny) || (dx != 0 && dy != 0 && !(free(x + dx, y) && free(x, y + dy))) {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if label[j] == usize::MAX {
                    label[j] = id;
                    stack.push(j);
                }
            }
        }
        comp.sort();
        comps.push(comp);
    }
    comps
}

impl OccupancyGrid {
    pub(crate) fn occupied_cells(&self) -> Vec<bool> {
        self.cells().map(|c| self.is_occupied(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = generate_map(42, 20, 0.3);
        let b = generate_map(42, 20, 0.3);
        assert_eq!(a, b);
        assert_ne!(a, generate_map(43, 20, 0.3));
    }

    #[test]
    fn obstacle_rate_is_respected() {
        let g = generate_map(9, 20, 0.3);
        let interior = 18 * 18;
        let occupied_interior = interior - g.free_count();
        assert!((occupied_interior as f64 / interior as f64 - 0.3).abs() < 0.02);
    }

    #[test]
    fn ascii_builder() {
        let g = from_ascii(&["#####", "#..G#", "#####"], "bed");
        assert_eq!(g.goal().cell, Cell::new(3, 1));
        assert_eq!(g.free_count(), 3);
    }

    fn reachable_share(g: &OccupancyGrid) -> f64 {
        let f = crate::geodesic::distance_field(g, g.goal().cell).unwrap();
        g.free_cells().filter(|&c| f.is_reachable(c)).count() as f64 / g.free_count() as f64
    }

    #[test]
    fn every_style_is_deterministic_and_connected() {
        for style in [MapStyle::Blocks, MapStyle::Rooms, MapStyle::Maze] {
            for seed in 0..10 {
                let g = generate_styled(seed, 15, 0.5, style);
                assert_eq!(g, generate_styled(seed, 15, 0.5, style));
                assert!(g.is_free(g.goal().cell));
                if style == MapStyle::Maze {
                    assert_eq!(reachable_share(&g), 1.0, "maze {seed} is split");
                }
            }
        }
    }

    #[test]
    fn maze_keep_share_controls_loops() {
        // The spanning maze on a 7x7 lattice frees 49 cells and 48 passages;
        // knocking walls out only adds to that.
        let tight = generate_styled(3, 15, 0.9, MapStyle::Maze);
        assert!(tight.free_count() >= 49 + 48);
        let open = generate_styled(3, 15, 0.0, MapStyle::Maze);
        assert!(open.free_count() > tight.free_count());
    }

    #[test]
    fn style_names_round_trip() {
        for style in [MapStyle::Blocks, MapStyle::Rooms, MapStyle::Maze] {
            assert_eq!(style.name().parse::<MapStyle>(), Ok(style));
        }
        assert!("cave".parse::<MapStyle>().is_err());
    }
}
