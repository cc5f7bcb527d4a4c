//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::SQRT_2;

use compass_core::geodesic::PathCost;
use compass_core::world::{Cell, OccupancyGrid};

/// O(n²) Dijkstra over the 8-connected grid without corner cutting, written
/// without any of the library's search code.
pub fn brute_dijkstra(grid: &OccupancyGrid, from: Cell, to: Cell) -> Option<PathCost> {
    let (w, h) = (grid.width(), grid.height());
    let idx = |x: usize, y: usize| y * w + x;
    let free = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && (x as usize) < w
            && (y as usize) < h
            && grid.is_free(Cell::new(x as usize, y as usize))
    };
    let len = |c: (u32, u32)| c.0 as f64 + c.1 as f64 * SQRT_2;
    let mut cost: Vec<Option<(u32, u32)>> = vec![None; w * h];
    let mut done = vec![false; w * h];
    cost[idx(from.x, from.y)] = Some((0, 0));
    loop {
        let mut pick: Option<usize> = None;
        for i in 0..w * h {
            if done[i] {
                continue;
            }
            if let Some(c) = cost[i] {
                if pick.is_none_or(|p| len(c) < len(cost[p].unwrap())) {
                    pick = Some(i);
                }
            }
        }
        let i = pick?;
        done[i] = true;
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        if (x as usize, y as usize) == (to.x, to.y) {
            let (s, d) = cost[i].unwrap();
            return Some(PathCost { straight: s, diagonal: d });
        }
        let here = cost[i].unwrap();
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                if (dx, dy) == (0, 0) || !free(x + dx, y + dy) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal && !(free(x + dx, y) && free(x, y + dy)) {
                    continue;
                }
                let next = if diagonal { (here.0, here.1 + 1) } else { (here.0 + 1, here.1) };
                let j = idx((x + dx) as usize, (y + dy) as usize);
                if !done[j] && cost[j].is_none_or(|c| len(next) < len(c)) {
                    cost[j] = Some(next);
                }
            }
        }
    }
}

/// Exact first contact of a ray with any closed occupied square, by testing
/// every occupied cell as an axis-aligned box.
pub fn slab_hit(grid: &OccupancyGrid, ox: f64, oy: f64, angle: f64, max_t: f64) -> Option<f64> {
    let cs = grid.cell_size();
    let (dy, dx) = angle.sin_cos();
    let mut best: Option<f64> = None;
    for c in grid.cells().filter(|&c| grid.is_occupied(c)) {
        let (x0, x1) = (c.x as f64 * cs, (c.x + 1) as f64 * cs);
        let (y0, y1) = (c.y as f64 * cs, (c.y + 1) as f64 * cs);
        let Some((lo_x, hi_x)) = slab(ox, dx, x0, x1) else {
            continue;
        };
        let Some((lo_y, hi_y)) = slab(oy, dy, y0, y1) else {
            continue;
        };
        let (enter, exit) = (lo_x.max(lo_y).max(0.0), hi_x.min(hi_y));
        if enter <= exit && enter <= max_t {
            best = Some(best.map_or(enter, |b: f64| b.min(enter)));
        }
    }
    best
}

fn slab(o: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if d.abs() < 1e-15 {
        return (lo <= o && o <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (a, b) = ((lo - o) / d, (hi - o) / d);
    Some((a.min(b), a.max(b)))
}

/// Free interior cells of `grid` in row-major order.
pub fn free_cells(grid: &OccupancyGrid) -> Vec<Cell> {
    grid.free_cells().collect()
}
