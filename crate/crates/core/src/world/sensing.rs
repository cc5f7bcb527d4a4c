use std::f64::consts::PI;

use super::grid::{normalize_heading, Cell, OccupancyGrid, Pose};

/// Forward primitive length in meters.
pub const FORWARD_STEP: f64 = 0.25;
/// Turn primitive magnitude in radians (30°).
pub const TURN_STEP: f64 = PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    MoveForward,
    TurnLeft,
    TurnRight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthScan {
    /// Relative to heading; ascending, so index 0 is the rightmost ray.
    pub ray_angles: Vec<f64>,
    pub ray_ranges: Vec<f64>,
    pub max_range: f64,
}

impl DepthScan {
    pub fn len(&self) -> usize {
        self.ray_angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ray_angles.is_empty()
    }
}

/// Distance along a ray to the first point lying in the closed square of an
/// occupied cell, or `None` when no such point exists within `max_t`.
///
/// Walks grid-line crossings; every crossing parameter is computed directly
/// from the line coordinate so results don't drift with ray length.
pub fn first_hit(grid: &OccupancyGrid, ox: f64, oy: f64, angle: f64, max_t: f64) -> Option<f64> {
    if grid.point_blocked(ox, oy) {
        return Some(0.0);
    }
    let cs = grid.cell_size();
    let (dy, dx) = angle.sin_cos();
    let fx = ox / cs;
    let fy = oy / cs;
    let mut cx = fx.floor() as i64;
    let mut cy = fy.floor() as i64;
    let sx: i64 = if dx > 0.0 {
        1
    } else if dx < 0.0 {
        -1
    } else {
        0
    };
    let sy: i64 = if dy > 0.0 {
        1
    } else if dy < 0.0 {
        -1
    } else {
        0
    };
    // Next vertical / horizontal grid line to be crossed.
    let mut line_x = if sx > 0 { cx + 1 } else { cx };
    let mut line_y = if sy > 0 { cy + 1 } else { cy };
    // A ray running exactly along a grid line touches the cells on both sides.
    let along_x = sx == 0 && fx == fx.floor();
    let along_y = sy == 0 && fy == fy.floor();

    loop {
        let tx = if sx != 0 { (line_x as f64 * cs - ox) / dx } else { f64::INFINITY };
        let ty = if sy != 0 { (line_y as f64 * cs - oy) / dy } else { f64::INFINITY };
        let t = tx.min(ty);
        if !(t <= max_t) {
            return None;
        }
        let step_x = tx <= ty;
        let step_y = ty <= tx;
        let ncx = if step_x { cx + sx } else { cx };
        let ncy = if step_y { cy + sy } else { cy };
        let occ = |x: i64, y: i64| grid.is_occupied_i(x, y);
        let mut hit = occ(ncx, ncy);
        if step_x && step_y {
            hit |= occ(ncx, cy) || occ(cx, ncy);
        }
        if along_x {
            hit |= occ(ncx - 1, ncy);
        }
        if along_y {
            hit |= occ(ncx, ncy - 1);
        }
        if hit {
            return Some(t.max(0.0));
        }
        if !grid.in_bounds(ncx, ncy) {
            return Some(t.max(0.0));
        }
        cx = ncx;
        cy = ncy;
        if step_x {
            line_x += sx;
        }
        if step_y {
            line_y += sy;
        }
    }
}

/// Simulated depth sensor: `n_rays` evenly spread over `fov`, centered on
/// the heading, each reporting the distance to the first occupied cell
/// boundary capped at `max_range`.
pub fn raycast_depth(
    grid: &OccupancyGrid,
    pose: &Pose,
    fov: f64,
    n_rays: usize,
    max_range: f64,
) -> DepthScan {
    assert!(n_rays >= 3, "raycast needs at least 3 rays");
    assert!(fov > 0.0 && fov <= 2.0 * PI, "fov must lie in (0, 2π]");
    let mut ray_angles = Vec::with_capacity(n_rays);
    let mut ray_ranges = Vec::with_capacity(n_rays);
    for i in 0..n_rays {
        let rel = fov * (i as f64 / (n_rays - 1) as f64 - 0.5);
        let range = first_hit(grid, pose.x, pose.y, pose.heading + rel, max_range).unwrap_or(max_range);
        ray_angles.push(rel);
        ray_ranges.push(range);
    }
    DepthScan { ray_angles, ray_ranges, max_range }
}

/// Per-cell explored flags; only ever grows within an episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationMap {
    width: usize,
    height: usize,
    explored: Vec<bool>,
}

impl ExplorationMap {
    pub fn new(grid: &OccupancyGrid) -> Self {
        Self {
            width: grid.width(),
            height: grid.height(),
            explored: vec![false; grid.width() * grid.height()],
        }
    }

    pub fn is_explored(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height && self.explored[c.y * self.width + c.x]
    }

    pub fn explored_count(&self) -> usize {
        self.explored.iter().filter(|e| **e).count()
    }

    pub fn mark(&mut self, c: Cell) {
        if c.x < self.width && c.y < self.height {
            self.explored[c.y * self.width + c.x] = true;
        }
    }

    /// Marks every free cell whose center is within `radius` of the pose and
    /// visible along an unobstructed straight line.
    pub fn observe(&mut self, grid: &OccupancyGrid, pose: &Pose, radius: f64) {
        assert!(radius > 0.0, "exploration radius must be positive");
        let cs = grid.cell_size();
        let lo_x = ((pose.x - radius) / cs).floor().max(0.0) as usize;
        let lo_y = ((pose.y - radius) / cs).floor().max(0.0) as usize;
        let hi_x = (((pose.x + radius) / cs).ceil() as usize).min(grid.width() - 1);
        let hi_y = (((pose.y + radius) / cs).ceil() as usize).min(grid.height() - 1);
        for y in lo_y..=hi_y {
            for x in lo_x..=hi_x {
                let c = Cell::new(x, y);
                if grid.is_occupied(c) || self.is_explored(c) {
                    continue;
                }
                let (px, py) = grid.cell_center(c);
                let dist = (px - pose.x).hypot(py - pose.y);
                if dist > radius {
                    continue;
                }
                let visible = dist == 0.0
                    || first_hit(grid, pose.x, pose.y, (py - pose.y).atan2(px - pose.x), dist).is_none();
                if visible {
                    self.mark(c);
                }
            }
        }
    }
}

pub fn update_exploration(
    map: &ExplorationMap,
    grid: &OccupancyGrid,
    pose: &Pose,
    radius: f64,
) -> ExplorationMap {
    let mut next = map.clone();
    next.observe(grid, pose, radius);
    next
}

/// Applies one primitive. A forward move whose 0.25 m segment would touch
/// an occupied cell leaves the pose unchanged and reports a collision.
pub fn step_primitive(grid: &OccupancyGrid, pose: &Pose, action: Primitive) -> (Pose, bool) {
    match action {
        Primitive::TurnLeft => {
            (Pose { heading: normalize_heading(pose.heading + TURN_STEP), ..*pose }, false)
        }
        Primitive::TurnRight => {
            (Pose { heading: normalize_heading(pose.heading - TURN_STEP), ..*pose }, false)
        }
        Primitive::MoveForward => {
            let (s, c) = pose.heading.sin_cos();
            let next =
                Pose { x: pose.x + FORWARD_STEP * c, y: pose.y + FORWARD_STEP * s, heading: pose.heading };
            // The endpoint is checked too: the rounded crossing parameter can
            // land a hair past the step length while the endpoint sits on the edge.
            if first_hit(grid, pose.x, pose.y, pose.heading, FORWARD_STEP).is_some()
                || grid.point_blocked(next.x, next.y)
            {
                (*pose, true)
            } else {
                (next, false)
            }
        }
    }
}
