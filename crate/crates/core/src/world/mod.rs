//! Deterministic 2-D occupancy-grid world: map I/O, depth sensing,
//! exploration bookkeeping and primitive stepping.

mod grid;
pub mod mapgen;
mod sensing;

pub use grid::{load_map, normalize_heading, Cell, GoalSpec, OccupancyGrid, Pose, DEFAULT_CELL_SIZE};
pub use mapgen::{from_ascii, generate_map, generate_styled, open_room, MapStyle};
pub use sensing::{
    first_hit, raycast_depth, step_primitive, update_exploration, DepthScan, ExplorationMap, Primitive,
    FORWARD_STEP, TURN_STEP,
};

pub(crate) const NEIGHBORS_8: [(i64, i64); 8] =
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
