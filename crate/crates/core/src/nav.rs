//! Per-step sense → propose → act plumbing shared by data generation and
//! evaluation rollouts.

use crate::controller::{execute, Execution};
use crate::error::ControllerError;
use crate::proposer::{propose, Candidate, CandidateSet, ProposerParams};
use crate::world::{raycast_depth, DepthScan, ExplorationMap, OccupancyGrid, Pose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub fov: f64,
    pub n_rays: usize,
    pub max_range: f64,
    pub exploration_radius: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { fov: 120f64.to_radians(), n_rays: 60, max_range: 5.0, exploration_radius: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavConfig {
    pub sensor: SensorConfig,
    pub proposer: ProposerParams,
    pub success_radius: f64,
    /// Primitive budget per episode.
    pub max_primitives: usize,
    /// Added to the current cell's distance when scoring the turn-around,
    /// which makes no progress by itself.
    pub turn_around_penalty: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            sensor: SensorConfig::default(),
            proposer: ProposerParams::default(),
            success_radius: 1.0,
            max_primitives: 500,
            turn_around_penalty: 1.0,
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.proposer.validate()?;
        if self.sensor.n_rays < 3 {
            return Err(format!("need at least 3 rays, got {}", self.sensor.n_rays));
        }
        if !(self.sensor.fov > 0.0 && self.sensor.fov <= std::f64::consts::TAU) {
            return Err(format!("fov {} outside (0, 2π]", self.sensor.fov));
        }
        if !(self.sensor.max_range > 0.0 && self.sensor.exploration_radius > 0.0) {
            return Err("max range and exploration radius must be positive".into());
        }
        if !(self.turn_around_penalty >= 0.0 && self.turn_around_penalty.is_finite()) {
            return Err(format!(
                "turn-around penalty must be finite and non-negative, got {}",
                self.turn_around_penalty
            ));
        }
        if !(self.success_radius > 0.0) {
            return Err(format!("success radius must be positive, got {}", self.success_radius));
        }
        Ok(())
    }
}

/// Mutable episode-local agent state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub pose: Pose,
    pub exploration: ExplorationMap,
    pub primitives_used: usize,
    pub path_length: f64,
    pub collisions: usize,
}

impl AgentState {
    pub fn new(grid: &OccupancyGrid, pose: Pose) -> Self {
        Self {
            pose,
            exploration: ExplorationMap::new(grid),
            primitives_used: 0,
            path_length: 0.0,
            collisions: 0,
        }
    }

    pub fn from_snapshot(pose: Pose, exploration: ExplorationMap) -> Self {
        Self { pose, exploration, primitives_used: 0, path_length: 0.0, collisions: 0 }
    }

    /// Updates the exploration map from the current pose, scans and proposes.
    pub fn observe(&mut self, grid: &OccupancyGrid, cfg: &NavConfig) -> (DepthScan, CandidateSet) {
        self.exploration.observe(grid, &self.pose, cfg.sensor.exploration_radius);
        let scan = raycast_depth(grid, &self.pose, cfg.sensor.fov, cfg.sensor.n_rays, cfg.sensor.max_range);
        let set = propose(grid, &scan, &self.pose, &self.exploration, &cfg.proposer);
        (scan, set)
    }

    pub fn budget_left(&self, cfg: &NavConfig) -> usize {
        cfg.max_primitives.saturating_sub(self.primitives_used)
    }

    pub fn act(
        &mut self,
        grid: &OccupancyGrid,
        cand: &Candidate,
        cfg: &NavConfig,
    ) -> Result<Execution, ControllerError> {
        let exec = execute(grid, &self.pose, cand.r, cand.theta, self.budget_left(cfg))?;
        self.pose = exec.pose;
        self.primitives_used += exec.primitives_used;
        self.path_length += exec.distance;
        if exec.collided {
            self.collisions += 1;
        }
        Ok(exec)
    }
}
