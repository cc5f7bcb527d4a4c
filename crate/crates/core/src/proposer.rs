//! Action proposal: turns a depth scan and the exploration map into a small,
//! well-spaced set of safe `(r, θ)` candidates plus a turn-around fallback.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use crate::world::{Cell, DepthScan, ExplorationMap, OccupancyGrid, Pose};

/// Id reserved for the 180° turn-around fallback.
pub const TURN_AROUND_ID: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: usize,
    /// Metres to travel after turning.
    pub r: f64,
    /// Radians relative to heading, positive to the left.
    pub theta: f64,
    pub landing: Cell,
    /// `e_i`: the landing cell has not been observed yet.
    pub unexplored: bool,
}

impl Candidate {
    pub fn turn_around(landing: Cell) -> Self {
        Self { id: TURN_AROUND_ID, r: 0.0, theta: PI, landing, unexplored: false }
    }

    pub fn is_turn_around(&self) -> bool {
        self.id == TURN_AROUND_ID
    }
}

/// Candidates in presentation order: ids `1..=K` sorted by θ descending
/// (left to right), then the turn-around (id 0) last.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.candidates.iter()
    }

    /// Number of non-fallback candidates.
    pub fn navigable(&self) -> usize {
        self.candidates.iter().filter(|c| !c.is_turn_around()).count()
    }

    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == id)
    }
}

impl std::ops::Index<usize> for CandidateSet {
    type Output = Candidate;
    fn index(&self, i: usize) -> &Candidate {
        &self.candidates[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposerParams {
    /// Minimum spacing among unexplored candidates.
    pub theta_delta: f64,
    /// Minimum spacing for explored candidates against everything kept.
    pub theta_big_delta: f64,
    pub r_max: f64,
    pub safety_factor: f64,
    pub min_r: f64,
}

impl Default for ProposerParams {
    fn default() -> Self {
        Self {
            theta_delta: 20f64.to_radians(),
            theta_big_delta: 40f64.to_radians(),
            r_max: 1.7,
            safety_factor: 2.0 / 3.0,
            min_r: 0.25,
        }
    }
}

impl ProposerParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.theta_delta && self.theta_delta < self.theta_big_delta && self.theta_big_delta <= PI)
        {
            return Err(format!(
                "need 0 < theta_delta ({}) < theta_Delta ({}) <= pi",
                self.theta_delta, self.theta_big_delta
            ));
        }
        if !(0.0 < self.safety_factor && self.safety_factor <= 1.0) {
            return Err(format!("safety factor {} outside (0, 1]", self.safety_factor));
        }
        if !(self.r_max > 0.0 && self.min_r >= 0.0) {
            return Err("r_max must be positive and min_r non-negative".into());
        }
        Ok(())
    }
}

/// Smallest absolute angle between two directions.
pub fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

struct Raw {
    ray_range: f64,
    r: f64,
    theta: f64,
    landing: Cell,
    unexplored: bool,
}

pub fn propose(
    grid: &OccupancyGrid,
    scan: &DepthScan,
    pose: &Pose,
    exploration: &ExplorationMap,
    params: &ProposerParams,
) -> CandidateSet {
    assert!(!scan.is_empty(), "propose needs a non-empty scan");
    let here = grid.cell_of(pose.x, pose.y).expect("pose inside the grid");

    let mut raw: Vec<Raw> = scan
        .ray_angles
        .iter()
        .zip(&scan.ray_ranges)
        .filter_map(|(&theta, &ray_range)| {
            let r = (params.safety_factor * ray_range).min(params.r_max);
            if r < params.min_r {
                return None;
            }
            let (s, c) = (pose.heading + theta).sin_cos();
            let landing = grid.cell_of(pose.x + r * c, pose.y + r * s)?;
            if grid.is_occupied(landing) {
                return None;
            }
            Some(Raw { ray_range, r, theta, landing, unexplored: !exploration.is_explored(landing) })
        })
        .collect();

    // Longest rays first, then the most central, then left before right.
    raw.sort_by(|a, b| {
        b.ray_range
            .total_cmp(&a.ray_range)
            .then(a.theta.abs().total_cmp(&b.theta.abs()))
            .then(b.theta.total_cmp(&a.theta))
    });

    let mut kept: Vec<&Raw> = Vec::new();
    for cand in raw.iter().filter(|c| c.unexplored) {
        if kept.iter().all(|k| angular_gap(k.theta, cand.theta) >= params.theta_delta) {
            kept.push(cand);
        }
    }
    for cand in raw.iter().filter(|c| !c.unexplored) {
        if kept.iter().all(|k| angular_gap(k.theta, cand.theta) >= params.theta_big_delta) {
            kept.push(cand);
        }
    }

    kept.sort_by(|a, b| b.theta.partial_cmp(&a.theta).unwrap_or(Ordering::Equal));
    let mut candidates: Vec<Candidate> = kept
        .iter()
        .enumerate()
        .map(|(i, k)| Candidate {
            id: i + 1,
            r: k.r,
            theta: k.theta,
            landing: k.landing,
            unexplored: k.unexplored,
        })
        .collect();
    candidates.push(Candidate::turn_around(here));
    CandidateSet { candidates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{open_room, raycast_depth};

    fn scan_const(n: usize, fov: f64, range: f64) -> DepthScan {
        let ray_angles = (0..n).map(|i| fov * (i as f64 / (n - 1) as f64 - 0.5)).collect();
        DepthScan { ray_angles, ray_ranges: vec![range; n], max_range: 5.0 }
    }

    #[test]
    fn unexplored_room_spacing() {
        let g = open_room(40, 40);
        let pose = Pose::at_cell(&g, crate::world::Cell::new(20, 20), 0.0);
        let scan = raycast_depth(&g, &pose, 120f64.to_radians(), 60, 5.0);
        let ex = ExplorationMap::new(&g);
        let p = ProposerParams::default();
        let set = propose(&g, &scan, &pose, &ex, &p);
        let nav: Vec<_> = set.iter().filter(|c| !c.is_turn_around()).collect();
        assert!(nav.len() >= 4);
        assert!(nav.iter().all(|c| c.unexplored));
        for (i, a) in nav.iter().enumerate() {
            for b in &nav[i + 1..] {
                assert!(angular_gap(a.theta, b.theta) >= p.theta_delta);
            }
        }
        assert_eq!(set.candidates.last().unwrap().id, TURN_AROUND_ID);
        let ids: Vec<_> = nav.iter().map(|c| c.id).collect();
        assert_eq!(ids, (1..=nav.len()).collect::<Vec<_>>());
        assert!(nav.windows(2).all(|w| w[0].theta > w[1].theta));
    }

    #[test]
    fn explored_room_spacing() {
        let g = open_room(40, 40);
        let pose = Pose::at_cell(&g, crate::world::Cell::new(20, 20), 0.0);
        let scan = raycast_depth(&g, &pose, 120f64.to_radians(), 60, 5.0);
        let mut ex = ExplorationMap::new(&g);
        ex.observe(&g, &pose, 10.0);
        let p = ProposerParams::default();
        let set = propose(&g, &scan, &pose, &ex, &p);
        let nav: Vec<_> = set.iter().filter(|c| !c.is_turn_around()).collect();
        assert!(!nav.is_empty());
        assert!(nav.iter().all(|c| !c.unexplored));
        for (i, a) in nav.iter().enumerate() {
            for b in &nav[i + 1..] {
                assert!(angular_gap(a.theta, b.theta) >= p.theta_big_delta);
            }
        }
    }

    #[test]
    fn walled_in_agent_gets_fallback_only() {
        let g = open_room(10, 10);
        let pose = Pose::at_cell(&g, crate::world::Cell::new(5, 5), 0.0);
        let scan = scan_const(60, 120f64.to_radians(), 0.2);
        let set = propose(&g, &scan, &pose, &ExplorationMap::new(&g), &ProposerParams::default());
        assert_eq!(set.len(), 1);
        assert!(set[0].is_turn_around());
        assert_eq!(set[0].r, 0.0);
        assert_eq!(set[0].theta, PI);
        assert_eq!(set[0].landing, crate::world::Cell::new(5, 5));
    }

    #[test]
    fn radius_clip() {
        let g = open_room(40, 40);
        let pose = Pose::at_cell(&g, crate::world::Cell::new(20, 20), 0.0);
        let scan = scan_const(3, 1.0, 3.0);
        let set = propose(&g, &scan, &pose, &ExplorationMap::new(&g), &ProposerParams::default());
        assert!(set.iter().filter(|c| !c.is_turn_around()).all(|c| c.r == 1.7));
        let scan = scan_const(3, 1.0, 1.5);
        let set = propose(&g, &scan, &pose, &ExplorationMap::new(&g), &ProposerParams::default());
        assert!(set.iter().filter(|c| !c.is_turn_around()).all(|c| (c.r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn params_validation() {
        assert!(ProposerParams::default().validate().is_ok());
        let bad = ProposerParams { theta_delta: 0.8, theta_big_delta: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ProposerParams { safety_factor: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn angular_gap_wraps() {
        assert!((angular_gap(3.0, -3.0) - (TAU - 6.0)).abs() < 1e-12);
        assert_eq!(angular_gap(0.5, 0.5), 0.0);
    }
}
