//! Densely annotated decision data: an oracle agent walks toward the goal,
//! records the geodesic distance of every candidate at every step, and
//! revisits ambiguous decision points to record alternative routes.

mod corpus;

pub use corpus::{read_corpus, write_records, CORPUS_FLOAT_DECIMALS};

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::eval::stop_check;
use crate::geodesic::DistanceField;
use crate::nav::{AgentState, NavConfig};
use crate::proposer::{Candidate, CandidateSet, TURN_AROUND_ID};
use crate::reward::{argmin, certainty, second_best};
use crate::world::{Cell, ExplorationMap, OccupancyGrid, Pose, DEFAULT_CELL_SIZE};

/// Supervision unit: the candidate set joined with its distance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAnnotation {
    pub episode_id: usize,
    pub step_index: usize,
    pub pose: Pose,
    pub candidates: CandidateSet,
    /// Aligned with `candidates` (presentation order).
    pub distances: Vec<f64>,
    pub optimal_id: usize,
    pub certainty: f64,
}

impl StepAnnotation {
    /// Position of the optimal candidate in presentation order.
    pub fn optimal_index(&self) -> usize {
        self.candidates.position_of(self.optimal_id).expect("optimal id is in the set")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktrackPoint {
    pub pose: Pose,
    /// Exploration map as it was before observing at `pose`.
    pub exploration: ExplorationMap,
    pub step_index: usize,
    pub optimal_id: usize,
    pub alternative_id: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Timeout,
    Filtered,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Timeout => "timeout",
            Self::Filtered => "filtered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "success" => Some(Self::Success),
            "timeout" => Some(Self::Timeout),
            "filtered" => Some(Self::Filtered),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub id: usize,
    pub map_seed: u64,
    pub goal: Cell,
    pub outcome: Outcome,
    pub path_length: f64,
    pub optimal_length: f64,
    pub steps: Vec<StepAnnotation>,
    /// Candidate id executed at each step. Not serialized; a corpus read back
    /// from disk reports the optimal ids here.
    pub taken: Vec<usize>,
}

impl EpisodeRecord {
    pub fn set_id(&mut self, id: usize) {
        self.id = id;
        for s in &mut self.steps {
            s.episode_id = id;
        }
    }

    pub fn is_alternative(&self) -> bool {
        self.steps.first().is_some_and(|s| self.taken.first() != Some(&s.optimal_id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterRules {
    /// Reject when any cell is occupied at more than this many steps.
    pub loop_limit: usize,
    pub max_consecutive_turnarounds: usize,
}

impl Default for FilterRules {
    fn default() -> Self {
        Self { loop_limit: 3, max_consecutive_turnarounds: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub nav: NavConfig,
    /// Backtrack when certainty falls below this.
    pub certainty_threshold: f64,
    /// Backtrack when the best two distances are within this many metres.
    pub tie_eps: f64,
    pub max_backtracks: usize,
    pub epsilon: f64,
    pub filter: FilterRules,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            nav: NavConfig::default(),
            certainty_threshold: 0.1,
            tie_eps: DEFAULT_CELL_SIZE * std::f64::consts::SQRT_2,
            max_backtracks: 3,
            epsilon: 1e-6,
            filter: FilterRules::default(),
        }
    }
}

/// Geodesic distance credited to a candidate: the landing cell's field value,
/// plus `turn_around_penalty` for the turn-around.
pub fn candidate_distance(field: &DistanceField, c: &Candidate, turn_around_penalty: f64) -> f64 {
    let d = field.dist(c.landing);
    if c.is_turn_around() {
        d + turn_around_penalty
    } else {
        d
    }
}

/// Joins the proposed candidates with their distances to the goal.
/// Candidates whose landing cannot reach the goal are dropped first and the
/// remaining navigable ids renumbered `1..=K`.
pub fn annotate_step(
    candidates: CandidateSet,
    pose: Pose,
    field: &DistanceField,
    turn_around_penalty: f64,
    epsilon: f64,
) -> Result<StepAnnotation> {
    let mut kept: Vec<Candidate> =
        candidates.candidates.into_iter().filter(|c| field.is_reachable(c.landing)).collect();
    for (id, c) in (1..).zip(kept.iter_mut().filter(|c| !c.is_turn_around())) {
        c.id = id;
    }
    if kept.is_empty() {
        return Err(Error::Invalid(format!("no candidate at {pose:?} reaches the goal")));
    }
    let candidates = CandidateSet { candidates: kept };
    let distances: Vec<f64> =
        candidates.iter().map(|c| candidate_distance(field, c, turn_around_penalty)).collect();
    let best = argmin(&distances).expect("non-empty");
    Ok(StepAnnotation {
        episode_id: 0,
        step_index: 0,
        pose,
        optimal_id: candidates[best].id,
        certainty: certainty(&distances, epsilon),
        candidates,
        distances,
    })
}

struct Rollout {
    steps: Vec<StepAnnotation>,
    taken: Vec<usize>,
    outcome: Outcome,
    path_length: f64,
}

fn rollout(
    grid: &OccupancyGrid,
    field: &DistanceField,
    mut state: AgentState,
    forced_first: Option<usize>,
    cfg: &GenConfig,
    backtracks: Option<&mut Vec<BacktrackPoint>>,
) -> Result<Rollout> {
    let goal = field.goal();
    let mut steps = Vec::new();
    let mut taken = Vec::new();
    let mut backtracks = backtracks;
    let outcome = loop {
        if stop_check(grid, &state.pose, goal, cfg.nav.success_radius) {
            break Outcome::Success;
        }
        if state.budget_left(&cfg.nav) == 0 {
            break Outcome::Timeout;
        }
        let snapshot = backtracks.as_ref().map(|_| state.exploration.clone());
        let (_, set) = state.observe(grid, &cfg.nav);
        let mut ann = annotate_step(set, state.pose, field, cfg.nav.turn_around_penalty, cfg.epsilon)?;
        ann.step_index = steps.len();

        let choice = match (steps.is_empty(), forced_first) {
            (true, Some(id)) => id,
            _ => ann.optimal_id,
        };
        if let (Some(points), Some(exploration)) = (backtracks.as_deref_mut(), snapshot) {
            if points.len() < cfg.max_backtracks {
                if let Some(second) = second_best(&ann.distances) {
                    let best = ann.optimal_index();
                    let gap = (ann.distances[second] - ann.distances[best]).abs();
                    if ann.certainty < cfg.certainty_threshold || gap < cfg.tie_eps {
                        points.push(BacktrackPoint {
                            pose: state.pose,
                            exploration,
                            step_index: ann.step_index,
                            optimal_id: ann.optimal_id,
                            alternative_id: ann.candidates[second].id,
                            depth: 1,
                        });
                    }
                }
            }
        }
        let pos = ann
            .candidates
            .position_of(choice)
            .ok_or_else(|| Error::Invalid(format!("no candidate id {choice}")))?;
        let cand = ann.candidates[pos].clone();
        steps.push(ann);
        taken.push(choice);
        state.act(grid, &cand, &cfg.nav)?;
    };
    Ok(Rollout { steps, taken, outcome, path_length: state.path_length })
}

/// Main greedy rollout plus one alternative rollout per recorded backtrack
/// point (depth 1). Records are returned main-first; ids are local
/// (`0..n`) and are expected to be renumbered by the caller.
pub fn generate_episode(
    grid: &OccupancyGrid,
    field: &DistanceField,
    map_seed: u64,
    start: Pose,
    cfg: &GenConfig,
) -> Result<Vec<EpisodeRecord>> {
    let start_cell = grid.cell_of(start.x, start.y).ok_or_else(|| Error::Invalid("start off-grid".into()))?;
    if grid.is_occupied(start_cell) || grid.point_blocked(start.x, start.y) {
        return Err(Error::Invalid(format!("start {start:?} is inside an obstacle")));
    }
    if !field.is_reachable(start_cell) {
        return Err(Error::UnreachableGoal { start: start_cell, goal: field.goal() });
    }
    let mut points = Vec::new();
    let main = rollout(grid, field, AgentState::new(grid, start), None, cfg, Some(&mut points))?;
    let mut records = vec![to_record(0, map_seed, field, start_cell, main)];
    for (k, bp) in points.into_iter().enumerate() {
        let state = AgentState::from_snapshot(bp.pose, bp.exploration);
        let alt = rollout(grid, field, state, Some(bp.alternative_id), cfg, None)?;
        let cell = grid.cell_of(bp.pose.x, bp.pose.y).expect("snapshot pose on grid");
        records.push(to_record(k + 1, map_seed, field, cell, alt));
    }
    Ok(records)
}

fn to_record(id: usize, map_seed: u64, field: &DistanceField, start: Cell, r: Rollout) -> EpisodeRecord {
    let mut rec = EpisodeRecord {
        id,
        map_seed,
        goal: field.goal(),
        outcome: r.outcome,
        path_length: r.path_length,
        optimal_length: field.dist(start),
        steps: r.steps,
        taken: r.taken,
    };
    rec.set_id(id);
    rec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    CellLoop,
    TurnLoop,
    Timeout,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CellLoop => "cell-loop",
            Self::TurnLoop => "turn-loop",
            Self::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Reject(RejectReason),
}

pub fn filter_episode(record: &EpisodeRecord, rules: &FilterRules) -> Verdict {
    if record.outcome == Outcome::Timeout {
        return Verdict::Reject(RejectReason::Timeout);
    }
    let mut streak = 0;
    for &id in &record.taken {
        streak = if id == TURN_AROUND_ID { streak + 1 } else { 0 };
        if streak > rules.max_consecutive_turnarounds {
            return Verdict::Reject(RejectReason::TurnLoop);
        }
    }
    let mut visits: HashMap<(i64, i64), usize> = HashMap::new();
    for s in &record.steps {
        let key =
            ((s.pose.x / DEFAULT_CELL_SIZE).floor() as i64, (s.pose.y / DEFAULT_CELL_SIZE).floor() as i64);
        let n = visits.entry(key).or_default();
        *n += 1;
        if *n > rules.loop_limit {
            return Verdict::Reject(RejectReason::CellLoop);
        }
    }
    Verdict::Keep
}
