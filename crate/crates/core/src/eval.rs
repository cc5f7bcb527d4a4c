//! Episode runner, geometric stop oracle and SR/SPL bookkeeping.

use rand::Rng;
use rayon::prelude::*;

use crate::controller::execute;
use crate::error::{Error, Result};
use crate::geodesic::{distance_field, DistanceField};
use crate::learner::{featurize_set, FeatureConfig, PolicyParams};
use crate::nav::{AgentState, NavConfig};
use crate::proposer::{Candidate, CandidateSet};
use crate::rng::{seeded, Rng as SimRng};
use crate::world::{first_hit, Cell, OccupancyGrid, Pose, TURN_STEP};

/// Stop iff the goal-cell centre is within `success_radius` and visible.
pub fn stop_check(grid: &OccupancyGrid, pose: &Pose, goal: Cell, success_radius: f64) -> bool {
    let (gx, gy) = grid.cell_center(goal);
    let (dx, dy) = (gx - pose.x, gy - pose.y);
    let dist = dx.hypot(dy);
    if dist > success_radius {
        return false;
    }
    dist == 0.0 || first_hit(grid, pose.x, pose.y, dy.atan2(dx), dist).is_none()
}

/// Geodesic distance from where executing `c` would actually leave the
/// agent, turn quantization and collisions included.
fn executed_distance(
    grid: &OccupancyGrid,
    field: &DistanceField,
    state: &AgentState,
    c: &Candidate,
    cfg: &EvalConfig,
) -> f64 {
    let end = match execute(grid, &state.pose, c.r, c.theta, state.budget_left(&cfg.nav)) {
        Ok(exec) => exec.pose,
        Err(_) => return f64::INFINITY,
    };
    let d = grid.cell_of(end.x, end.y).map_or(f64::INFINITY, |cell| field.dist(cell));
    if c.is_turn_around() {
        d + cfg.nav.turn_around_penalty
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Uniform over the proposed candidates.
    Random,
    /// Lowest true geodesic distance after executing the candidate; the
    /// sanity ceiling.
    Oracle,
    /// Greedy decoding of a trained linear policy.
    Learned(PolicyParams),
}

impl Policy {
    #[allow(clippy::too_many_arguments)]
    fn choose(
        &self,
        grid: &OccupancyGrid,
        state: &AgentState,
        set: &CandidateSet,
        field: &DistanceField,
        goal_xy: (f64, f64),
        cfg: &EvalConfig,
        rng: &mut SimRng,
    ) -> usize {
        match self {
            Policy::Random => rng.random_range(0..set.len()),
            Policy::Oracle => {
                let d: Vec<f64> = set.iter().map(|c| executed_distance(grid, field, state, c, cfg)).collect();
                crate::reward::argmin(&d).unwrap_or(0)
            }
            Policy::Learned(params) => {
                let phi = featurize_set(set, &state.pose, goal_xy, &cfg.features, rng);
                params.argmax(&phi)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalConfig {
    pub nav: NavConfig,
    pub features: FeatureConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub success: bool,
    pub path_length: f64,
    pub optimal_length: f64,
    pub primitives: usize,
    pub actions: usize,
    pub collisions: usize,
}

pub fn run_episode(
    grid: &OccupancyGrid,
    field: &DistanceField,
    start: Pose,
    policy: &Policy,
    cfg: &EvalConfig,
    rng: &mut SimRng,
) -> Result<EpisodeOutcome> {
    let start_cell = grid.cell_of(start.x, start.y).ok_or_else(|| Error::Invalid("start off-grid".into()))?;
    if !field.is_reachable(start_cell) {
        return Err(Error::UnreachableGoal { start: start_cell, goal: field.goal() });
    }
    let goal = field.goal();
    let goal_xy = grid.cell_center(goal);
    let mut state = AgentState::new(grid, start);
    let mut actions = 0;
    let success = loop {
        if stop_check(grid, &state.pose, goal, cfg.nav.success_radius) {
            break true;
        }
        if state.budget_left(&cfg.nav) == 0 {
            break false;
        }
        let (_, set) = state.observe(grid, &cfg.nav);
        let pick = policy.choose(grid, &state, &set, field, goal_xy, cfg, rng);
        state.act(grid, &set[pick], &cfg.nav)?;
        actions += 1;
    };
    Ok(EpisodeOutcome {
        success,
        path_length: state.path_length,
        optimal_length: field.dist(start_cell),
        primitives: state.primitives_used,
        actions,
        collisions: state.collisions,
    })
}

/// `(1/N) Σ S_i ℓ_i / max(p_i, ℓ_i)`.
pub fn spl(successes: &[bool], optimal: &[f64], actual: &[f64]) -> Result<f64> {
    if successes.len() != optimal.len() || successes.len() != actual.len() {
        return Err(Error::Invalid("spl inputs differ in length".into()));
    }
    if successes.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ((&s, &l), &p) in successes.iter().zip(optimal).zip(actual) {
        if !s {
            continue;
        }
        if !(l > 0.0) || !(p > 0.0) {
            return Err(Error::Invalid(format!(
                "successful episode with zero length (optimal {l}, actual {p})"
            )));
        }
        total += l / p.max(l);
    }
    Ok(total / successes.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub policy: String,
    pub reward_family: String,
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub mean_path: f64,
}

pub fn aggregate(policy: &str, reward_family: &str, outcomes: &[EpisodeOutcome]) -> Result<EvalSummary> {
    if outcomes.is_empty() {
        return Err(Error::Invalid("nothing to aggregate".into()));
    }
    let n = outcomes.len() as f64;
    let succ: Vec<bool> = outcomes.iter().map(|o| o.success).collect();
    let opt: Vec<f64> = outcomes.iter().map(|o| o.optimal_length).collect();
    let act: Vec<f64> = outcomes.iter().map(|o| o.path_length).collect();
    Ok(EvalSummary {
        policy: policy.to_string(),
        reward_family: reward_family.to_string(),
        episodes: outcomes.len(),
        sr: succ.iter().filter(|s| **s).count() as f64 / n,
        spl: spl(&succ, &opt, &act)?,
        mean_path: act.iter().sum::<f64>() / n,
    })
}

pub fn summary_csv(rows: &[EvalSummary]) -> String {
    let mut s = String::from("policy,reward_family,episodes,SR,SPL,mean_path_m\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4}\n",
            r.policy, r.reward_family, r.episodes, r.sr, r.spl, r.mean_path
        ));
    }
    s
}

/// Free, goal-reachable cells at least `min_dist` metres (geodesic) from the
/// goal, with twelve discrete headings each; poses where the stop oracle
/// would already fire are excluded. On maps too small for `min_dist` the
/// threshold drops to three quarters of the farthest reachable distance.
pub fn start_candidates(
    grid: &OccupancyGrid,
    field: &DistanceField,
    min_dist: f64,
    success_radius: f64,
) -> Vec<Pose> {
    let goal = field.goal();
    let farthest = grid.free_cells().map(|c| field.dist(c)).filter(|d| d.is_finite()).fold(0.0, f64::max);
    let min_dist = min_dist.min(0.75 * farthest);
    let mut out = Vec::new();
    for c in grid.free_cells() {
        if !field.is_reachable(c) || field.dist(c) < min_dist {
            continue;
        }
        let p = Pose::at_cell(grid, c, 0.0);
        if stop_check(grid, &p, goal, success_radius) {
            continue;
        }
        out.extend((0..12).map(|k| Pose::at_cell(grid, c, k as f64 * TURN_STEP)));
    }
    out
}

/// A fixed evaluation set: maps plus (map index, start) tasks.
pub struct EvalSuite {
    pub maps: Vec<(OccupancyGrid, DistanceField)>,
    pub tasks: Vec<(usize, Pose)>,
    pub seed: u64,
}

impl EvalSuite {
    /// Round-robins `episodes` over `maps`, drawing each start from its own
    /// seeded stream so the set is independent of iteration order.
    pub fn build(
        maps: Vec<OccupancyGrid>,
        episodes: usize,
        seed: u64,
        min_dist: f64,
        success_radius: f64,
    ) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Invalid("evaluation needs at least one map".into()));
        }
        let mut with_fields = Vec::with_capacity(maps.len());
        let mut pools = Vec::with_capacity(maps.len());
        for g in maps {
            let f = distance_field(&g, g.goal().cell)?;
            let starts = start_candidates(&g, &f, min_dist, success_radius);
            if starts.is_empty() {
                return Err(Error::Invalid(format!("map '{}' has no valid start", g.goal().category_label)));
            }
            pools.push(starts);
            with_fields.push((g, f));
        }
        let tasks = (0..episodes)
            .map(|i| {
                let m = i % pools.len();
                let mut rng = seeded(seed, 0x57a7 + i as u64);
                (m, pools[m][rng.random_range(0..pools[m].len())])
            })
            .collect();
        Ok(Self { maps: with_fields, tasks, seed })
    }

    /// Runs every task; results are in task order for any worker count.
    pub fn run(&self, policy: &Policy, cfg: &EvalConfig, workers: usize) -> Result<Vec<EpisodeOutcome>> {
        let job = |i: usize| {
            let (m, start) = self.tasks[i];
            let (grid, field) = &self.maps[m];
            let mut rng = seeded(self.seed, 0xe7a1_0000 + i as u64);
            run_episode(grid, field, start, policy, cfg, &mut rng)
        };
        if workers <= 1 {
            return (0..self.tasks.len()).map(job).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        pool.install(|| (0..self.tasks.len()).into_par_iter().map(job).collect())
    }
}
