use rand::Rng;

use super::{
    featurize_set, grpo_update, sft_update, FeatureConfig, GrpoParams, GrpoState, PolicyParams, SftExample,
};
use crate::datagen::EpisodeRecord;
use crate::error::{Error, LearnerError};
use crate::proposer::CandidateSet;
use crate::reward::RewardParams;
use crate::rng::seeded;
use crate::world::{Pose, DEFAULT_CELL_SIZE};

/// A decision point lifted from the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub pose: Pose,
    pub goal_xy: (f64, f64),
    pub candidates: CandidateSet,
    pub distances: Vec<f64>,
    /// Index (presentation order) of the oracle choice.
    pub optimal: usize,
}

impl TrainingState {
    fn features<R: Rng + ?Sized>(&self, cfg: &FeatureConfig, rng: &mut R) -> Vec<Vec<f64>> {
        featurize_set(&self.candidates, &self.pose, self.goal_xy, cfg, rng)
    }
}

pub fn states_from_corpus(records: &[EpisodeRecord]) -> Vec<TrainingState> {
    let mut out = Vec::new();
    for rec in records {
        let goal_xy =
            ((rec.goal.x as f64 + 0.5) * DEFAULT_CELL_SIZE, (rec.goal.y as f64 + 0.5) * DEFAULT_CELL_SIZE);
        for s in &rec.steps {
            out.push(TrainingState {
                pose: s.pose,
                goal_xy,
                candidates: s.candidates.clone(),
                distances: s.distances.clone(),
                optimal: s.optimal_index(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub loss: f64,
    pub mean_reward: f64,
    pub kl: f64,
    pub sr_eval: Option<f64>,
}

pub fn log_csv(rows: &[LogRow]) -> String {
    let mut s = String::from("step,loss,mean_reward,kl,sr_eval\n");
    for r in rows {
        let sr = r.sr_eval.map(|x| format!("{x:.4}")).unwrap_or_default();
        s.push_str(&format!("{},{:.6},{:.6},{:.6},{}\n", r.step, r.loss, r.mean_reward, r.kl, sr));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SftConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub features: FeatureConfig,
    /// Calls the evaluation hook every this many steps; 0 disables it.
    pub eval_every: usize,
}

impl Default for SftConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            batch_size: 64,
            lr: 0.5,
            seed: 0,
            features: FeatureConfig::default(),
            eval_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrpoConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub features: FeatureConfig,
    pub grpo: GrpoParams,
    pub eval_every: usize,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            batch_size: 64,
            seed: 0,
            features: FeatureConfig::default(),
            grpo: GrpoParams::default(),
            eval_every: 0,
        }
    }
}

fn hook_due(every: usize, step: usize, last: usize) -> bool {
    every > 0 && (step.is_multiple_of(every) || step == last)
}

type EvalHook<'a> = Option<&'a dyn Fn(&PolicyParams) -> f64>;

/// Minibatch imitation of the oracle choice.
pub fn train_sft(
    states: &[TrainingState],
    cfg: &SftConfig,
    init: PolicyParams,
    eval_hook: EvalHook<'_>,
) -> Result<(PolicyParams, Vec<LogRow>), Error> {
    if states.is_empty() {
        return Err(LearnerError::EmptyBatch.into());
    }
    let mut rng = seeded(cfg.seed, 0x5f7);
    let scorer = RewardParams::default();
    let mut params = init;
    let mut log = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let picked: Vec<&TrainingState> =
            (0..cfg.batch_size.max(1)).map(|_| &states[rng.random_range(0..states.len())]).collect();
        let batch: Vec<SftExample> = picked
            .iter()
            .map(|s| SftExample { features: s.features(&cfg.features, &mut rng), target: s.optimal })
            .collect();
        // Reward the current greedy choice would earn, for monitoring only.
        let mut reward = 0.0;
        for (s, ex) in picked.iter().zip(&batch) {
            reward += scorer.score(&s.distances, params.argmax(&ex.features))?;
        }
        let (next, loss) = sft_update(&params, &batch, cfg.lr)?;
        params = next;
        let sr_eval = match eval_hook {
            Some(h) if hook_due(cfg.eval_every, step, cfg.steps) => Some(h(&params)),
            _ => None,
        };
        log.push(LogRow { step, loss, mean_reward: reward / batch.len() as f64, kl: 0.0, sr_eval });
    }
    Ok((params, log))
}

/// Group-relative policy optimization anchored to `reference`.
pub fn train_grpo(
    states: &[TrainingState],
    cfg: &GrpoConfig,
    init: PolicyParams,
    reference: &PolicyParams,
    eval_hook: EvalHook<'_>,
) -> Result<(PolicyParams, Vec<LogRow>), Error> {
    if states.is_empty() {
        return Err(LearnerError::EmptyBatch.into());
    }
    let mut rng = seeded(cfg.seed, 0x6270);
    let mut params = init;
    let mut log = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let batch: Vec<GrpoState> = (0..cfg.batch_size.max(1))
            .map(|_| {
                let s = &states[rng.random_range(0..states.len())];
                GrpoState { features: s.features(&cfg.features, &mut rng), distances: s.distances.clone() }
            })
            .collect();
        let (next, diag) = grpo_update(&params, reference, &batch, &cfg.grpo, &mut rng)?;
        params = next;
        let sr_eval = match eval_hook {
            Some(h) if hook_due(cfg.eval_every, step, cfg.steps) => Some(h(&params)),
            _ => None,
        };
        log.push(LogRow { step, loss: diag.loss, mean_reward: diag.mean_reward, kl: diag.kl, sr_eval });
    }
    Ok((params, log))
}
