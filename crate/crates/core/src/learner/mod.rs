//! Trainable candidate policy: a linear score over hand-built candidate
//! features, decoded with a softmax masked to the valid candidate set.

mod checkpoint;
mod grpo;
mod sft;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use grpo::{
    group_advantages, grpo_loss_grad, grpo_update, sample_group, GroupSample, GrpoDiagnostics, GrpoParams,
    GrpoState,
};
pub use sft::{sft_loss_grad, sft_update, SftExample};
pub use train::{
    log_csv, states_from_corpus, train_grpo, train_sft, GrpoConfig, LogRow, SftConfig, TrainingState,
};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::LearnerError;
use crate::proposer::{Candidate, CandidateSet};
use crate::world::Pose;

pub const FEATURE_DIM: usize = 6;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = ["r", "theta", "unexplored", "clearance", "bearing", "bias"];
pub const BEARING_FEATURE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub r_max: f64,
    pub max_range: f64,
    pub safety_factor: f64,
    /// Std-dev of the goal-bearing corruption in radians; infinite means
    /// the bearing carries no information.
    pub bearing_noise: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { r_max: 1.7, max_range: 5.0, safety_factor: 2.0 / 3.0, bearing_noise: 30f64.to_radians() }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Goal direction relative to the heading, in `(-π, π]`.
pub fn goal_bearing(pose: &Pose, goal_xy: (f64, f64)) -> f64 {
    wrap_angle((goal_xy.1 - pose.y).atan2(goal_xy.0 - pose.x) - pose.heading)
}

pub fn noisy_bearing<R: Rng + ?Sized>(pose: &Pose, goal_xy: (f64, f64), sigma: f64, rng: &mut R) -> f64 {
    if sigma.is_infinite() {
        return rng.random_range(-PI..PI);
    }
    let clean = goal_bearing(pose, goal_xy);
    if sigma <= 0.0 {
        return clean;
    }
    let noise = Normal::new(0.0, sigma).expect("finite positive sigma").sample(rng);
    wrap_angle(clean + noise)
}

/// `[r/r_max, θ/π, e, clearance, cos(θ − bearing), 1]`; every entry in `[-1, 1]`.
///
/// Clearance is recovered from the clipped radius (`r / safety_factor`),
/// which is exact unless the `r_max` clip was active.
pub fn featurize(c: &Candidate, bearing: f64, cfg: &FeatureConfig) -> Vec<f64> {
    let clearance = if c.is_turn_around() {
        0.0
    } else {
        ((c.r / cfg.safety_factor).min(cfg.max_range) / cfg.max_range).clamp(0.0, 1.0)
    };
    vec![
        (c.r / cfg.r_max).clamp(0.0, 1.0),
        (c.theta / PI).clamp(-1.0, 1.0),
        if c.unexplored { 1.0 } else { 0.0 },
        clearance,
        (c.theta - bearing).cos(),
        1.0,
    ]
}

pub fn featurize_set<R: Rng + ?Sized>(
    set: &CandidateSet,
    pose: &Pose,
    goal_xy: (f64, f64),
    cfg: &FeatureConfig,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let bearing = noisy_bearing(pose, goal_xy, cfg.bearing_noise, rng);
    set.iter().map(|c| featurize(c, bearing, cfg)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub w: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(dim: usize) -> Self {
        Self { w: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn logit(&self, phi: &[f64]) -> f64 {
        self.w.iter().zip(phi).map(|(a, b)| a * b).sum()
    }

    /// Highest-probability candidate; ties go to the lowest index.
    pub fn argmax(&self, features: &[Vec<f64>]) -> usize {
        let mut best = 0;
        let mut best_z = f64::NEG_INFINITY;
        for (i, phi) in features.iter().enumerate() {
            let z = self.logit(phi);
            if z > best_z {
                best = i;
                best_z = z;
            }
        }
        best
    }

    pub fn distance_to(&self, other: &PolicyParams) -> f64 {
        self.w.iter().zip(&other.w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// Softmax over the logits of valid candidates; invalid ones get exactly 0.
pub fn policy_probs(
    params: &PolicyParams,
    features: &[Vec<f64>],
    valid: &[bool],
) -> Result<Vec<f64>, LearnerError> {
    if features.len() != valid.len() {
        return Err(LearnerError::FeatureCount { expected: valid.len(), got: features.len() });
    }
    if !valid.iter().any(|v| *v) {
        return Err(LearnerError::EmptyValidSet);
    }
    let logits: Vec<f64> = features.iter().map(|phi| params.logit(phi)).collect();
    let zmax =
        logits.iter().zip(valid).filter(|(_, v)| **v).map(|(z, _)| *z).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> =
        logits.iter().zip(valid).map(|(z, v)| if *v { (z - zmax).exp() } else { 0.0 }).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// All-valid shorthand for [`policy_probs`].
pub fn probs_all(params: &PolicyParams, features: &[Vec<f64>]) -> Result<Vec<f64>, LearnerError> {
    policy_probs(params, features, &vec![true; features.len()])
}

/// `KL(p ‖ q) = Σ p log(p/q)`; zero-probability entries of `p` contribute 0.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, LearnerError> {
    if p.len() != q.len() {
        return Err(LearnerError::FeatureCount { expected: p.len(), got: q.len() });
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(LearnerError::SupportViolation(i));
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl.max(0.0))
}
