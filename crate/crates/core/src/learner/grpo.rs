use rand::Rng;

use super::{kl_divergence, probs_all, PolicyParams};
use crate::error::{Error, LearnerError};
use crate::reward::RewardParams;

/// A decision state: candidate features and the matching distance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GrpoState {
    pub features: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub choices: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrpoParams {
    pub group_size: usize,
    pub beta_kl: f64,
    pub lr: f64,
    pub reward: RewardParams,
}

impl Default for GrpoParams {
    fn default() -> Self {
        Self { group_size: 5, beta_kl: 1e-2, lr: 0.5, reward: RewardParams::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrpoDiagnostics {
    pub loss: f64,
    pub mean_reward: f64,
    pub kl: f64,
}

/// `(r − mean) / (std + 1e-8)` with the population std; all zeros when the
/// group has no spread.
pub fn group_advantages(rewards: &[f64]) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std == 0.0 {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|r| (r - mean) / (std + 1e-8)).collect()
}

fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|pi| *pi > 0.0).unwrap_or(0)
}

/// Draws `group_size` choices with replacement and scores them.
pub fn sample_group<R: Rng + ?Sized>(
    params: &PolicyParams,
    state: &GrpoState,
    group_size: usize,
    reward: &RewardParams,
    rng: &mut R,
) -> Result<GroupSample, Error> {
    if state.features.len() != state.distances.len() {
        return Err(LearnerError::FeatureCount {
            expected: state.distances.len(),
            got: state.features.len(),
        }
        .into());
    }
    let p = probs_all(params, &state.features)?;
    let choices: Vec<usize> = (0..group_size).map(|_| sample_index(&p, rng)).collect();
    let log_probs = choices.iter().map(|&c| p[c].ln()).collect();
    let rewards =
        choices.iter().map(|&c| reward.score(&state.distances, c)).collect::<Result<Vec<_>, _>>()?;
    let advantages = group_advantages(&rewards);
    Ok(GroupSample { choices, log_probs, rewards, advantages })
}

/// Mean over states of `−Σ_j A_j log p(y_j) + β·KL(p ‖ p_ref)`, its gradient
/// and the mean KL.
pub fn grpo_loss_grad(
    params: &PolicyParams,
    reference: &PolicyParams,
    states: &[GrpoState],
    groups: &[GroupSample],
    beta_kl: f64,
) -> Result<(f64, Vec<f64>, f64), LearnerError> {
    if states.is_empty() {
        return Err(LearnerError::EmptyBatch);
    }
    if states.len() != groups.len() {
        return Err(LearnerError::FeatureCount { expected: states.len(), got: groups.len() });
    }
    let dim = params.dim();
    let mut loss = 0.0;
    let mut kl_total = 0.0;
    let mut grad = vec![0.0; dim];
    for (state, group) in states.iter().zip(groups) {
        let phi = &state.features;
        let p = probs_all(params, phi)?;
        let q = probs_all(reference, phi)?;
        let mut mean_phi = vec![0.0; dim];
        for (pk, f) in p.iter().zip(phi) {
            for (m, x) in mean_phi.iter_mut().zip(f) {
                *m += pk * x;
            }
        }
        for (&y, &a) in group.choices.iter().zip(&group.advantages) {
            if y >= phi.len() {
                return Err(LearnerError::TargetOutOfRange { index: y, len: phi.len() });
            }
            loss -= a * p[y].ln();
            for ((g, x), m) in grad.iter_mut().zip(&phi[y]).zip(&mean_phi) {
                *g -= a * (x - m);
            }
        }
        let kl = kl_divergence(&p, &q)?;
        kl_total += kl;
        loss += beta_kl * kl;
        for ((pk, qk), f) in p.iter().zip(&q).zip(phi) {
            if *pk == 0.0 {
                continue;
            }
            let coef = beta_kl * pk * ((pk / qk).ln() - kl);
            for (g, x) in grad.iter_mut().zip(f) {
                *g += coef * x;
            }
        }
    }
    let n = states.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad, kl_total / n))
}

/// Samples a group per state, then takes one gradient step.
pub fn grpo_update<R: Rng + ?Sized>(
    params: &PolicyParams,
    reference: &PolicyParams,
    states: &[GrpoState],
    cfg: &GrpoParams,
    rng: &mut R,
) -> Result<(PolicyParams, GrpoDiagnostics), Error> {
    let groups = states
        .iter()
        .map(|s| sample_group(params, s, cfg.group_size, &cfg.reward, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let (loss, grad, kl) = grpo_loss_grad(params, reference, states, &groups, cfg.beta_kl)?;
    let rewards: Vec<f64> = groups.iter().flat_map(|g| g.rewards.iter().copied()).collect();
    let mean_reward = rewards.iter().sum::<f64>() / rewards.len().max(1) as f64;
    let w = params.w.iter().zip(&grad).map(|(w, g)| w - cfg.lr * g).collect();
    Ok((PolicyParams { w }, GrpoDiagnostics { loss, mean_reward, kl }))
}
