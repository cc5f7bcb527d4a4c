use super::{probs_all, PolicyParams};
use crate::error::LearnerError;

/// One decision: per-candidate features plus the index of the oracle choice.
#[derive(Debug, Clone, PartialEq)]
pub struct SftExample {
    pub features: Vec<Vec<f64>>,
    pub target: usize,
}

/// Mean cross-entropy over the batch and its gradient `(p − onehot)·φ`.
pub fn sft_loss_grad(params: &PolicyParams, batch: &[SftExample]) -> Result<(f64, Vec<f64>), LearnerError> {
    if batch.is_empty() {
        return Err(LearnerError::EmptyBatch);
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.dim()];
    for ex in batch {
        if ex.target >= ex.features.len() {
            return Err(LearnerError::TargetOutOfRange { index: ex.target, len: ex.features.len() });
        }
        let p = probs_all(params, &ex.features)?;
        loss -= p[ex.target].max(f64::MIN_POSITIVE).ln();
        for (k, phi) in ex.features.iter().enumerate() {
            let coef = p[k] - if k == ex.target { 1.0 } else { 0.0 };
            for (g, f) in grad.iter_mut().zip(phi) {
                *g += coef * f;
            }
        }
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

/// One gradient-descent step. Returns the new weights and the loss at the
/// old ones.
pub fn sft_update(
    params: &PolicyParams,
    batch: &[SftExample],
    lr: f64,
) -> Result<(PolicyParams, f64), LearnerError> {
    let (loss, grad) = sft_loss_grad(params, batch)?;
    let w = params.w.iter().zip(&grad).map(|(w, g)| w - lr * g).collect();
    Ok((PolicyParams { w }, loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::FEATURE_DIM;
    use crate::rng::seeded;
    use rand::Rng;

    fn random_batch(seed: u64, n: usize) -> Vec<SftExample> {
        let mut rng = seeded(seed, 0);
        (0..n)
            .map(|_| {
                let k = rng.random_range(2..7);
                SftExample {
                    features: (0..k)
                        .map(|_| (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect(),
                    target: rng.random_range(0..k),
                }
            })
            .collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let batch = random_batch(11, 8);
        let params = PolicyParams { w: vec![0.3, -0.7, 0.1, 0.9, -0.2, 0.05] };
        let (_, grad) = sft_loss_grad(&params, &batch).unwrap();
        let h = 1e-6;
        for (k, &analytic) in grad.iter().enumerate() {
            let mut up = params.clone();
            let mut dn = params.clone();
            up.w[k] += h;
            dn.w[k] -= h;
            let fd =
                (sft_loss_grad(&up, &batch).unwrap().0 - sft_loss_grad(&dn, &batch).unwrap().0) / (2.0 * h);
            assert!((fd - analytic).abs() < 1e-6, "k={k}: fd={fd} analytic={}", analytic);
        }
    }

    #[test]
    fn loss_is_non_increasing_with_small_steps() {
        let batch = random_batch(5, 16);
        let mut params = PolicyParams::zeros(FEATURE_DIM);
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            let (next, loss) = sft_update(&params, &batch, 0.05).unwrap();
            assert!(loss <= last + 1e-12);
            last = loss;
            params = next;
        }
    }

    #[test]
    fn learns_positive_weight_on_alignment() {
        let mut rng = seeded(8, 2);
        let batch: Vec<SftExample> = (0..64)
            .map(|_| {
                let k = rng.random_range(2..6);
                let features: Vec<Vec<f64>> =
                    (0..k).map(|_| (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                let target = (0..k)
                    .max_by(|&a, &b| {
                        features[a][super::super::BEARING_FEATURE]
                            .total_cmp(&features[b][super::super::BEARING_FEATURE])
                    })
                    .unwrap();
                SftExample { features, target }
            })
            .collect();
        let mut params = PolicyParams::zeros(FEATURE_DIM);
        for _ in 0..1000 {
            params = sft_update(&params, &batch, 0.5).unwrap().0;
        }
        let b = params.w[super::super::BEARING_FEATURE];
        assert!(b > 0.0);
        assert!(params.w.iter().enumerate().all(|(i, w)| i == super::super::BEARING_FEATURE || w.abs() < b));
    }

    #[test]
    fn rejects_bad_batches() {
        let p = PolicyParams::zeros(FEATURE_DIM);
        assert_eq!(sft_loss_grad(&p, &[]), Err(LearnerError::EmptyBatch));
        let ex = SftExample { features: vec![vec![0.0; FEATURE_DIM]], target: 1 };
        assert_eq!(sft_loss_grad(&p, &[ex]), Err(LearnerError::TargetOutOfRange { index: 1, len: 1 }));
    }
}
