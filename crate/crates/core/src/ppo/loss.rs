//! Clipped-surrogate PPO loss with analytic gradients through the policy
//! heads.

use crate::error::Result;
use crate::policy::{log_prob, HeadGrads, PolicyParams};

const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;

/// One collected episode, step-major flat buffers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeData {
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_prob_old: Vec<f64>,
    pub value_old: Vec<f64>,
    pub mean_old: Vec<f64>,
    pub log_std_old: Vec<f64>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl EpisodeData {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Weights of the three loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossValue {
    /// `-mean(min(rho * A, clip(rho) * A))`.
    pub policy: f64,
    /// `mean((V - R)^2)`, unweighted.
    pub value: f64,
    /// Mean policy entropy, unweighted.
    pub entropy: f64,
    pub total: f64,
    /// Mean `KL(old || current)` per step.
    pub mean_kl: f64,
    pub clip_fraction: f64,
}

/// Closed-form `KL(N(mean1, std1) || N(mean2, std2))` for diagonal Gaussians.
pub fn kl_diag_gaussian(mean1: &[f64], std1: &[f64], mean2: &[f64], std2: &[f64]) -> f64 {
    let mut kl = 0.0;
    for i in 0..mean1.len() {
        let (s1, s2) = (std1[i], std2[i]);
        let dm = mean1[i] - mean2[i];
        kl += (s2 / s1).ln() + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5;
    }
    kl
}

/// Evaluates the weighted loss over `episodes`; when `grad` is given the
/// gradient with respect to the flat parameters is accumulated into it.
/// Terms are averaged over all steps of all episodes.
pub fn evaluate_loss(
    params: &PolicyParams,
    episodes: &[&EpisodeData],
    clip_epsilon: f64,
    weights: LossWeights,
    mut grad: Option<&mut [f64]>,
) -> Result<LossValue> {
    let a = params.shape().action_dim;
    let n: usize = episodes.iter().map(|e| e.len()).sum();
    let mut out = LossValue::default();
    if n == 0 {
        return Ok(out);
    }
    let inv_n = 1.0 / n as f64;
    let mut clipped = 0usize;
    for ep in episodes {
        let cache = params.forward_episode(&ep.obs)?;
        let mut g = grad.as_ref().map(|_| HeadGrads::zeros(ep.len(), a));
        for t in 0..ep.len() {
            let mean = cache.mean_at(t, a);
            let log_std = cache.log_std_at(t, a);
            let act = &ep.actions[t * a..(t + 1) * a];
            let lp = log_prob(mean, &log_std, act);
            let ratio = (lp - ep.log_prob_old[t]).exp();
            let adv = ep.advantages[t];
            let surr1 = ratio * adv;
            let surr2 = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon) * adv;
            let unclipped = surr1 <= surr2;
            if !unclipped {
                clipped += 1;
            }
            out.policy -= surr1.min(surr2) * inv_n;

            let v = cache.value[t];
            let err = v - ep.returns[t];
            out.value += err * err * inv_n;

            let ent: f64 = log_std.iter().map(|ls| ls + HALF_LN_2PI_E).sum();
            out.entropy += ent * inv_n;

            let std_new: Vec<f64> = log_std.iter().map(|v| v.exp()).collect();
            let std_old: Vec<f64> = ep.log_std_old[t * a..(t + 1) * a]
                .iter()
                .map(|v| v.exp())
                .collect();
            out.mean_kl +=
                kl_diag_gaussian(&ep.mean_old[t * a..(t + 1) * a], &std_old, mean, &std_new)
                    * inv_n;

            if let Some(g) = g.as_mut() {
                // d(-min)/d(log_prob) is nonzero only on the unclipped branch.
                let dlp = if unclipped {
                    -weights.policy * ratio * adv * inv_n
                } else {
                    0.0
                };
                for i in 0..a {
                    let s2 = std_new[i] * std_new[i];
                    let diff = act[i] - mean[i];
                    g.mean[t * a + i] = dlp * diff / s2;
                    g.log_std[t * a + i] = dlp * (diff * diff / s2 - 1.0) - weights.entropy * inv_n;
                }
                g.value[t] = weights.value * 2.0 * err * inv_n;
            }
        }
        if let (Some(buf), Some(g)) = (grad.as_deref_mut(), g.as_ref()) {
            params.backward_episode(&cache, g, buf);
        }
    }
    out.total =
        weights.policy * out.policy + weights.value * out.value - weights.entropy * out.entropy;
    out.clip_fraction = clipped as f64 * inv_n;
    Ok(out)
}
