//! Clipped-surrogate PPO with an Adam optimizer.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::categorical::log_softmax;
use crate::mlp::Tape;
use crate::net::PolicyNet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub max_grad_norm: f64,
    /// Rewards are multiplied by this before advantages and value targets
    /// are computed.
    pub reward_scale: f64,
    pub hidden: Vec<usize>,
    /// Episodes collected between updates.
    pub episodes_per_update: usize,
    /// Decay the learning rate linearly to zero over the training budget.
    pub anneal_lr: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            epochs: 4,
            minibatch: 64,
            lr: 3e-4,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            max_grad_norm: 0.5,
            reward_scale: 0.001,
            hidden: vec![128, 128],
            episodes_per_update: 8,
            anneal_lr: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.gamma) {
            return Err(format!("ppo.gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !unit(self.lambda) {
            return Err(format!("ppo.lambda must lie in [0, 1], got {}", self.lambda));
        }
        if !(self.clip >= 0.0 && self.clip.is_finite()) {
            return Err(format!("ppo.clip must be non-negative, got {}", self.clip));
        }
        if self.epochs == 0 || self.minibatch == 0 || self.episodes_per_update == 0 {
            return Err("ppo.epochs, ppo.minibatch and ppo.episodes_per_update must be positive".into());
        }
        for (name, x) in [
            ("lr", self.lr),
            ("max_grad_norm", self.max_grad_norm),
            ("reward_scale", self.reward_scale),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(format!("ppo.{name} must be positive, got {x}"));
            }
        }
        for (name, x) in [("value_coeff", self.value_coeff), ("entropy_coeff", self.entropy_coeff)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(format!("ppo.{name} must be non-negative, got {x}"));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err("ppo.hidden needs at least one positive width".into());
        }
        Ok(())
    }
}

/// One training example for a single network.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoeffs {
    pub clip: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
}

impl From<&PpoConfig> for LossCoeffs {
    fn from(c: &PpoConfig) -> Self {
        Self {
            clip: c.clip,
            value_coeff: c.value_coeff,
            entropy_coeff: c.entropy_coeff,
        }
    }
}

/// Batch means.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    /// Negative clipped surrogate.
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub kl: f64,
    pub clip_fraction: f64,
}

/// `mean(-min(ρA, clip(ρ)A) + c_v (V - R)^2 - c_e H)` over `idx`, evaluated
/// at `params`. When `grad` is given the gradient is added into it.
pub fn ppo_loss(
    net: &PolicyNet,
    params: &[f64],
    samples: &[Sample],
    idx: &[usize],
    coeffs: LossCoeffs,
    mut grad: Option<&mut [f64]>,
) -> LossTerms {
    let mlp = net.mlp();
    let levels = net.levels();
    let heads = net.num_heads();
    let split = heads * levels;
    let scale = 1.0 / idx.len().max(1) as f64;
    let mut tape = Tape::default();
    let mut lp = vec![0.0; split];
    let mut g_out = vec![0.0; split + 1];
    let mut terms = LossTerms::default();
    for &i in idx {
        let s = &samples[i];
        mlp.forward(params, &s.obs, &mut tape);
        let out = tape.output();
        let value = out[split];
        let mut log_prob = 0.0;
        let mut ent = 0.0;
        for h in 0..heads {
            let r = h * levels..(h + 1) * levels;
            log_softmax(&out[r.clone()], &mut lp[r.clone()]);
            log_prob += lp[h * levels + s.actions[h]];
            ent -= lp[r].iter().map(|&l| l.exp() * l).sum::<f64>();
        }
        let ratio = (log_prob - s.old_log_prob).exp();
        let clipped = ratio.clamp(1.0 - coeffs.clip, 1.0 + coeffs.clip);
        let surr1 = ratio * s.advantage;
        let surr2 = clipped * s.advantage;
        let (surr, d_surr_d_logp) = if surr1 <= surr2 {
            (surr1, ratio * s.advantage)
        } else {
            (surr2, 0.0)
        };
        let v_err = value - s.ret;
        terms.policy -= surr * scale;
        terms.value += v_err * v_err * scale;
        terms.entropy += ent * scale;
        terms.kl += (s.old_log_prob - log_prob) * scale;
        if (ratio - 1.0).abs() > coeffs.clip {
            terms.clip_fraction += scale;
        }

        if let Some(grad) = grad.as_deref_mut() {
            for h in 0..heads {
                let base = h * levels;
                let h_ent = -lp[base..base + levels].iter().map(|&l| l.exp() * l).sum::<f64>();
                for j in 0..levels {
                    let p = lp[base + j].exp();
                    let onehot = (j == s.actions[h]) as u8 as f64;
                    // d logp / d z_j = 1[j = a] - p_j, d H / d z_j = -p_j (log p_j + H)
                    let d_logp = onehot - p;
                    let d_ent = -p * (lp[base + j] + h_ent);
                    g_out[base + j] = scale * (-d_surr_d_logp * d_logp - coeffs.entropy_coeff * d_ent);
                }
            }
            g_out[split] = scale * 2.0 * coeffs.value_coeff * v_err;
            mlp.backward(params, &tape, &g_out, grad);
        }
    }
    terms.total = terms.policy + coeffs.value_coeff * terms.value - coeffs.entropy_coeff * terms.entropy;
    terms
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Rescales `grad` so its Euclidean norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Mean `old - new` log-probability over the last epoch.
    pub kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("non-finite loss in epoch {epoch}; parameters rolled back")]
pub struct UpdateAborted {
    pub epoch: usize,
}

/// Minibatch PPO epochs over `samples`. Advantages are used as given. If any
/// minibatch produces a non-finite loss or gradient, the network and
/// optimizer are restored to their state on entry.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut PolicyNet,
    adam: &mut Adam,
    samples: &[Sample],
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats, UpdateAborted> {
    let snapshot = (net.params.clone(), adam.clone());
    let coeffs = LossCoeffs::from(cfg);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grad = vec![0.0; net.params.len()];
    let mut stats = UpdateStats::default();
    let mut last_kl = 0.0;
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut epoch_kl = 0.0;
        for chunk in order.chunks(cfg.minibatch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let terms = ppo_loss(net, &net.params, samples, chunk, coeffs, Some(&mut grad));
            if !terms.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                net.params = snapshot.0;
                *adam = snapshot.1;
                return Err(UpdateAborted { epoch });
            }
            let norm = clip_global_norm(&mut grad, cfg.max_grad_norm);
            adam.step(&mut net.params, &grad, cfg.lr);
            let w = chunk.len() as f64 / samples.len() as f64;
            epoch_kl += terms.kl * w;
            stats.policy_loss += terms.policy;
            stats.value_loss += terms.value;
            stats.entropy += terms.entropy;
            stats.clip_fraction += terms.clip_fraction;
            stats.grad_norm += norm;
            stats.minibatches += 1;
        }
        last_kl = epoch_kl;
    }
    let n = stats.minibatches.max(1) as f64;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    stats.clip_fraction /= n;
    stats.grad_norm /= n;
    stats.kl = last_kl;
    Ok(stats)
}
