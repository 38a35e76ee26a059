use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Adam, Mlp, Trace};
use crate::craftworld::Action;

pub const ACTION_COUNT: usize = Action::COUNT;

/// PPO settings, loaded from the `[ppo]` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoHyperparams {
    pub learning_rate: f64,
    pub update_epochs: usize,
    pub gamma: f64,
    pub adam_epsilon: f64,
    pub clip_ratio: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub horizon: usize,
    pub minibatch_count: usize,
    /// Width of both hidden layers in the actor and the critic.
    pub hidden_width: usize,
    /// Per-network gradient norm cap; 0 disables it.
    pub max_grad_norm: f64,
}

impl Default for PpoHyperparams {
    fn default() -> Self {
        PpoHyperparams {
            learning_rate: 7e-4,
            update_epochs: 16,
            gamma: 0.97,
            adam_epsilon: 1e-8,
            clip_ratio: 0.1,
            gae_lambda: 0.95,
            entropy_coef: 0.01,
            value_coef: 0.5,
            horizon: 1024,
            minibatch_count: 4,
            hidden_width: 256,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoHyperparams {
    pub fn validate(&self) -> Result<(), String> {
        let checks: [(bool, &str); 9] = [
            (self.clip_ratio > 0.0, "ppo.clip_ratio must be positive"),
            (self.gamma > 0.0 && self.gamma <= 1.0, "ppo.gamma must lie in (0, 1]"),
            ((0.0..=1.0).contains(&self.gae_lambda), "ppo.gae_lambda must lie in [0, 1]"),
            (self.update_epochs >= 1, "ppo.update_epochs must be at least 1"),
            (self.learning_rate > 0.0, "ppo.learning_rate must be positive"),
            (self.horizon >= 1, "ppo.horizon must be at least 1"),
            (self.minibatch_count >= 1 && self.minibatch_count <= self.horizon, "ppo.minibatch_count must lie in [1, horizon]"),
            (self.hidden_width >= 1, "ppo.hidden_width must be at least 1"),
            (self.max_grad_norm >= 0.0 && self.adam_epsilon > 0.0, "ppo.max_grad_norm must be >= 0 and ppo.adam_epsilon > 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(msg.to_string()),
            None => Ok(()),
        }
    }
}

/// Separate actor (17 logits) and critic (1 value) networks.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub actor: Mlp<f32>,
    pub critic: Mlp<f32>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("non-finite logits {0:?}")]
    NonFiniteLogits(Vec<f32>),
    #[error("feature vector has length {got}, network expects {expected}")]
    InputLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActOutput {
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
    pub probs: [f64; ACTION_COUNT],
}

/// Log-softmax in double precision.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

impl PolicyParams {
    pub fn new(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gain = std::f64::consts::SQRT_2;
        PolicyParams {
            actor: Mlp::new(&[input_dim, hidden, hidden, ACTION_COUNT], gain, 0.01, &mut rng),
            critic: Mlp::new(&[input_dim, hidden, hidden, 1], gain, 1.0, &mut rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn all_finite(&self) -> bool {
        self.actor.all_finite() && self.critic.all_finite()
    }

    fn check_len(&self, features: &[f32]) -> Result<(), PolicyError> {
        if features.len() != self.input_dim() {
            return Err(PolicyError::InputLength { expected: self.input_dim(), got: features.len() });
        }
        Ok(())
    }

    /// Action distribution and value estimate.
    pub fn evaluate(&self, features: &[f32]) -> Result<([f64; ACTION_COUNT], f64), PolicyError> {
        self.check_len(features)?;
        let mut t = Trace::default();
        self.actor.forward(features, &mut t);
        let logits = t.output();
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(PolicyError::NonFiniteLogits(logits.to_vec()));
        }
        let lp = log_softmax(&logits.iter().map(|&z| z as f64).collect::<Vec<_>>());
        let mut probs = [0.0; ACTION_COUNT];
        for (p, l) in probs.iter_mut().zip(&lp) {
            *p = l.exp();
        }
        self.critic.forward(features, &mut t);
        Ok((probs, t.output()[0] as f64))
    }

    /// Samples an action from the policy.
    pub fn act<R: Rng + ?Sized>(&self, features: &[f32], rng: &mut R) -> Result<ActOutput, PolicyError> {
        let (probs, value) = self.evaluate(features)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = ACTION_COUNT - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                idx = i;
                break;
            }
        }
        Ok(ActOutput { action: Action::ALL[idx], log_prob: probs[idx].ln(), value, probs })
    }

    /// Most likely action.
    pub fn act_greedy(&self, features: &[f32]) -> Result<ActOutput, PolicyError> {
        let (probs, value) = self.evaluate(features)?;
        let idx = (0..ACTION_COUNT).fold(0, |best, i| if probs[i] > probs[best] { i } else { best });
        Ok(ActOutput { action: Action::ALL[idx], log_prob: probs[idx].ln(), value, probs })
    }
}

/// Generalized advantage estimation. `values` has one more entry than
/// `rewards`: the bootstrap value after the last step.
pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n + 1, "values must include the bootstrap value");
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut next = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        next = delta + gamma * lambda * live * next;
        adv[t] = next;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// `min(ρA, clip(ρ, 1-ε, 1+ε)A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// Derivative of `clipped_surrogate(exp(new - old), A, ε)` with respect to `new`.
pub fn surrogate_grad_log_prob(new_log_prob: f64, old_log_prob: f64, advantage: f64, clip: f64) -> f64 {
    let ratio = (new_log_prob - old_log_prob).exp();
    if ratio * advantage <= ratio.clamp(1.0 - clip, 1.0 + clip) * advantage {
        ratio * advantage
    } else {
        0.0
    }
}

/// One training sample as seen by the loss.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a, T> {
    pub features: &'a [T],
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossCoefs {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl From<&PpoHyperparams> for LossCoefs {
    fn from(hp: &PpoHyperparams) -> Self {
        LossCoefs { clip: hp.clip_ratio, value_coef: hp.value_coef, entropy_coef: hp.entropy_coef }
    }
}

/// Batch means of the loss terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LossTerms {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Mean over the batch of `-surrogate + c_v (v - R)^2 - c_e H`. Gradients are
/// accumulated into `actor_grads` / `critic_grads`.
pub fn ppo_loss_and_grads<T: Float + std::iter::Sum>(
    actor: &Mlp<T>,
    critic: &Mlp<T>,
    batch: &[Sample<'_, T>],
    coefs: LossCoefs,
    actor_grads: &mut Mlp<T>,
    critic_grads: &mut Mlp<T>,
) -> LossTerms {
    let n = batch.len() as f64;
    let mut terms = LossTerms::default();
    let mut at = Trace::default();
    let mut ct = Trace::default();
    let mut d_logits = vec![T::zero(); actor.output_dim()];
    for s in batch {
        actor.forward(s.features, &mut at);
        critic.forward(s.features, &mut ct);
        let logits: Vec<f64> = at.output().iter().map(|z| z.to_f64().unwrap()).collect();
        let lp = log_softmax(&logits);
        let probs: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        let entropy: f64 = -probs.iter().zip(&lp).map(|(p, l)| p * l).sum::<f64>();
        let ratio = (lp[s.action] - s.old_log_prob).exp();
        let surrogate = clipped_surrogate(ratio, s.advantage, coefs.clip);
        let value = ct.output()[0].to_f64().unwrap();
        let err = value - s.ret;

        terms.policy -= surrogate / n;
        terms.value += err * err / n;
        terms.entropy += entropy / n;
        if (ratio - 1.0).abs() > coefs.clip {
            terms.clip_fraction += 1.0 / n;
        }

        let g_logp = -surrogate_grad_log_prob(lp[s.action], s.old_log_prob, s.advantage, coefs.clip);
        for k in 0..probs.len() {
            let onehot = if k == s.action { 1.0 } else { 0.0 };
            let d = g_logp * (onehot - probs[k]) + coefs.entropy_coef * probs[k] * (lp[k] + entropy);
            d_logits[k] = T::from(d / n).unwrap();
        }
        actor.backward(s.features, &at, &d_logits, actor_grads);
        let d_value = [T::from(2.0 * coefs.value_coef * err / n).unwrap()];
        critic.backward(s.features, &ct, &d_value, critic_grads);
    }
    terms.total = terms.policy + coefs.value_coef * terms.value - coefs.entropy_coef * terms.entropy;
    terms
}

/// Loss only, for finite-difference checks.
pub fn ppo_loss<T: Float + std::iter::Sum>(actor: &Mlp<T>, critic: &Mlp<T>, batch: &[Sample<'_, T>], coefs: LossCoefs) -> f64 {
    let mut ag = actor.zeros_like();
    let mut cg = critic.zeros_like();
    ppo_loss_and_grads(actor, critic, batch, coefs, &mut ag, &mut cg).total
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub features: Vec<f32>,
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
    /// Generation index of the sub-goals active at this step.
    pub goal_id: u64,
}

/// On-policy batch plus the value of the state after its last step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rollout {
    pub steps: Vec<RolloutStep>,
    pub bootstrap_value: f64,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn advantages(&self, hp: &PpoHyperparams) -> (Vec<f64>, Vec<f64>) {
        let rewards: Vec<f64> = self.steps.iter().map(|s| s.reward).collect();
        let mut values: Vec<f64> = self.steps.iter().map(|s| s.value).collect();
        values.push(self.bootstrap_value);
        let dones: Vec<bool> = self.steps.iter().map(|s| s.done).collect();
        gae(&rewards, &values, &dones, hp.gamma, hp.gae_lambda)
    }
}

/// Mean 0, std 1; batches of fewer than two samples are left as-is.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-8);
    for a in adv {
        *a = (*a - mean) / std;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PpoError {
    #[error("non-finite loss in epoch {epoch}, minibatch {minibatch}")]
    NonFinite { epoch: usize, minibatch: usize },
    #[error("rollout features have length {got}, network expects {expected}")]
    InputLength { expected: usize, got: usize },
}

fn clip_grad_norm(grads: &mut Mlp<f32>, max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let sq: f64 = grads.arrays().iter().flat_map(|a| a.iter()).map(|&g| (g as f64) * (g as f64)).sum();
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = (max_norm / norm) as f32;
        for a in grads.arrays_mut() {
            for g in a {
                *g *= scale;
            }
        }
    }
}

/// Optimizer state carried across updates.
#[derive(Debug, Clone)]
pub struct PpoTrainer {
    pub hp: PpoHyperparams,
    actor_opt: Adam<f32>,
    critic_opt: Adam<f32>,
    actor_grads: Mlp<f32>,
    critic_grads: Mlp<f32>,
    rng: ChaCha8Rng,
}

impl PpoTrainer {
    pub fn new(params: &PolicyParams, hp: PpoHyperparams, seed: u64) -> Self {
        PpoTrainer {
            actor_opt: Adam::new(&params.actor, hp.learning_rate, hp.adam_epsilon),
            critic_opt: Adam::new(&params.critic, hp.learning_rate, hp.adam_epsilon),
            actor_grads: params.actor.zeros_like(),
            critic_grads: params.critic.zeros_like(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            hp,
        }
    }

    pub fn update(&mut self, params: &mut PolicyParams, rollout: &Rollout) -> Result<PpoStats, PpoError> {
        if let Some(s) = rollout.steps.iter().find(|s| s.features.len() != params.input_dim()) {
            return Err(PpoError::InputLength { expected: params.input_dim(), got: s.features.len() });
        }
        let (mut adv, returns) = rollout.advantages(&self.hp);
        normalize_advantages(&mut adv);
        let coefs = LossCoefs::from(&self.hp);
        let n = rollout.len();
        let chunks = self.hp.minibatch_count.min(n).max(1);
        let mut order: Vec<usize> = (0..n).collect();
        let mut stats = PpoStats::default();
        let mut count = 0.0;
        for epoch in 0..self.hp.update_epochs {
            order.shuffle(&mut self.rng);
            for mb in 0..chunks {
                let idx = &order[mb * n / chunks..(mb + 1) * n / chunks];
                let batch: Vec<Sample<'_, f32>> = idx
                    .iter()
                    .map(|&i| {
                        let s = &rollout.steps[i];
                        Sample {
                            features: &s.features,
                            action: s.action.index(),
                            old_log_prob: s.log_prob,
                            advantage: adv[i],
                            ret: returns[i],
                        }
                    })
                    .collect();
                self.actor_grads.fill_zero();
                self.critic_grads.fill_zero();
                let terms = ppo_loss_and_grads(
                    &params.actor,
                    &params.critic,
                    &batch,
                    coefs,
                    &mut self.actor_grads,
                    &mut self.critic_grads,
                );
                if !terms.total.is_finite() || !self.actor_grads.all_finite() || !self.critic_grads.all_finite() {
                    return Err(PpoError::NonFinite { epoch, minibatch: mb });
                }
                clip_grad_norm(&mut self.actor_grads, self.hp.max_grad_norm);
                clip_grad_norm(&mut self.critic_grads, self.hp.max_grad_norm);
                self.actor_opt.apply(&mut params.actor, &self.actor_grads);
                self.critic_opt.apply(&mut params.critic, &self.critic_grads);
                stats.policy_loss += terms.policy;
                stats.value_loss += terms.value;
                stats.entropy += terms.entropy;
                stats.clip_fraction += terms.clip_fraction;
                count += 1.0;
            }
        }
        stats.policy_loss /= count;
        stats.value_loss /= count;
        stats.entropy /= count;
        stats.clip_fraction /= count;
        Ok(stats)
    }
}
