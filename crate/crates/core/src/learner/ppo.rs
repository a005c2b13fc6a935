use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::policy::{ppo_loss, Batch, LossCoefficients, LossParts, PolicyParams};
use crate::{Error, Result};

/// An episodic environment over normalized continuous actions.
pub trait Env {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    /// Starts a new episode and returns its first observation.
    fn reset(&mut self) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: Option<EpisodeEnd>,
}

/// How an episode finished. A truncated episode is bootstrapped from the
/// value of its final observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeEnd {
    pub truncated: bool,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub total_steps: u64,
    pub rollout_length: usize,
    pub minibatches: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    /// Multiplies environment rewards before advantage estimation.
    pub reward_scale: f64,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_steps: 200_000,
            rollout_length: 2000,
            minibatches: 25,
            epochs: 10,
            learning_rate: 3e-4,
            gamma: 0.99,
            gae_lambda: 0.95,
            entropy_coef: 0.0,
            clip: 0.2,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            reward_scale: 0.01,
            hidden: vec![64, 64],
            init_log_std: -0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if self.rollout_length == 0 || self.total_steps < self.rollout_length as u64 {
            return bad("total_steps must be at least rollout_length > 0");
        }
        if self.minibatches == 0 || self.minibatches > self.rollout_length {
            return bad("minibatches must lie in [1, rollout_length]");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        let positive = [
            ("learning_rate", self.learning_rate),
            ("clip", self.clip),
            ("max_grad_norm", self.max_grad_norm),
            ("reward_scale", self.reward_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be finite and positive")));
            }
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0 && self.init_log_std.is_finite()) {
            return bad("entropy_coef and value_coef must be non-negative");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty with positive widths");
        }
        Ok(())
    }

    fn coefficients(&self) -> LossCoefficients {
        LossCoefficients {
            clip: self.clip,
            value: self.value_coef,
            entropy: self.entropy_coef,
        }
    }
}

/// Summary of one `train_steps` call.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutStats {
    pub env_steps: u64,
    pub updates: u64,
    pub episodes: u64,
    pub successes: u64,
    /// Mean unscaled return of episodes finished during the call.
    pub mean_episode_return: f64,
    pub mean_episode_length: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Generalized advantage estimates.
///
/// `next_values[t]` is the value of the state after step `t` (zero when the
/// episode terminated there) and `cut[t]` marks where the recursion stops: an
/// episode boundary or the end of the rollout.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    cut: &[bool],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        if cut[t] {
            running = 0.0;
        }
        let delta = rewards[t] + gamma * next_values[t] - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    adv
}

/// On-policy trainer. All learner state lives here, so repeated
/// `train_steps` calls continue one run without resetting anything.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trainer<E> {
    pub policy: PolicyParams,
    pub env: E,
    config: TrainConfig,
    adam: Adam,
    rng: ChaCha8Rng,
    obs: Option<Vec<f64>>,
    episode_return: f64,
    episode_length: u64,
    env_steps: u64,
}

impl<E: Env> Trainer<E> {
    pub fn new(env: E, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let policy = PolicyParams::new(env.obs_dim(), env.act_dim(), &config.hidden, config.init_log_std, &mut rng);
        Self::with_policy(env, config, policy)
    }

    pub fn with_policy(env: E, config: TrainConfig, policy: PolicyParams) -> Result<Self> {
        config.validate()?;
        if policy.obs_dim() != env.obs_dim() || policy.act_dim() != env.act_dim() {
            return Err(Error::Shape {
                expected: env.obs_dim(),
                actual: policy.obs_dim(),
            });
        }
        let adam = Adam::new(policy.param_count(), config.learning_rate);
        // Separate stream from the initializer so a loaded policy trains the same way.
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5_eed0_fac7);
        Ok(Self {
            policy,
            env,
            config,
            adam,
            rng,
            obs: None,
            episode_return: 0.0,
            episode_length: 0,
            env_steps: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Environment steps consumed so far.
    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    /// Collects `n_steps / rollout_length` rollouts, updating after each.
    /// `n_steps = 0` is a no-op.
    pub fn train_steps(&mut self, n_steps: u64) -> Result<RolloutStats> {
        if n_steps == 0 {
            return Ok(RolloutStats::default());
        }
        let len = self.config.rollout_length as u64;
        if n_steps < len {
            return Err(Error::usage(format!(
                "n_steps {n_steps} is below rollout_length {len}"
            )));
        }
        let mut stats = RolloutStats::default();
        let mut returns_sum = 0.0;
        let mut length_sum = 0.0;
        let mut loss_acc = LossParts::default();
        for _ in 0..n_steps / len {
            let buf = self.collect(&mut stats, &mut returns_sum, &mut length_sum)?;
            let parts = self.update(buf)?;
            loss_acc.policy += parts.policy;
            loss_acc.value += parts.value;
            loss_acc.entropy += parts.entropy;
            loss_acc.approx_kl += parts.approx_kl;
            loss_acc.clip_fraction += parts.clip_fraction;
            stats.updates += 1;
        }
        let u = stats.updates as f64;
        stats.policy_loss = loss_acc.policy / u;
        stats.value_loss = loss_acc.value / u;
        stats.entropy = loss_acc.entropy / u;
        stats.approx_kl = loss_acc.approx_kl / u;
        stats.clip_fraction = loss_acc.clip_fraction / u;
        if stats.episodes > 0 {
            stats.mean_episode_return = returns_sum / stats.episodes as f64;
            stats.mean_episode_length = length_sum / stats.episodes as f64;
        }
        Ok(stats)
    }

    fn collect(&mut self, stats: &mut RolloutStats, returns_sum: &mut f64, length_sum: &mut f64) -> Result<Rollout> {
        let n = self.config.rollout_length;
        let od = self.env.obs_dim();
        let ad = self.env.act_dim();
        let mut obs = Array2::zeros((n, od));
        let mut actions = Array2::zeros((n, ad));
        let mut log_prob = vec![0.0; n];
        let mut rewards = vec![0.0; n];
        let mut values = vec![0.0; n];
        let mut next_values = vec![0.0; n];
        let mut cut = vec![false; n];
        for t in 0..n {
            let o = match self.obs.take() {
                Some(o) => o,
                None => self.env.reset()?,
            };
            let mean = self.policy.mean(&o)?;
            let u = self.policy.sample(&o, Some(&mut self.rng))?;
            log_prob[t] = self.policy.log_prob(&mean, &u);
            values[t] = self.policy.value(&o)?;
            let s = self.env.step(&u)?;
            if !s.reward.is_finite() {
                return Err(Error::NonFinite(format!("reward at env step {}", self.env_steps)));
            }
            obs.row_mut(t).assign(&Array1::from(o));
            actions.row_mut(t).assign(&Array1::from(u));
            rewards[t] = s.reward * self.config.reward_scale;
            self.env_steps += 1;
            stats.env_steps += 1;
            self.episode_return += s.reward;
            self.episode_length += 1;
            match s.done {
                Some(end) => {
                    next_values[t] = if end.truncated { self.policy.value(&s.obs)? } else { 0.0 };
                    cut[t] = true;
                    stats.episodes += 1;
                    stats.successes += u64::from(end.success);
                    *returns_sum += self.episode_return;
                    *length_sum += self.episode_length as f64;
                    self.episode_return = 0.0;
                    self.episode_length = 0;
                }
                None => {
                    if t + 1 == n {
                        next_values[t] = self.policy.value(&s.obs)?;
                        cut[t] = true;
                    }
                    self.obs = Some(s.obs);
                }
            }
        }
        for t in 0..n - 1 {
            if !cut[t] {
                next_values[t] = values[t + 1];
            }
        }
        let adv = gae(&rewards, &values, &next_values, &cut, self.config.gamma, self.config.gae_lambda);
        let returns: Vec<f64> = adv.iter().zip(&values).map(|(a, v)| a + v).collect();
        Ok(Rollout {
            obs,
            actions,
            log_prob: Array1::from(log_prob),
            advantages: Array1::from(adv),
            returns: Array1::from(returns),
        })
    }

    fn update(&mut self, r: Rollout) -> Result<LossParts> {
        let n = r.obs.nrows();
        let mb = n / self.config.minibatches;
        let coef = self.config.coefficients();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut acc = LossParts::default();
        let mut count = 0.0;
        for epoch in 0..self.config.epochs {
            idx.shuffle(&mut self.rng);
            for (k, chunk) in idx.chunks(mb).enumerate() {
                if chunk.len() < mb {
                    continue;
                }
                let batch = r.select(chunk);
                let (parts, grads) = ppo_loss(&self.policy, &batch, &coef);
                if !parts.total.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss at epoch {epoch} minibatch {k}: policy {} value {} entropy {} (env step {})",
                        parts.policy, parts.value, parts.entropy, self.env_steps
                    )));
                }
                let mut g = grads.to_flat();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > self.config.max_grad_norm {
                    let s = self.config.max_grad_norm / norm;
                    g.iter_mut().for_each(|v| *v *= s);
                }
                let mut p = self.policy.to_flat();
                self.adam.step(&mut p, &g);
                self.policy.set_flat(&p)?;
                acc.policy += parts.policy;
                acc.value += parts.value;
                acc.entropy += parts.entropy;
                acc.approx_kl += parts.approx_kl;
                acc.clip_fraction += parts.clip_fraction;
                count += 1.0;
            }
        }
        if !self.policy.is_finite() {
            return Err(Error::NonFinite("policy parameters after update".into()));
        }
        acc.policy /= count;
        acc.value /= count;
        acc.entropy /= count;
        acc.approx_kl /= count;
        acc.clip_fraction /= count;
        Ok(acc)
    }
}

struct Rollout {
    obs: Array2<f64>,
    actions: Array2<f64>,
    log_prob: Array1<f64>,
    advantages: Array1<f64>,
    returns: Array1<f64>,
}

impl Rollout {
    /// Minibatch with advantages normalized to zero mean, unit variance.
    fn select(&self, idx: &[usize]) -> Batch {
        let obs = self.obs.select(ndarray::Axis(0), idx);
        let actions = self.actions.select(ndarray::Axis(0), idx);
        let old_log_prob = self.log_prob.select(ndarray::Axis(0), idx);
        let mut advantages = self.advantages.select(ndarray::Axis(0), idx);
        let returns = self.returns.select(ndarray::Axis(0), idx);
        let m = advantages.mean().unwrap_or(0.0);
        let sd = advantages.std(0.0);
        advantages.mapv_inplace(|a| (a - m) / (sd + 1e-8));
        Batch {
            obs,
            actions,
            old_log_prob,
            advantages,
            returns,
        }
    }
}
