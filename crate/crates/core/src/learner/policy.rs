use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::sim::{Action, ActionBounds, Observation};
use crate::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Gaussian actor plus state-value critic.
///
/// The actor maps observations to the mean of a diagonal Gaussian over
/// normalized actions in `[-1, 1]^6`; `log_std` is state independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub critic: Mlp,
    pub log_std: Array1<f64>,
}

impl PolicyParams {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        init_log_std: f64,
        rng: &mut R,
    ) -> Self {
        let actor = Mlp::new(&sizes(obs_dim, hidden, act_dim), 0.01, rng);
        let critic = Mlp::new(&sizes(obs_dim, hidden, 1), 1.0, rng);
        Self {
            actor,
            critic,
            log_std: Array1::from_elem(act_dim, init_log_std),
        }
    }

    pub fn zeros(obs_dim: usize, act_dim: usize, hidden: &[usize]) -> Self {
        Self {
            actor: Mlp::zeros(&sizes(obs_dim, hidden, act_dim)),
            critic: Mlp::zeros(&sizes(obs_dim, hidden, 1)),
            log_std: Array1::zeros(act_dim),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.actor.layers[..self.actor.layers.len() - 1]
            .iter()
            .map(|l| l.w.ncols())
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.actor.param_count() + self.log_std.len() + self.critic.param_count()
    }

    /// Parameters in the order actor, log-std, critic.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        self.actor.write_flat(&mut v);
        v.extend(self.log_std.iter());
        self.critic.write_flat(&mut v);
        v
    }

    pub fn set_flat(&mut self, src: &[f64]) -> Result<()> {
        if src.len() != self.param_count() {
            return Err(Error::Shape {
                expected: self.param_count(),
                actual: src.len(),
            });
        }
        let mut k = self.actor.read_flat(src);
        for v in self.log_std.iter_mut() {
            *v = src[k];
            k += 1;
        }
        self.critic.read_flat(&src[k..]);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.obs_dim() {
            return Err(Error::Shape {
                expected: self.obs_dim(),
                actual: obs.len(),
            });
        }
        Ok(())
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_obs(obs)?;
        Ok(self.actor.predict(&row(obs)).into_raw_vec_and_offset().0)
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        self.check_obs(obs)?;
        Ok(self.critic.predict(&row(obs))[[0, 0]])
    }

    pub fn values(&self, obs: &Array2<f64>) -> Array1<f64> {
        self.critic.predict(obs).column(0).to_owned()
    }

    /// Normalized action before clamping: the mean, or a Gaussian sample.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: Option<&mut R>) -> Result<Vec<f64>> {
        let mut u = self.mean(obs)?;
        if let Some(rng) = rng {
            for (x, ls) in u.iter_mut().zip(self.log_std.iter()) {
                *x += ls.exp() * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(u)
    }

    pub fn log_prob(&self, mean: &[f64], u: &[f64]) -> f64 {
        mean.iter()
            .zip(u)
            .zip(self.log_std.iter())
            .map(|((m, x), ls)| {
                let z = (x - m) / ls.exp();
                -0.5 * z * z - ls - HALF_LN_2PI
            })
            .sum()
    }

    /// Differential entropy of the action distribution.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
    }

    pub fn act_deterministic(&self, obs: &Observation, bounds: &ActionBounds) -> Result<Action> {
        let u = self.mean(obs.as_slice())?;
        Action::from_normalized(&u, bounds)
    }

    pub fn act_stochastic<R: Rng + ?Sized>(
        &self,
        obs: &Observation,
        bounds: &ActionBounds,
        rng: &mut R,
    ) -> Result<Action> {
        let u = self.sample(obs.as_slice(), Some(rng))?;
        Action::from_normalized(&u, bounds)
    }
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

fn row(x: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row shape")
}

/// One minibatch of on-policy samples.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Array2<f64>,
    /// Pre-clamp normalized actions.
    pub actions: Array2<f64>,
    pub old_log_prob: Array1<f64>,
    pub advantages: Array1<f64>,
    pub returns: Array1<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossCoefficients {
    pub clip: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Clipped-surrogate loss and its exact gradient.
///
/// `loss = -mean(min(r A, clip(r) A)) + c_v mean((V - R)^2) - c_e H`
pub fn ppo_loss(p: &PolicyParams, b: &Batch, c: &LossCoefficients) -> (LossParts, PolicyParams) {
    let n = b.obs.nrows() as f64;
    let (mean, actor_cache) = p.actor.forward(&b.obs);
    let (value, critic_cache) = p.critic.forward(&b.obs);
    let std = p.log_std.mapv(f64::exp);

    // z = (u - m) / std, per element
    let mut z = &b.actions - &mean;
    z /= &std;
    let log_prob = z.mapv(|v| -0.5 * v * v).sum_axis(Axis(1)) - (p.log_std.sum() + HALF_LN_2PI * p.act_dim() as f64);

    let mut policy_loss = 0.0;
    let mut d_logp = Array1::<f64>::zeros(b.obs.nrows());
    let mut clipped = 0usize;
    let mut kl = 0.0;
    for i in 0..b.obs.nrows() {
        let log_ratio = log_prob[i] - b.old_log_prob[i];
        let ratio = log_ratio.exp();
        let a = b.advantages[i];
        let unclipped = ratio * a;
        let clipped_val = ratio.clamp(1.0 - c.clip, 1.0 + c.clip) * a;
        if unclipped <= clipped_val {
            policy_loss -= unclipped;
            d_logp[i] = -unclipped / n;
        } else {
            policy_loss -= clipped_val;
        }
        if (ratio - 1.0).abs() > c.clip {
            clipped += 1;
        }
        kl += (ratio - 1.0) - log_ratio;
    }
    policy_loss /= n;

    let err = &value.column(0) - &b.returns;
    let value_loss = err.mapv(|e| e * e).sum() / n;
    let entropy = p.entropy();
    let total = policy_loss + c.value * value_loss - c.entropy * entropy;

    // d logp / d m = z / std; d logp / d log_std = z^2 - 1
    let d_logp_col = d_logp.clone().insert_axis(Axis(1));
    let mut d_mean = &z / &std;
    d_mean *= &d_logp_col;
    let d_log_std = (z.mapv(|v| v * v - 1.0) * &d_logp_col).sum_axis(Axis(0)) - c.entropy;
    let d_value = (err.mapv(|e| 2.0 * c.value * e / n)).insert_axis(Axis(1));

    let grads = PolicyParams {
        actor: p.actor.backward(&actor_cache, &d_mean),
        critic: p.critic.backward(&critic_cache, &d_value),
        log_std: d_log_std,
    };
    let parts = LossParts {
        total,
        policy: policy_loss,
        value: value_loss,
        entropy,
        approx_kl: kl / n,
        clip_fraction: clipped as f64 / n,
    };
    (parts, grads)
}
