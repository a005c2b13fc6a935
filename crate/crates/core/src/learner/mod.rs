//! Clipped-surrogate actor-critic learner with generalized advantage
//! estimation, written against `ndarray` with hand-derived gradients.

mod adam;
pub mod checkpoint;
mod mlp;
mod policy;
mod ppo;
mod wipe_env;

pub use adam::Adam;
pub use checkpoint::{decode_policy, encode_policy, load_policy, save_policy, PolicyHeader};
pub use mlp::{Dense, Mlp};
pub use policy::{ppo_loss, Batch, LossCoefficients, LossParts, PolicyParams};
pub use ppo::{gae, Env, EnvStep, EpisodeEnd, RolloutStats, TrainConfig, Trainer};
pub use wipe_env::{rollout, WipeEnv};

/// Trainer over the randomized wiping task.
pub type WipeTrainer = Trainer<WipeEnv>;

impl WipeTrainer {
    /// Trains with the given reward weights; the curriculum changes them
    /// between calls.
    pub fn train_with_weights(
        &mut self,
        weights: &crate::reward::RewardWeights,
        n_steps: u64,
    ) -> crate::Result<RolloutStats> {
        weights.validate()?;
        self.env.weights = *weights;
        self.train_steps(n_steps)
    }
}
