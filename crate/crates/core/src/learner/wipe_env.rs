use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::PolicyParams;
use super::ppo::{Env, EnvStep, EpisodeEnd};
use crate::metrics::EpisodeTrace;
use crate::reward::{EpisodeReward, RewardFn, RewardWeights};
use crate::sim::{self, observation_len, sample_environment, Action, RandomizationSpec, SimState, TerminalStatus, WorldConfig};
use crate::Result;

/// Domain-randomized wiping task as a learner environment.
///
/// Weights are read at every step, so swapping them between `train_steps`
/// calls takes effect at the next rollout without resetting anything else.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WipeEnv {
    pub randomization: RandomizationSpec,
    pub reward_fn: RewardFn,
    pub weights: RewardWeights,
    rng: ChaCha8Rng,
    episode: Option<Episode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Episode {
    config: WorldConfig,
    state: SimState,
    reward: EpisodeReward,
}

impl WipeEnv {
    pub fn new(randomization: RandomizationSpec, reward_fn: RewardFn, weights: RewardWeights, seed: u64) -> Result<Self> {
        randomization.validate()?;
        weights.validate()?;
        Ok(Self {
            randomization,
            reward_fn,
            weights,
            rng: ChaCha8Rng::seed_from_u64(seed),
            episode: None,
        })
    }
}

impl Env for WipeEnv {
    fn obs_dim(&self) -> usize {
        observation_len(self.randomization.waypoint_count)
    }

    fn act_dim(&self) -> usize {
        Action::DIM
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let config = sample_environment(&mut self.rng, &self.randomization);
        let (state, obs) = sim::reset(&config, self.rng.random())?;
        let p = state.ee_position;
        let reward = self.reward_fn.episode(&config.waypoints, [p[0], p[1]])?;
        self.episode = Some(Episode { config, state, reward });
        Ok(obs.0)
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if self.episode.is_none() {
            self.reset()?;
        }
        let ep = self.episode.as_mut().expect("episode started above");
        let a = Action::from_normalized(action, &ep.config.action_bounds)?;
        let out = sim::step(&ep.state, &a, &ep.config)?;
        let reward = ep.reward.reward(&out.info, &ep.config.waypoints, &self.weights);
        let done = out.state.status.map(|s| EpisodeEnd {
            truncated: s == TerminalStatus::TimedOut,
            success: s == TerminalStatus::Completed,
        });
        ep.state = out.state;
        if done.is_some() {
            self.episode = None;
        }
        Ok(EnvStep {
            obs: out.observation.0,
            reward,
            done,
        })
    }
}

/// Runs one full episode on `config`.
///
/// Stochastic mode draws its action noise from a stream seeded by `seed`, so
/// the trace is a pure function of the arguments either way.
pub fn rollout(
    policy: &PolicyParams,
    config: &WorldConfig,
    seed: u64,
    reward_fn: &RewardFn,
    weights: &RewardWeights,
    deterministic: bool,
) -> Result<EpisodeTrace> {
    let (mut state, mut obs) = sim::reset(config, seed)?;
    let p = state.ee_position;
    let mut reward = reward_fn.episode(&config.waypoints, [p[0], p[1]])?;
    let mut noise = ChaCha8Rng::seed_from_u64(seed.rotate_left(17) ^ 0xa5a5);
    let mut steps = Vec::with_capacity(config.horizon as usize);
    let mut rewards = Vec::with_capacity(config.horizon as usize);
    loop {
        let a = if deterministic {
            policy.act_deterministic(&obs, &config.action_bounds)?
        } else {
            policy.act_stochastic(&obs, &config.action_bounds, &mut noise)?
        };
        let out = sim::step(&state, &a, config)?;
        rewards.push(reward.reward(&out.info, &config.waypoints, weights));
        steps.push(out.info);
        state = out.state;
        obs = out.observation;
        if let Some(status) = state.status {
            let completion_steps = (status == TerminalStatus::Completed).then_some(state.step_index);
            return Ok(EpisodeTrace {
                config: config.clone(),
                steps,
                rewards,
                status,
                completion_steps,
                final_state: state,
            });
        }
    }
}
