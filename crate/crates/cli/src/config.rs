use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wipelab_core::curriculum::{AdvisorKind, CurriculumConfig};
use wipelab_core::learner::TrainConfig;
use wipelab_core::reward::{Formulation, RewardFn, RewardWeights, DEFAULT_RING_COUNT};
use wipelab_core::sim::RandomizationSpec;

use crate::error::{CliError, Result};

/// The three comparison arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    NonBoundedReward,
    BoundedReward,
    BoundedLlmCurr,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::NonBoundedReward, Preset::BoundedReward, Preset::BoundedLlmCurr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::NonBoundedReward => "non-bounded-reward",
            Preset::BoundedReward => "bounded-reward",
            Preset::BoundedLlmCurr => "bounded-llm-curr",
        }
    }
}

/// Everything that determines a training run. Written to `config.json`
/// before the first step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub preset: Preset,
    pub train: TrainConfig,
    pub curriculum: CurriculumConfig,
    /// Base weights. The non-bounded preset rescales the terminal reward.
    pub weights: RewardWeights,
    pub randomization: RandomizationSpec,
    pub seeds: Vec<u64>,
    pub ring_count: usize,
    /// Completion steps the non-bounded terminal reward is matched against.
    pub expected_completion_steps: f64,
    /// Episodes in the final evaluation of each seed.
    pub final_eval_episodes: usize,
    /// Offset between a training seed and its evaluation sampler seed.
    pub eval_seed_offset: u64,
    pub save_traces: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Preset::BoundedReward,
            train: TrainConfig::default(),
            curriculum: CurriculumConfig::default(),
            weights: RewardWeights::default(),
            randomization: RandomizationSpec::default(),
            seeds: vec![0, 1, 2, 3, 4],
            ring_count: DEFAULT_RING_COUNT,
            expected_completion_steps: 25.0,
            final_eval_episodes: 50,
            eval_seed_offset: 1_000_000,
            save_traces: true,
        }
    }
}

/// Resolved per-arm settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub reward_fn: RewardFn,
    pub weights: RewardWeights,
    pub advisor: AdvisorKind,
}

impl RunConfig {
    pub fn for_preset(preset: Preset) -> Self {
        Self {
            preset,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.curriculum.validate()?;
        self.weights.validate()?;
        self.randomization.validate()?;
        if self.seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(CliError::Config("seeds must be distinct".into()));
        }
        if self.ring_count == 0 {
            return Err(CliError::Config("ring_count must be positive".into()));
        }
        if !(self.expected_completion_steps.is_finite() && self.expected_completion_steps > 0.0) {
            return Err(CliError::Config("expected_completion_steps must be positive".into()));
        }
        if self.final_eval_episodes == 0 {
            return Err(CliError::Config("final_eval_episodes must be at least 1".into()));
        }
        if self.preset == Preset::BoundedLlmCurr && self.curriculum.advisor == AdvisorKind::None {
            return Err(CliError::Config("bounded-llm-curr needs an advisor (rule or remote)".into()));
        }
        Ok(())
    }

    pub fn arm(&self) -> Arm {
        let ring = |f| RewardFn {
            formulation: f,
            ring_count: self.ring_count,
        };
        match self.preset {
            Preset::NonBoundedReward => Arm {
                reward_fn: ring(Formulation::Naive),
                weights: self
                    .weights
                    .with_terminal_reward(self.weights.wq_max() * self.expected_completion_steps),
                advisor: AdvisorKind::None,
            },
            Preset::BoundedReward => Arm {
                reward_fn: ring(Formulation::Bounded),
                weights: self.weights,
                advisor: AdvisorKind::None,
            },
            Preset::BoundedLlmCurr => Arm {
                reward_fn: ring(Formulation::Bounded),
                weights: self.weights,
                advisor: self.curriculum.advisor,
            },
        }
    }

    /// Config of the single-seed run stored in each seed directory.
    pub fn for_seed(&self, seed: u64) -> RunConfig {
        let mut c = self.clone();
        c.seeds = vec![seed];
        c.train.seed = seed;
        c
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }
}
