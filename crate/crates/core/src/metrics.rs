//! Evaluation: traces, IAE, force statistics and failure scene summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::learner::{rollout, PolicyParams};
use crate::reward::{RewardFn, RewardWeights};
use crate::sim::{sample_environment, RandomizationSpec, SimState, StepInfo, TerminalStatus, WorldConfig};
use crate::{Error, Result};

pub const DEFAULT_EVAL_EPISODES: usize = 50;
pub const PERCENTILES: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];
/// Share of contact steps above which a timed-out episode counts as perpetual wiping.
pub const PERPETUAL_CONTACT_FRACTION: f64 = 0.5;

/// One finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub config: WorldConfig,
    pub steps: Vec<StepInfo>,
    pub rewards: Vec<f64>,
    pub status: TerminalStatus,
    pub completion_steps: Option<u32>,
    pub final_state: SimState,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Normal force on the first contact step.
    pub fn landing_force(&self) -> Option<f64> {
        self.steps.iter().find_map(|s| s.landing_force)
    }

    /// Normal forces on contact steps after landing.
    pub fn nav_forces(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps
            .iter()
            .filter(|s| s.in_contact && !s.landing_event())
            .map(|s| s.f_z)
    }

    pub fn iae(&self, mu: f64) -> f64 {
        iae(&self.steps, mu)
    }

    /// Ran the whole horizon without completing; excluded from force statistics.
    pub fn excluded_from_force_stats(&self) -> bool {
        self.status == TerminalStatus::TimedOut
    }
}

/// Sum of `|f_z - mu|` over contact steps, one control step per sample.
pub fn iae(steps: &[StepInfo], mu: f64) -> f64 {
    steps.iter().filter(|s| s.in_contact).map(|s| (s.f_z - mu).abs()).sum()
}

/// Linear-interpolation percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn mean_std(v: &[f64]) -> Option<(f64, f64)> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    Some((m, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub collisions: usize,
    pub timeouts: usize,
    /// Over completed episodes.
    pub mean_completion_steps: Option<f64>,
    /// Over completed episodes.
    pub iae_mean: Option<f64>,
    pub nav_force_mean: Option<f64>,
    pub nav_force_std: Option<f64>,
    pub landing_force_mean: Option<f64>,
    pub landing_force_std: Option<f64>,
    /// Navigational force at the 5th, 25th, 50th, 75th and 95th percentiles.
    pub force_percentiles: Option<[f64; 5]>,
    pub excluded_episode_count: usize,
    pub mean_return: f64,
}

impl EvalReport {
    pub fn from_traces(traces: &[EpisodeTrace], mu: f64) -> Self {
        let n = traces.len();
        let completed: Vec<&EpisodeTrace> = traces
            .iter()
            .filter(|t| t.status == TerminalStatus::Completed)
            .collect();
        let count = |s| traces.iter().filter(|t| t.status == s).count();
        let steps: Vec<f64> = completed.iter().filter_map(|t| t.completion_steps.map(f64::from)).collect();
        let iaes: Vec<f64> = completed.iter().map(|t| t.iae(mu)).collect();

        let included: Vec<&EpisodeTrace> = traces.iter().filter(|t| !t.excluded_from_force_stats()).collect();
        let mut nav: Vec<f64> = included.iter().flat_map(|t| t.nav_forces()).collect();
        nav.sort_by(f64::total_cmp);
        let landing: Vec<f64> = included.iter().filter_map(|t| t.landing_force()).collect();
        let nav_stats = mean_std(&nav);
        let landing_stats = mean_std(&landing);
        let force_percentiles = (!nav.is_empty()).then(|| PERCENTILES.map(|q| percentile(&nav, q)));

        Self {
            n_episodes: n,
            successes: completed.len(),
            success_rate: if n == 0 { 0.0 } else { completed.len() as f64 / n as f64 },
            collisions: count(TerminalStatus::Collided),
            timeouts: count(TerminalStatus::TimedOut),
            mean_completion_steps: mean_std(&steps).map(|s| s.0),
            iae_mean: mean_std(&iaes).map(|s| s.0),
            nav_force_mean: nav_stats.map(|s| s.0),
            nav_force_std: nav_stats.map(|s| s.1),
            landing_force_mean: landing_stats.map(|s| s.0),
            landing_force_std: landing_stats.map(|s| s.1),
            force_percentiles,
            excluded_episode_count: n - included.len(),
            mean_return: if n == 0 {
                0.0
            } else {
                traces.iter().map(EpisodeTrace::total_reward).sum::<f64>() / n as f64
            },
        }
    }

    pub fn nav_force_variance(&self) -> Option<f64> {
        self.nav_force_std.map(|s| s * s)
    }
}

/// Deterministic stream of randomized environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSampler {
    pub spec: RandomizationSpec,
    pub seed: u64,
}

impl EnvSampler {
    /// The `i`th `(config, reset seed)` pair of this sampler.
    pub fn episodes(&self, n: usize) -> Vec<(WorldConfig, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n)
            .map(|_| {
                let c = sample_environment(&mut rng, &self.spec);
                let s = rng.random();
                (c, s)
            })
            .collect()
    }
}

/// Runs `n` deterministic-policy episodes on freshly sampled environments.
pub fn evaluate(
    policy: &PolicyParams,
    sampler: &EnvSampler,
    n: usize,
    reward_fn: &RewardFn,
    weights: &RewardWeights,
) -> Result<(EvalReport, Vec<EpisodeTrace>)> {
    if n == 0 {
        return Err(Error::usage("evaluation needs at least one episode"));
    }
    let traces = sampler
        .episodes(n)
        .into_iter()
        .map(|(config, seed)| rollout(policy, &config, seed, reward_fn, weights, true))
        .collect::<Result<Vec<_>>>()?;
    Ok((EvalReport::from_traces(&traces, weights.mu), traces))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureLabel {
    NoContact,
    LostContact,
    NearEndpointIncomplete,
    Collision,
    PerpetualWiping,
    /// Not a failure; keeps the labeling total over terminal states.
    Completed,
}

impl FailureLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NoContact => "no-contact",
            Self::LostContact => "lost-contact",
            Self::NearEndpointIncomplete => "near-endpoint-incomplete",
            Self::Collision => "collision",
            Self::PerpetualWiping => "perpetual-wiping",
            Self::Completed => "completed",
        }
    }
}

/// Structured description of an episode's final scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub label: FailureLabel,
    pub status: TerminalStatus,
    pub ever_contacted: bool,
    pub waypoints_wiped_count: usize,
    pub waypoint_count: usize,
    pub distance_to_next_waypoint: Option<f64>,
    pub final_f_z: f64,
    pub collided: bool,
    pub contact_fraction: f64,
}

pub fn scene_summary(state: &SimState, config: &WorldConfig) -> Result<SceneSummary> {
    let status = state
        .status
        .ok_or_else(|| Error::usage("scene summary needs a terminal state"))?;
    let p = state.ee_position;
    let distance = state.next_waypoint().map(|i| {
        let w = config.waypoints[i];
        (w[0] - p[0]).hypot(w[1] - p[1])
    });
    let contact_fraction = if state.step_index == 0 {
        0.0
    } else {
        f64::from(state.contact_steps) / f64::from(state.step_index)
    };
    let label = match status {
        TerminalStatus::Collided => FailureLabel::Collision,
        TerminalStatus::Completed => FailureLabel::Completed,
        TerminalStatus::TimedOut => {
            if !state.landed {
                FailureLabel::NoContact
            } else if distance.is_some_and(|d| d < 2.0 * config.wipe_radius) {
                FailureLabel::NearEndpointIncomplete
            } else if contact_fraction >= PERPETUAL_CONTACT_FRACTION {
                FailureLabel::PerpetualWiping
            } else {
                FailureLabel::LostContact
            }
        }
    };
    Ok(SceneSummary {
        label,
        status,
        ever_contacted: state.landed,
        waypoints_wiped_count: state.wiped_count(),
        waypoint_count: state.waypoints_wiped.len(),
        distance_to_next_waypoint: distance,
        final_f_z: state.normal_force,
        collided: state.collided,
        contact_fraction,
    })
}
