//! Periodic evaluation and advisor-driven reward-weight updates.

mod advisor;
mod remote;

pub use advisor::{
    Advisor, AdvisorOutcome, AdvisorRequest, AdvisorResponse, AuditRecord, Extras, FeasibilityContext,
    IdentityAdvisor, RuleAdvisor, RuleFired, LANDING_SEED,
};
pub use remote::{build_prompt, parse_weight_block, EndpointConfig, RemoteAdvisor, WireFormat};

use serde::{Deserialize, Serialize};

use crate::learner::WipeTrainer;
use crate::metrics::{evaluate, scene_summary, EnvSampler, EvalReport, SceneSummary};
use crate::reward::RewardWeights;
use crate::sim::TerminalStatus;
use crate::{Error, Result};

/// Feasibility ceiling on the terminal reward, in units of the peak quality reward.
pub const WT_CEILING_RATIO: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvisorKind {
    /// Never consults an advisor; plain training with periodic evaluation.
    None,
    /// Consults an advisor that always returns the current weights.
    Identity,
    Rule,
    Remote,
}

/// Per-goal weight aggregates, in the order quality, navigation, smoothness, landing.
pub type Goals = [f64; 4];

pub const GOAL_NAMES: [&str; 4] = ["quality", "navigation", "smoothness", "landing"];

pub fn goal_aggregates(w: &RewardWeights) -> Goals {
    [w.w_con + w.w_force, w.w_way + w.w_final, w.w_ac, w.w_land]
}

/// Goal aggregates of `initial`, with 1 standing in for goals that start at zero.
pub fn goal_reference_for(initial: &RewardWeights) -> Goals {
    goal_aggregates(initial).map(|g| if g > 0.0 { g } else { 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    pub warmup_steps: u64,
    pub cadence_steps: u64,
    pub eval_episodes: usize,
    pub force_dev_threshold: f64,
    pub success_change_threshold: f64,
    pub clip_factor: f64,
    pub advisor: AdvisorKind,
    pub timeout_secs: u64,
    /// Iterations of history shown to the advisor.
    pub history_window: usize,
    pub max_scene_summaries: usize,
    /// Goal aggregates that count as equally weighted. Goals are compared
    /// after dividing by these, since their raw units differ. `None` uses
    /// the weights the run started from.
    pub goal_reference: Option<Goals>,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            warmup_steps: 30_000,
            cadence_steps: 10_000,
            eval_episodes: 50,
            force_dev_threshold: 5.0,
            success_change_threshold: 0.15,
            clip_factor: 2.0,
            advisor: AdvisorKind::Rule,
            timeout_secs: 60,
            history_window: 3,
            max_scene_summaries: 10,
            goal_reference: None,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cadence_steps == 0 {
            return Err(Error::config("cadence_steps must be positive"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes must be at least 1"));
        }
        if !(self.clip_factor > 1.0) {
            return Err(Error::config("clip_factor must exceed 1"));
        }
        if self.goal_reference.is_some_and(|r| r.iter().any(|g| !(g.is_finite() && *g > 0.0))) {
            return Err(Error::config("goal_reference entries must be finite and positive"));
        }
        if !(self.force_dev_threshold > 0.0 && self.success_change_threshold > 0.0) {
            return Err(Error::config("maintenance thresholds must be positive"));
        }
        Ok(())
    }

    /// Fixes an unset goal reference to the aggregates of `initial`.
    pub fn anchored(&self, initial: &RewardWeights) -> Self {
        Self {
            goal_reference: Some(self.reference_or(initial)),
            ..self.clone()
        }
    }

    fn reference_or(&self, initial: &RewardWeights) -> Goals {
        self.goal_reference.unwrap_or_else(|| goal_reference_for(initial))
    }

    /// The goal reference, falling back to the default weights when unset.
    pub fn reference(&self) -> Goals {
        self.reference_or(&RewardWeights::default())
    }
}

/// What happened to the weights at the end of an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum WeightDecision {
    Maintained,
    Unchanged,
    Accepted,
    Clipped,
    Rejected { reason: String },
    AdvisorFailed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: u64,
    pub env_steps: u64,
    pub report: EvalReport,
    /// Weights in effect while this iteration trained and evaluated.
    pub weights: RewardWeights,
    pub analysis: String,
    pub decision: WeightDecision,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsHistory {
    pub entries: Vec<HistoryEntry>,
}

impl MetricsHistory {
    pub fn push(&mut self, e: HistoryEntry) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if e.iteration <= last.iteration {
                return Err(Error::usage("history iterations must increase"));
            }
        }
        self.entries.push(e);
        Ok(())
    }

    pub fn last(&self) -> Option<&HistoryEntry> {
        self.entries.last()
    }

    pub fn previous(&self) -> Option<&HistoryEntry> {
        self.entries.iter().rev().nth(1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn window(&self, n: usize) -> &[HistoryEntry] {
        &self.entries[self.entries.len().saturating_sub(n)..]
    }
}

fn force_deviation(r: &EvalReport, mu: f64) -> Option<f64> {
    r.nav_force_mean.map(|m| (m - mu).abs())
}

fn variance_decreased(cur: &EvalReport, prev: &EvalReport) -> bool {
    matches!((cur.nav_force_variance(), prev.nav_force_variance()), (Some(c), Some(p)) if c < p)
}

/// Whether the latest iteration improved force tracking without hurting completion.
pub fn maintain(history: &MetricsHistory, config: &CurriculumConfig) -> bool {
    let (Some(cur), Some(prev)) = (history.last(), history.previous()) else {
        return false;
    };
    let mu = cur.weights.mu;
    let on_target = force_deviation(&cur.report, mu).is_some_and(|d| d < config.force_dev_threshold);
    let stable = (cur.report.success_rate - prev.report.success_rate).abs() < config.success_change_threshold;
    on_target && variance_decreased(&cur.report, &prev.report) && stable
}

/// Extras worth showing the advisor for the latest iteration.
pub fn request_extra_info_if_needed(
    history: &MetricsHistory,
    failures: &[SceneSummary],
    config: &CurriculumConfig,
) -> Extras {
    let Some(cur) = history.last() else {
        return Extras::default();
    };
    let scene_summaries = (cur.report.success_rate < 0.5)
        .then(|| failures.iter().take(config.max_scene_summaries).cloned().collect());
    let deviates = force_deviation(&cur.report, cur.weights.mu).is_none_or(|d| d >= config.force_dev_threshold);
    let variance_stuck = history
        .previous()
        .is_none_or(|prev| !variance_decreased(&cur.report, &prev.report));
    let force_percentiles = if deviates || variance_stuck {
        cur.report.force_percentiles
    } else {
        None
    };
    Extras {
        force_percentiles,
        scene_summaries,
    }
}

/// Result of applying the safety clip to a proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipOutcome {
    pub weights: RewardWeights,
    pub decision: WeightDecision,
}

/// Scales down any goal whose normalized aggregate exceeds `clip_factor`
/// times the smallest positive one, then applies the terminal-reward guard.
/// Rejected proposals leave `previous` in force.
pub fn clip_weights(proposal: &RewardWeights, previous: &RewardWeights, config: &CurriculumConfig) -> ClipOutcome {
    let reject = |reason: String| ClipOutcome {
        weights: *previous,
        decision: WeightDecision::Rejected { reason },
    };
    if let Err(e) = proposal.validate() {
        return reject(e.to_string());
    }
    let mut w = *proposal;
    let reference = config.reference();
    let normalized = |w: &RewardWeights| {
        let g = goal_aggregates(w);
        [0, 1, 2, 3].map(|i| g[i] / reference[i])
    };
    let n = normalized(&w);
    if n.iter().all(|g| *g == 0.0) {
        return reject("all goal weights are zero".into());
    }
    let mut clipped = false;
    for _ in 0..8 {
        let n = normalized(&w);
        let min = n.iter().copied().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
        let cap = config.clip_factor * min;
        let mut changed = false;
        for (i, g) in n.iter().enumerate() {
            if *g > cap {
                scale_goal(&mut w, i, cap / g);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        clipped = true;
    }
    let wt = w.terminal_reward();
    let ceiling = WT_CEILING_RATIO * w.wq_max();
    if !(wt > 0.0 && wt < ceiling) {
        return reject(format!("terminal reward {wt} outside (0, {ceiling})"));
    }
    ClipOutcome {
        weights: w,
        decision: if clipped {
            WeightDecision::Clipped
        } else {
            WeightDecision::Accepted
        },
    }
}

fn scale_goal(w: &mut RewardWeights, goal: usize, k: f64) {
    match goal {
        0 => {
            w.w_con *= k;
            w.w_force *= k;
        }
        1 => {
            w.w_way *= k;
            w.w_final *= k;
        }
        2 => w.w_ac *= k,
        _ => w.w_land *= k,
    }
}

/// Largest normalized goal over the smallest positive one.
pub fn goal_spread(w: &RewardWeights, config: &CurriculumConfig) -> f64 {
    let g = goal_aggregates(w);
    let reference = config.reference();
    let n: Vec<f64> = (0..4).map(|i| g[i] / reference[i]).filter(|v| *v > 0.0).collect();
    let max = n.iter().copied().fold(0.0, f64::max);
    let min = n.iter().copied().fold(f64::INFINITY, f64::min);
    if n.is_empty() {
        0.0
    } else {
        max / min
    }
}

/// Receives every iteration record and advisor exchange as it happens.
pub trait CurriculumObserver {
    fn on_iteration(&mut self, _entry: &HistoryEntry, _state: &CurriculumState, _trainer: &WipeTrainer) -> Result<()> {
        Ok(())
    }
    fn on_advisor(&mut self, _iteration: u64, _audit: &[AuditRecord]) -> Result<()> {
        Ok(())
    }
}

/// Observer that records nothing.
pub struct NoObserver;

impl CurriculumObserver for NoObserver {}

/// Resumable loop state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub weights: RewardWeights,
    pub history: MetricsHistory,
    pub env_steps: u64,
    pub next_iteration: u64,
}

impl CurriculumState {
    pub fn new(weights: RewardWeights) -> Self {
        Self {
            weights,
            history: MetricsHistory::default(),
            env_steps: 0,
            next_iteration: 1,
        }
    }
}

/// Warmup followed by {train K, evaluate N, maybe retune} until `budget`
/// environment steps are spent. Picks up from `state`, so a loop restored
/// from a saved state and trainer continues exactly where it stopped.
pub fn curriculum_loop(
    trainer: &mut WipeTrainer,
    state: &mut CurriculumState,
    sampler: &EnvSampler,
    budget: u64,
    config: &CurriculumConfig,
    advisor: &mut dyn Advisor,
    observer: &mut dyn CurriculumObserver,
) -> Result<()> {
    config.validate()?;
    let initial = state.history.entries.first().map_or(state.weights, |e| e.weights);
    let config = &config.anchored(&initial);
    let chunk = trainer.config().rollout_length as u64;
    let round = |n: u64| n / chunk * chunk;
    let warmup = round(config.warmup_steps.min(budget));
    if state.env_steps < warmup {
        let n = warmup - state.env_steps;
        trainer.train_with_weights(&state.weights, n)?;
        state.env_steps = warmup;
    }
    let cadence = round(config.cadence_steps).max(chunk);
    while config.warmup_steps <= budget && state.env_steps + cadence <= budget {
        trainer.train_with_weights(&state.weights, cadence)?;
        state.env_steps += cadence;
        let (report, traces) = evaluate(
            &trainer.policy,
            sampler,
            config.eval_episodes,
            &trainer.env.reward_fn,
            &state.weights,
        )?;
        let failures: Vec<SceneSummary> = traces
            .iter()
            .filter(|t| t.status != TerminalStatus::Completed)
            .map(|t| scene_summary(&t.final_state, &t.config))
            .collect::<Result<_>>()?;
        let iteration = state.next_iteration;
        state.history.push(HistoryEntry {
            iteration,
            env_steps: state.env_steps,
            report,
            weights: state.weights,
            analysis: String::new(),
            decision: WeightDecision::Unchanged,
        })?;
        if config.advisor != AdvisorKind::None {
            let (decision, analysis) = if maintain(&state.history, config) {
                (WeightDecision::Maintained, "maintenance criteria met".to_string())
            } else {
                let extras = request_extra_info_if_needed(&state.history, &failures, config);
                let request = AdvisorRequest::new(&state.weights, &state.history, config.history_window, extras);
                let outcome = advisor.advise(&request);
                observer.on_advisor(iteration, &outcome.audit)?;
                match outcome.response {
                    Some(resp) => {
                        let clipped = clip_weights(&resp.new_weights, &state.weights, config);
                        let decision = if clipped.weights == state.weights
                            && matches!(clipped.decision, WeightDecision::Accepted)
                        {
                            WeightDecision::Unchanged
                        } else {
                            clipped.decision
                        };
                        state.weights = clipped.weights;
                        (decision, resp.analysis)
                    }
                    None => {
                        let reason = outcome.failure.unwrap_or_else(|| "advisor failed".into());
                        log::warn!("iteration {iteration}: {reason}; keeping weights");
                        (WeightDecision::AdvisorFailed { reason: reason.clone() }, reason)
                    }
                }
            };
            let e = state.history.entries.last_mut().expect("pushed above");
            e.decision = decision;
            e.analysis = analysis;
        }
        state.next_iteration += 1;
        let entry = state.history.last().expect("pushed above").clone();
        observer.on_iteration(&entry, state, trainer)?;
    }
    if state.env_steps < budget {
        let rest = round(budget - state.env_steps);
        if rest > 0 {
            trainer.train_with_weights(&state.weights, rest)?;
            state.env_steps += rest;
        }
    }
    Ok(())
}
