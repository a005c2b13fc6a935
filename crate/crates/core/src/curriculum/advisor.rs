use serde::{Deserialize, Serialize};

use super::{goal_aggregates, HistoryEntry, MetricsHistory, WT_CEILING_RATIO};
use crate::metrics::SceneSummary;
use crate::reward::RewardWeights;

/// Value given to a zero landing multiplier when the rule asks to double it.
pub const LANDING_SEED: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extras {
    pub force_percentiles: Option<[f64; 5]>,
    pub scene_summaries: Option<Vec<SceneSummary>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityContext {
    pub terminal_reward: f64,
    pub wq_max: f64,
    pub ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorRequest {
    pub weights: RewardWeights,
    pub history: Vec<HistoryEntry>,
    pub extras: Extras,
    pub feasibility: FeasibilityContext,
}

impl AdvisorRequest {
    pub fn new(weights: &RewardWeights, history: &MetricsHistory, window: usize, extras: Extras) -> Self {
        Self {
            weights: *weights,
            history: history.window(window).to_vec(),
            extras,
            feasibility: FeasibilityContext {
                terminal_reward: weights.terminal_reward(),
                wq_max: weights.wq_max(),
                ceiling: WT_CEILING_RATIO * weights.wq_max(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorResponse {
    pub analysis: String,
    pub new_weights: RewardWeights,
}

/// One request/response exchange, kept for the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub advisor: String,
    pub attempt: u32,
    pub request: serde_json::Value,
    pub response: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorOutcome {
    /// `None` when no usable proposal was produced.
    pub response: Option<AdvisorResponse>,
    pub audit: Vec<AuditRecord>,
    /// Set when the primary advisor failed, whether or not a fallback answered.
    pub failure: Option<String>,
}

pub trait Advisor {
    fn advise(&mut self, request: &AdvisorRequest) -> AdvisorOutcome;
}

/// Returns the current weights unchanged.
pub struct IdentityAdvisor;

impl Advisor for IdentityAdvisor {
    fn advise(&mut self, request: &AdvisorRequest) -> AdvisorOutcome {
        AdvisorOutcome {
            response: Some(AdvisorResponse {
                analysis: "identity advisor: weights unchanged".into(),
                new_weights: request.weights,
            }),
            audit: Vec::new(),
            failure: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleFired {
    BoostNavigation,
    PenalizeLanding,
    BoostForce,
    None,
}

/// Deterministic heuristic advisor.
#[derive(Debug, Clone)]
pub struct RuleAdvisor {
    pub force_dev_threshold: f64,
    pub success_change_threshold: f64,
}

impl Default for RuleAdvisor {
    fn default() -> Self {
        Self {
            force_dev_threshold: 5.0,
            success_change_threshold: 0.15,
        }
    }
}

impl RuleAdvisor {
    pub fn decide(&self, request: &AdvisorRequest) -> (RuleFired, AdvisorResponse) {
        let mut w = request.weights;
        let Some(cur) = request.history.last() else {
            return (RuleFired::None, response(w, "no evaluation yet; weights unchanged"));
        };
        let r = &cur.report;
        let prev_success = request.history.iter().rev().nth(1).map(|e| e.report.success_rate);
        let stable = prev_success.is_none_or(|p| (r.success_rate - p).abs() < self.success_change_threshold);
        let deviation = r.nav_force_mean.map(|m| (m - w.mu).abs());

        if r.success_rate < 0.5 {
            w.w_way *= 1.5;
            w.w_final *= 1.5;
            let text = format!(
                "Success rate {:.2} is below 0.5, so navigation rewards are raised 1.5x.",
                r.success_rate
            );
            return (RuleFired::BoostNavigation, response(w, &text));
        }
        if let Some(landing) = r.landing_force_mean {
            if r.success_rate >= 0.8 && landing > w.mu + self.force_dev_threshold {
                w.w_land = if w.w_land > 0.0 { w.w_land * 2.0 } else { LANDING_SEED };
                let text = format!(
                    "Completion is healthy but landing force averages {landing:.1} N against a {:.0} N target, so the landing penalty multiplier is raised.",
                    w.mu
                );
                return (RuleFired::PenalizeLanding, response(w, &text));
            }
        }
        if let Some(d) = deviation {
            if d >= self.force_dev_threshold && stable {
                w.w_force *= 1.25;
                let text = format!(
                    "Navigational force deviates {d:.1} N from the target with stable completion, so the force weight is raised 1.25x."
                );
                return (RuleFired::BoostForce, response(w, &text));
            }
        }
        (RuleFired::None, response(w, "Metrics are healthy; weights unchanged."))
    }
}

fn response(w: RewardWeights, analysis: &str) -> AdvisorResponse {
    AdvisorResponse {
        analysis: analysis.to_string(),
        new_weights: w,
    }
}

impl Advisor for RuleAdvisor {
    fn advise(&mut self, request: &AdvisorRequest) -> AdvisorOutcome {
        let (fired, resp) = self.decide(request);
        let audit = AuditRecord {
            advisor: "rule".into(),
            attempt: 1,
            request: serde_json::to_value(request).unwrap_or(serde_json::Value::Null),
            response: Some(format!("{fired:?}: {}", resp.analysis)),
            error: None,
        };
        AdvisorOutcome {
            response: Some(resp),
            audit: vec![audit],
            failure: None,
        }
    }
}

/// Goal aggregates of a request's weights, for prompts and logs.
pub(crate) fn goals_line(w: &RewardWeights) -> String {
    let g = goal_aggregates(w);
    format!(
        "quality={:.4} navigation={:.4} smoothness={:.4} landing={:.4}",
        g[0], g[1], g[2], g[3]
    )
}
