use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::advisor::{goals_line, Advisor, AdvisorOutcome, AdvisorRequest, AdvisorResponse, AuditRecord, RuleAdvisor};
use crate::reward::RewardWeights;
use crate::{Error, Result};

pub const ENV_URL: &str = "WIPELAB_ADVISOR_URL";
pub const ENV_KEY: &str = "WIPELAB_ADVISOR_API_KEY";
pub const ENV_MODEL: &str = "WIPELAB_ADVISOR_MODEL";
pub const ENV_FORMAT: &str = "WIPELAB_ADVISOR_FORMAT";

const REQUIRED: [&str; 7] = ["w_col", "w_con", "w_force", "w_way", "w_final", "w_ac", "w_land"];

/// Request body shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WireFormat {
    /// `{"model", "messages": [{"role", "content"}]}`
    Messages,
    /// `{"model", "prompt"}`
    Prompt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    pub url: String,
    pub api_key: String,
    pub model: Option<String>,
    pub format: WireFormat,
    pub timeout: Duration,
    /// Extra attempts after the first failure.
    pub retries: u32,
}

impl EndpointConfig {
    /// Reads the endpoint from the environment; fails fast when unset.
    pub fn from_env(timeout: Duration) -> Result<Self> {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let url = get(ENV_URL).ok_or_else(|| Error::config(format!("{ENV_URL} is not set")))?;
        let api_key = get(ENV_KEY).ok_or_else(|| Error::config(format!("{ENV_KEY} is not set")))?;
        let format = match get(ENV_FORMAT).as_deref() {
            None | Some("messages") => WireFormat::Messages,
            Some("prompt") => WireFormat::Prompt,
            Some(other) => return Err(Error::config(format!("{ENV_FORMAT}: unknown format {other:?}"))),
        };
        Ok(Self {
            url,
            api_key,
            model: get(ENV_MODEL),
            format,
            timeout,
            retries: 2,
        })
    }
}

const SYSTEM: &str = "You tune reward weights for a reinforcement-learning wiping policy. \
Improve force tracking around the target without hurting waypoint completion.";

/// Prompt text for a request: metrics table, extras, and the reply contract.
pub fn build_prompt(req: &AdvisorRequest) -> String {
    let w = &req.weights;
    let mut p = String::new();
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
    p.push_str("## Evaluation history\n");
    p.push_str("| iter | env steps | success | steps | IAE | nav force mean | nav force std | landing mean |\n");
    p.push_str("|---|---|---|---|---|---|---|---|\n");
    for e in &req.history {
        let r = &e.report;
        let _ = writeln!(
            p,
            "| {} | {} | {:.2} | {} | {} | {} | {} | {} |",
            e.iteration,
            e.env_steps,
            r.success_rate,
            opt(r.mean_completion_steps),
            opt(r.iae_mean),
            opt(r.nav_force_mean),
            opt(r.nav_force_std),
            opt(r.landing_force_mean),
        );
    }
    p.push_str("\n## Current weights\n");
    for (k, v) in w.magnitudes() {
        let _ = writeln!(p, "{k} = {v}");
    }
    let _ = writeln!(p, "mu = {}\nsigma = {}\nalign_threshold = {}", w.mu, w.sigma, w.align_threshold);
    let _ = writeln!(p, "goal aggregates: {}", goals_line(w));
    let f = &req.feasibility;
    let _ = writeln!(
        p,
        "\n## Feasibility\nterminal reward w_way + w_final = {:.2}; it must stay within (0, {:.2}) = (0, 99 x peak quality {:.2}).",
        f.terminal_reward, f.ceiling, f.wq_max
    );
    if let Some(q) = req.extras.force_percentiles {
        let _ = writeln!(
            p,
            "\n## Navigational force percentiles (N)\np5={:.1} p25={:.1} p50={:.1} p75={:.1} p95={:.1}",
            q[0], q[1], q[2], q[3], q[4]
        );
    }
    if let Some(scenes) = &req.extras.scene_summaries {
        p.push_str("\n## Failure labels\n");
        for s in scenes {
            let _ = writeln!(
                p,
                "- {}: wiped {}/{}, distance to next waypoint {}, final force {:.1} N, contact fraction {:.2}",
                s.label.as_str(),
                s.waypoints_wiped_count,
                s.waypoint_count,
                s.distance_to_next_waypoint.map_or("-".into(), |d| format!("{d:.3} m")),
                s.final_f_z,
                s.contact_fraction
            );
        }
    }
    p.push_str(
        "\n## Reply format\nGive a 1-2 sentence step-by-step analysis, then every weight in a fenced block:\n\
```weights\nw_col = <number>\nw_con = <number>\nw_force = <number>\nw_way = <number>\nw_final = <number>\nw_ac = <number>\nw_land = <number>\n```\n\
All values must be finite and non-negative. mu, sigma and align_threshold may be included; omitted ones stay as they are.\n",
    );
    p
}

/// Parses the analysis and the fenced weight block of a reply.
pub fn parse_weight_block(text: &str, current: &RewardWeights) -> std::result::Result<AdvisorResponse, String> {
    let start = text.find("```weights").ok_or("no ```weights block")?;
    let body_start = start + "```weights".len();
    let end = text[body_start..].find("```").ok_or("unterminated weights block")? + body_start;
    let mut w = *current;
    let mut seen: Vec<String> = Vec::new();
    for line in text[body_start..end].lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| format!("malformed line {line:?}"))?;
        let k = k.trim();
        let v: f64 = v
            .trim()
            .trim_end_matches(',')
            .parse()
            .map_err(|_| format!("{k}: not a number"))?;
        if seen.iter().any(|s| s == k) {
            return Err(format!("{k} given twice"));
        }
        let slot = match k {
            "w_col" => &mut w.w_col,
            "w_con" => &mut w.w_con,
            "w_force" => &mut w.w_force,
            "w_way" => &mut w.w_way,
            "w_final" => &mut w.w_final,
            "w_ac" => &mut w.w_ac,
            "w_land" => &mut w.w_land,
            "mu" => &mut w.mu,
            "sigma" => &mut w.sigma,
            "align_threshold" => &mut w.align_threshold,
            _ => return Err(format!("unknown key {k}")),
        };
        *slot = v;
        seen.push(k.to_string());
    }
    if let Some(missing) = REQUIRED.iter().find(|k| !seen.iter().any(|s| s == *k)) {
        return Err(format!("missing {missing}"));
    }
    w.validate().map_err(|e| e.to_string())?;
    let analysis = text[..start].trim();
    let analysis = analysis
        .strip_prefix("Analysis:")
        .or_else(|| analysis.strip_prefix("analysis:"))
        .unwrap_or(analysis)
        .trim();
    Ok(AdvisorResponse {
        analysis: if analysis.is_empty() {
            "(no analysis given)".into()
        } else {
            analysis.to_string()
        },
        new_weights: w,
    })
}

/// Pulls the reply text out of common completion-API response shapes.
fn extract_text(body: &str) -> std::result::Result<String, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    let candidates = [
        v.pointer("/choices/0/message/content"),
        v.pointer("/choices/0/text"),
        v.pointer("/content/0/text"),
        v.pointer("/message/content"),
        v.get("completion"),
        v.get("response"),
        v.get("text"),
        v.get("output"),
    ];
    let text = candidates
        .into_iter()
        .flatten()
        .find_map(|c| c.as_str().map(str::to_string));
    text.ok_or_else(|| "no completion text in response".into())
}

pub struct RemoteAdvisor {
    endpoint: EndpointConfig,
    agent: ureq::Agent,
    fallback: RuleAdvisor,
}

impl RemoteAdvisor {
    pub fn new(endpoint: EndpointConfig, fallback: RuleAdvisor) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(endpoint.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint,
            agent,
            fallback,
        }
    }

    fn body(&self, prompt: &str) -> Value {
        let mut body = match self.endpoint.format {
            WireFormat::Messages => json!({
                "messages": [
                    {"role": "system", "content": SYSTEM},
                    {"role": "user", "content": prompt},
                ]
            }),
            WireFormat::Prompt => json!({ "prompt": format!("{SYSTEM}\n\n{prompt}") }),
        };
        if let Some(m) = &self.endpoint.model {
            body["model"] = json!(m);
        }
        body
    }

    fn call(&self, body: &Value) -> std::result::Result<String, String> {
        let mut resp = self
            .agent
            .post(&self.endpoint.url)
            .header("Authorization", &format!("Bearer {}", self.endpoint.api_key))
            .header("Content-Type", "application/json")
            .send(body.to_string())
            .map_err(|e| format!("transport: {e}"))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| format!("reading body: {e}"))?;
        if !(200..300).contains(&status) {
            return Err(format!("HTTP {status}: {text}"));
        }
        Ok(text)
    }
}

impl Advisor for RemoteAdvisor {
    fn advise(&mut self, request: &AdvisorRequest) -> AdvisorOutcome {
        let body = self.body(&build_prompt(request));
        let mut audit = Vec::new();
        let mut last_error = String::new();
        for attempt in 1..=1 + self.endpoint.retries {
            let (raw, parsed) = match self.call(&body) {
                Ok(raw) => {
                    let parsed = extract_text(&raw).and_then(|t| parse_weight_block(&t, &request.weights));
                    (Some(raw), parsed)
                }
                Err(e) => (None, Err(e)),
            };
            audit.push(AuditRecord {
                advisor: "remote".into(),
                attempt,
                request: body.clone(),
                response: raw,
                error: parsed.as_ref().err().cloned(),
            });
            match parsed {
                Ok(resp) => {
                    return AdvisorOutcome {
                        response: Some(resp),
                        audit,
                        failure: None,
                    }
                }
                Err(e) => last_error = e,
            }
        }
        let reason = format!(
            "remote advisor failed after {} attempts ({last_error}); fell back to rule advisor",
            1 + self.endpoint.retries
        );
        log::warn!("{reason}");
        let mut fb = self.fallback.advise(request);
        audit.append(&mut fb.audit);
        AdvisorOutcome {
            response: fb.response,
            audit,
            failure: Some(reason),
        }
    }
}
