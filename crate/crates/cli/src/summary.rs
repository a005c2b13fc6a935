//! Aggregate tables across seeds: one row per preset.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use wipelab_core::metrics::EvalReport;

use crate::config::Preset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub env_steps: u64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub success_rates: Vec<f64>,
    pub median_success: f64,
    pub mean_success: f64,
    pub std_success: f64,
    /// Means over seeds that completed at least one episode.
    pub mean_completion_steps: Option<f64>,
    pub iae_mean: Option<f64>,
    pub nav_force_mean: Option<f64>,
    pub landing_force_mean: Option<f64>,
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn summarize(preset: Preset, results: &[SeedResult]) -> ArmSummary {
    let rates: Vec<f64> = results.iter().map(|r| r.report.success_rate).collect();
    let m = mean(rates.iter().copied()).unwrap_or(0.0);
    let var = mean(rates.iter().map(|r| (r - m) * (r - m))).unwrap_or(0.0);
    ArmSummary {
        preset,
        seeds: results.iter().map(|r| r.seed).collect(),
        median_success: median(&rates),
        mean_success: m,
        std_success: var.sqrt(),
        success_rates: rates,
        mean_completion_steps: mean(results.iter().filter_map(|r| r.report.mean_completion_steps)),
        iae_mean: mean(results.iter().filter_map(|r| r.report.iae_mean)),
        nav_force_mean: mean(results.iter().filter_map(|r| r.report.nav_force_mean)),
        landing_force_mean: mean(results.iter().filter_map(|r| r.report.landing_force_mean)),
    }
}

pub fn table_text(arms: &[ArmSummary]) -> String {
    let opt = |v: Option<f64>, d: usize| v.map_or("-".to_string(), |v| format!("{v:.d$}"));
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<20} {:>6} {:>16} {:>8} {:>8} {:>8} {:>9}",
        "Method", "Seeds", "Success %", "Median", "Steps", "IAE", "Nav F (N)"
    );
    for a in arms {
        let _ = writeln!(
            t,
            "{:<20} {:>6} {:>16} {:>8.1} {:>8} {:>8} {:>9}",
            a.preset.as_str(),
            a.seeds.len(),
            format!("{:.1} ± {:.1}", 100.0 * a.mean_success, 100.0 * a.std_success),
            100.0 * a.median_success,
            opt(a.mean_completion_steps, 1),
            opt(a.iae_mean, 1),
            opt(a.nav_force_mean, 1),
        );
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[0.2, 1.0, 0.4]), 0.4);
        assert_eq!(median(&[0.2, 1.0, 0.4, 0.6]), 0.5);
    }
}
