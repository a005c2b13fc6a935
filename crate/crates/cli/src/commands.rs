//! Command-line surface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wipelab_core::curriculum::{
    clip_weights, Advisor, AdvisorKind, AdvisorRequest, EndpointConfig, Extras, HistoryEntry, MetricsHistory,
    RemoteAdvisor, RuleAdvisor, WeightDecision,
};
use wipelab_core::feasibility::{analyze, FeasibilityReport, FeasibilitySpec, FeasibleRange};
use wipelab_core::learner::load_policy;
use wipelab_core::metrics::{evaluate, EnvSampler};
use wipelab_core::reward::RewardWeights;

use crate::config::{Preset, RunConfig};
use crate::error::{CliError, IoContext, Result};
use crate::experiment::{self, read_json, RunOptions, CONFIG_FILE, WEIGHTS_FILE};
use crate::{plot, trace};

#[derive(Debug, Parser)]
#[command(name = "wipelab", version, about = "Wiping reinforcement-learning laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one or more presets over a set of seeds.
    Train(TrainArgs),
    /// Evaluate a saved policy checkpoint.
    Evaluate(EvaluateArgs),
    /// Reward-weight feasibility bounds and strategy returns.
    AnalyzeFeasibility(FeasibilityArgs),
    /// Render a trace CSV as a path plot and a force chart.
    Replay(ReplayArgs),
    /// Replay an advisor decision offline from a metrics log.
    Advise(AdviseArgs),
    /// Plot evaluation curves of a run directory.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Preset(s) to train; repeat the flag or pass several to build a comparison.
    #[arg(long, value_enum, num_args = 1.., required_unless_present_any = ["config", "resume"])]
    pub preset: Vec<Preset>,
    #[arg(long)]
    pub run_dir: PathBuf,
    /// Base run configuration (JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Environment steps per seed.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub force: bool,
    #[arg(long, conflicts_with = "force")]
    pub resume: bool,
    #[command(flatten)]
    pub learner: LearnerFlags,
    #[command(flatten)]
    pub curriculum: CurriculumFlags,
    #[command(flatten)]
    pub weights: WeightFlags,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Default, Args)]
pub struct LearnerFlags {
    #[arg(long)]
    pub rollout_length: Option<usize>,
    #[arg(long)]
    pub minibatches: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gae_lambda: Option<f64>,
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub value_coef: Option<f64>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
    #[arg(long)]
    pub reward_scale: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    pub init_log_std: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdvisorArg {
    Rule,
    Remote,
    Identity,
    None,
}

impl From<AdvisorArg> for AdvisorKind {
    fn from(a: AdvisorArg) -> Self {
        match a {
            AdvisorArg::Rule => AdvisorKind::Rule,
            AdvisorArg::Remote => AdvisorKind::Remote,
            AdvisorArg::Identity => AdvisorKind::Identity,
            AdvisorArg::None => AdvisorKind::None,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct CurriculumFlags {
    /// Warmup steps before the first curriculum iteration.
    #[arg(long)]
    pub warmup: Option<u64>,
    /// Training steps per curriculum iteration.
    #[arg(long)]
    pub cadence: Option<u64>,
    #[arg(long)]
    pub eval_episodes: Option<usize>,
    #[arg(long)]
    pub force_dev_threshold: Option<f64>,
    #[arg(long)]
    pub success_change_threshold: Option<f64>,
    #[arg(long)]
    pub clip_factor: Option<f64>,
    #[arg(long, value_enum)]
    pub advisor: Option<AdvisorArg>,
    #[arg(long)]
    pub advisor_timeout_secs: Option<u64>,
}

#[derive(Debug, Default, Args)]
pub struct WeightFlags {
    #[arg(long)]
    pub w_col: Option<f64>,
    #[arg(long)]
    pub w_con: Option<f64>,
    #[arg(long)]
    pub w_force: Option<f64>,
    #[arg(long)]
    pub w_way: Option<f64>,
    #[arg(long)]
    pub w_final: Option<f64>,
    #[arg(long)]
    pub w_ac: Option<f64>,
    #[arg(long)]
    pub w_land: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub align_threshold: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct RunFlags {
    #[arg(long)]
    pub ring_count: Option<usize>,
    #[arg(long)]
    pub expected_completion_steps: Option<f64>,
    #[arg(long)]
    pub final_eval_episodes: Option<usize>,
    #[arg(long)]
    pub eval_seed_offset: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub curvature_levels: Option<Vec<f64>>,
    #[arg(long)]
    pub no_traces: bool,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v.into();
        }
    };
}

impl TrainArgs {
    pub fn build_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => read_json::<RunConfig>(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.preset.first() {
            c.preset = *p;
        }
        set!(c.seeds, self.seeds);
        set!(c.train.total_steps, self.budget);
        let l = &self.learner;
        set!(c.train.rollout_length, l.rollout_length);
        set!(c.train.minibatches, l.minibatches);
        set!(c.train.epochs, l.epochs);
        set!(c.train.learning_rate, l.learning_rate);
        set!(c.train.gamma, l.gamma);
        set!(c.train.gae_lambda, l.gae_lambda);
        set!(c.train.entropy_coef, l.entropy_coef);
        set!(c.train.clip, l.clip);
        set!(c.train.value_coef, l.value_coef);
        set!(c.train.max_grad_norm, l.max_grad_norm);
        set!(c.train.reward_scale, l.reward_scale);
        set!(c.train.hidden, l.hidden);
        set!(c.train.init_log_std, l.init_log_std);
        let k = &self.curriculum;
        set!(c.curriculum.warmup_steps, k.warmup);
        set!(c.curriculum.cadence_steps, k.cadence);
        set!(c.curriculum.eval_episodes, k.eval_episodes);
        set!(c.curriculum.force_dev_threshold, k.force_dev_threshold);
        set!(c.curriculum.success_change_threshold, k.success_change_threshold);
        set!(c.curriculum.clip_factor, k.clip_factor);
        set!(c.curriculum.advisor, k.advisor);
        set!(c.curriculum.timeout_secs, k.advisor_timeout_secs);
        let w = &self.weights;
        set!(c.weights.w_col, w.w_col);
        set!(c.weights.w_con, w.w_con);
        set!(c.weights.w_force, w.w_force);
        set!(c.weights.w_way, w.w_way);
        set!(c.weights.w_final, w.w_final);
        set!(c.weights.w_ac, w.w_ac);
        set!(c.weights.w_land, w.w_land);
        set!(c.weights.mu, w.mu);
        set!(c.weights.sigma, w.sigma);
        set!(c.weights.align_threshold, w.align_threshold);
        let r = &self.run;
        set!(c.ring_count, r.ring_count);
        set!(c.expected_completion_steps, r.expected_completion_steps);
        set!(c.final_eval_episodes, r.final_eval_episodes);
        set!(c.eval_seed_offset, r.eval_seed_offset);
        set!(c.randomization.curvature_levels, r.curvature_levels);
        if r.no_traces {
            c.save_traces = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Run configuration supplying the preset, weights and randomization.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value_t = 50)]
    pub episodes: usize,
    /// Seed of the environment sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write one trace CSV per episode here.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeasibilityArgs {
    #[arg(long, default_value_t = 0.99)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1)]
    pub t1: u64,
    #[arg(long, default_value_t = 25)]
    pub t2: u64,
    #[arg(long, default_value_t = 200)]
    pub horizon: u64,
    #[arg(long, default_value_t = 29.0)]
    pub wq_max: f64,
    /// Degraded quality reward, as a fraction of `wq_max`.
    #[arg(long, default_value_t = 0.99)]
    pub poor_ratio: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub wq2: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub wt: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 60.0)]
    pub mu: f64,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    /// `metrics.jsonl` of a seed directory.
    #[arg(long)]
    pub history: PathBuf,
    /// Iteration whose decision to replay; defaults to the last one.
    #[arg(long)]
    pub iteration: Option<u64>,
    #[arg(long, value_enum, default_value = "rule")]
    pub advisor: AdvisorArg,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::AnalyzeFeasibility(a) => feasibility(&a),
        Command::Replay(a) => replay(&a),
        Command::Advise(a) => advise(&a),
        Command::Plot(a) => {
            let files = experiment::plot_run(&a.run_dir)?;
            Ok(files.iter().map(|f| format!("{}\n", f.display())).collect())
        }
    }
}

fn train(a: &TrainArgs) -> Result<String> {
    let opts = RunOptions {
        force: a.force,
        resume: a.resume,
    };
    if a.resume && a.preset.len() <= 1 && a.run_dir.join(CONFIG_FILE).exists() {
        let stored: RunConfig = read_json(&a.run_dir.join(CONFIG_FILE))?;
        let out = experiment::run_experiment(&stored, &a.run_dir, opts)?;
        return summary_output(&[out.summary]);
    }
    let config = a.build_config()?;
    if a.preset.len() > 1 {
        let out = experiment::run_suite(&config, &a.preset, &a.run_dir, opts)?;
        let arms: Vec<_> = out.into_iter().map(|o| o.summary).collect();
        return summary_output(&arms);
    }
    let out = experiment::run_experiment(&config, &a.run_dir, opts)?;
    summary_output(&[out.summary])
}

fn summary_output(arms: &[crate::summary::ArmSummary]) -> Result<String> {
    let mut s = crate::summary::table_text(arms);
    s.push('\n');
    s.push_str(&serde_json::to_string_pretty(arms)?);
    s.push('\n');
    Ok(s)
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<String> {
    let mut config = match &a.config {
        Some(p) => read_json::<RunConfig>(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = a.preset {
        config.preset = p;
    }
    if a.episodes == 0 {
        return Err(CliError::Config("--episodes must be at least 1".into()));
    }
    let (policy, _) = load_policy(&a.checkpoint)?;
    let arm = config.arm();
    let sampler = EnvSampler {
        spec: config.randomization.clone(),
        seed: a.seed,
    };
    let (report, traces) = evaluate(&policy, &sampler, a.episodes, &arm.reward_fn, &arm.weights)?;
    if let Some(dir) = &a.trace_dir {
        fs::create_dir_all(dir).at(dir)?;
        for (i, t) in traces.iter().enumerate() {
            trace::write_trace(&dir.join(format!("episode-{i:03}.csv")), t)?;
        }
    }
    Ok(format!("{}\n", serde_json::to_string_pretty(&report)?))
}

fn fmt_range(r: &FeasibleRange) -> String {
    match r {
        FeasibleRange::Interval { lo, hi } => format!("({lo:.4}, {hi:.4})"),
        FeasibleRange::Empty => "empty".into(),
    }
}

fn feasibility(a: &FeasibilityArgs) -> Result<String> {
    let spec = FeasibilitySpec {
        gamma: a.gamma,
        t1: a.t1,
        t2: a.t2,
        horizon: a.horizon,
        wq_max: a.wq_max,
        wq_poor: a.poor_ratio * a.wq_max,
        wq2: a.wq2,
        wt: a.wt,
    };
    let r = analyze(&spec).map_err(|e| match e {
        wipelab_core::Error::Domain(m) => CliError::Config(m),
        e => e.into(),
    })?;
    if a.json {
        return Ok(format!("{}\n", serde_json::to_string_pretty(&r)?));
    }
    Ok(feasibility_text(&r))
}

pub fn feasibility_text(r: &FeasibilityReport) -> String {
    let s = &r.spec;
    let mut t = String::new();
    let _ = writeln!(
        t,
        "gamma={} T1={} T2={} H={} Wq_max={} Wq_poor={} Wq2={} W_T={}",
        s.gamma, s.t1, s.t2, s.horizon, s.wq_max, s.wq_poor, s.wq2, s.wt
    );
    let b = &r.bounds;
    let _ = writeln!(t, "upper bound U = {:.4} (U / Wq_max = {:.4})", b.upper, b.upper_over_wq_max);
    let _ = writeln!(t, "lower bound L: naive {:.4}, bounded {:.4}", b.lower_naive, b.lower_bounded);
    for rg in &r.ranges {
        let _ = writeln!(
            t,
            "margin {:>4}: naive {} (W_T inside: {}), bounded {} (W_T inside: {})",
            rg.margin,
            fmt_range(&rg.naive),
            rg.wt_in_naive,
            fmt_range(&rg.bounded),
            rg.wt_in_bounded
        );
    }
    for (name, sr) in [("naive", &r.strategy_returns_naive), ("bounded", &r.strategy_returns_bounded)] {
        let _ = writeln!(
            t,
            "{name:>7} returns: optimal {:.3}, lazy {:.3}, forever {:.3}; dominant {:?}",
            sr.r_optimal, sr.r_lazy, sr.r_forever, sr.dominant
        );
    }
    for sw in &r.sweeps {
        let _ = writeln!(
            t,
            "T2 sweep {:?} margin {}: intersection {}",
            sw.formulation,
            sw.margin,
            fmt_range(&sw.intersection)
        );
    }
    let w = &r.worst_case;
    let _ = writeln!(
        t,
        "exact worst case (Wq_poor -> Wq_max, gamma = {}): naive intersection empty: {}; bounded intersection {:?} = (0, {:.4} Wq_max)",
        w.gamma, w.naive_intersection_empty, w.bounded_intersection, w.bounded_upper_over_wq_max
    );
    t
}

fn replay(a: &ReplayArgs) -> Result<String> {
    let rows = trace::read_trace(&a.trace)?;
    fs::create_dir_all(&a.out_dir).at(&a.out_dir)?;
    let stem = a.trace.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let path = a.out_dir.join(format!("{stem}-path.svg"));
    let force = a.out_dir.join(format!("{stem}-force.svg"));
    fs::write(&path, plot::path_plot(&rows, a.mu)).at(&path)?;
    fs::write(&force, plot::force_plot(&rows, a.mu)).at(&force)?;
    Ok(format!("{}\n{}\n", path.display(), force.display()))
}

/// History, per-iteration weights after the advisor step, and run config.
pub type LoadedHistory = (MetricsHistory, Vec<(u64, RewardWeights)>, RunConfig);

/// Rebuilds the history of a seed directory from its logs.
pub fn load_history(metrics: &Path) -> Result<LoadedHistory> {
    let dir = metrics.parent().unwrap_or(Path::new("."));
    let config: RunConfig = read_json(&dir.join(CONFIG_FILE))?;
    let wpath = dir.join(WEIGHTS_FILE);
    let mut after = Vec::new();
    if wpath.exists() {
        let text = fs::read_to_string(&wpath).at(&wpath)?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| CliError::Parse {
                path: wpath.clone(),
                line: i as u64 + 1,
                message: e.to_string(),
            })?;
            let w: RewardWeights = serde_json::from_value(v["weights"].clone())?;
            after.push((v["iteration"].as_u64().unwrap_or(0), w));
        }
    }
    let text = fs::read_to_string(metrics).at(metrics)?;
    let mut history = MetricsHistory::default();
    let mut in_effect = config.arm().weights;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parse = |e: serde_json::Error| CliError::Parse {
            path: metrics.into(),
            line: i as u64 + 1,
            message: e.to_string(),
        };
        let v: serde_json::Value = serde_json::from_str(line).map_err(parse)?;
        let iteration = v["iteration"].as_u64().unwrap_or(0);
        history.push(HistoryEntry {
            iteration,
            env_steps: v["env_steps"].as_u64().unwrap_or(0),
            report: serde_json::from_value(v["report"].clone()).map_err(parse)?,
            weights: in_effect,
            analysis: v["analysis"].as_str().unwrap_or_default().to_string(),
            decision: serde_json::from_value(v["decision"].clone()).unwrap_or(WeightDecision::Unchanged),
        })?;
        if let Some((_, w)) = after.iter().find(|(it, _)| *it == iteration) {
            in_effect = *w;
        }
    }
    Ok((history, after, config))
}

fn advise(a: &AdviseArgs) -> Result<String> {
    let (full, after, config) = load_history(&a.history)?;
    let upto = a.iteration.unwrap_or_else(|| full.last().map_or(0, |e| e.iteration));
    let mut history = MetricsHistory::default();
    for e in full.entries.iter().filter(|e| e.iteration <= upto) {
        history.push(e.clone())?;
    }
    let current = history
        .last()
        .ok_or_else(|| CliError::Config(format!("no iteration {upto} in {}", a.history.display())))?
        .weights;
    let initial = full.entries.first().map_or(current, |e| e.weights);
    let c = &config.curriculum.anchored(&initial);
    let extras = wipelab_core::curriculum::request_extra_info_if_needed(&history, &[], c);
    let request = AdvisorRequest::new(&current, &history, c.history_window, Extras { ..extras });
    let rule = RuleAdvisor {
        force_dev_threshold: c.force_dev_threshold,
        success_change_threshold: c.success_change_threshold,
    };
    let maintained = wipelab_core::curriculum::maintain(&history, c);
    let mut advisor: Box<dyn Advisor> = match a.advisor {
        AdvisorArg::Remote => Box::new(RemoteAdvisor::new(
            EndpointConfig::from_env(Duration::from_secs(c.timeout_secs))?,
            rule,
        )),
        AdvisorArg::Identity | AdvisorArg::None => Box::new(wipelab_core::curriculum::IdentityAdvisor),
        AdvisorArg::Rule => Box::new(rule),
    };
    let outcome = advisor.advise(&request);
    let (weights, decision, analysis) = match outcome.response {
        Some(r) => {
            let clipped = clip_weights(&r.new_weights, &current, c);
            (clipped.weights, clipped.decision, r.analysis)
        }
        None => (current, WeightDecision::AdvisorFailed { reason: outcome.failure.clone().unwrap_or_default() }, String::new()),
    };
    let recorded = after.iter().find(|(it, _)| *it == upto).map(|(_, w)| *w);
    let out = json!({
        "iteration": upto,
        "maintenance_met": maintained,
        "analysis": analysis,
        "decision": decision,
        "weights": weights,
        "recorded_weights": recorded,
        "matches_recorded": recorded.map(|r| maintained && r == current || r == weights),
        "advisor_failure": outcome.failure,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&out)?))
}
