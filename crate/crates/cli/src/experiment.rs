//! Training runs: directory layout, per-seed loops, resume and summaries.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use wipelab_core::curriculum::{
    curriculum_loop, Advisor, AdvisorKind, AuditRecord, CurriculumObserver, CurriculumState, EndpointConfig,
    HistoryEntry, IdentityAdvisor, RemoteAdvisor, RuleAdvisor,
};
use wipelab_core::learner::{save_policy, Trainer, WipeEnv, WipeTrainer};
use wipelab_core::metrics::{evaluate, EnvSampler};

use crate::config::{Preset, RunConfig};
use crate::error::{CliError, IoContext, Result};
use crate::summary::{summarize, table_text, ArmSummary, SeedResult};
use crate::{plot, trace};

pub const CONFIG_FILE: &str = "config.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const WEIGHTS_FILE: &str = "weights.jsonl";
pub const AUDIT_FILE: &str = "advisor_audit.jsonl";
pub const FINAL_FILE: &str = "final.json";
pub const STATE_FILE: &str = "state.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TXT: &str = "summary.txt";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Replace an existing run directory.
    pub force: bool,
    /// Continue an existing run directory from its last checkpoint.
    pub resume: bool,
}

pub fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed-{seed}"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(value)?).at(&tmp)?;
    fs::rename(&tmp, path).at(path)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).at(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn append_line<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).at(path)?;
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    f.write_all(line.as_bytes()).at(path)?;
    Ok(())
}

/// Creates `dir` with `files` already in place by building it under a
/// temporary sibling name and renaming.
fn create_atomically(dir: &Path, files: &[(&str, String)], subdirs: &[&str]) -> Result<()> {
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).at(parent)?;
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("run");
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).at(&tmp)?;
    }
    fs::create_dir(&tmp).at(&tmp)?;
    for (f, content) in files {
        fs::write(tmp.join(f), content).at(tmp.join(f))?;
    }
    for d in subdirs {
        fs::create_dir(tmp.join(d)).at(tmp.join(d))?;
    }
    fs::rename(&tmp, dir).at(dir)?;
    Ok(())
}

fn is_nonempty_dir(p: &Path) -> bool {
    fs::read_dir(p).map(|mut d| d.next().is_some()).unwrap_or(false)
}

/// Prepares the run root. Returns the config that governs the run, which
/// is the stored snapshot when resuming.
fn prepare_root(config: &RunConfig, dir: &Path, opts: RunOptions) -> Result<RunConfig> {
    if dir.exists() && (is_nonempty_dir(dir) || dir.is_file()) {
        if opts.resume {
            let stored: RunConfig = read_json(&dir.join(CONFIG_FILE))?;
            stored.validate()?;
            return Ok(stored);
        }
        if !opts.force {
            return Err(CliError::RunDirExists(dir.into()));
        }
        if dir.is_file() {
            fs::remove_file(dir).at(dir)?;
        } else {
            fs::remove_dir_all(dir).at(dir)?;
        }
    } else if dir.exists() {
        fs::remove_dir(dir).at(dir)?;
    }
    create_atomically(dir, &[(CONFIG_FILE, config.to_json()?)], &[])?;
    Ok(config.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub summary: ArmSummary,
    pub seeds: Vec<SeedResult>,
}

/// Trains every seed of `config` under `dir` and writes the summary table.
pub fn run_experiment(config: &RunConfig, dir: &Path, opts: RunOptions) -> Result<ExperimentOutcome> {
    config.validate()?;
    let config = prepare_root(config, dir, opts)?;
    let endpoint = remote_endpoint(&config)?;
    let mut seeds = Vec::new();
    for &seed in &config.seeds {
        let started = Instant::now();
        let r = run_seed(&config.for_seed(seed), &seed_dir(dir, seed), endpoint.as_ref())?;
        log::info!(
            "{} seed {seed}: success {:.2} in {:.1}s",
            config.preset.as_str(),
            r.report.success_rate,
            started.elapsed().as_secs_f64()
        );
        seeds.push(r);
    }
    let summary = summarize(config.preset, &seeds);
    let outcome = ExperimentOutcome { summary, seeds };
    write_json(&dir.join(SUMMARY_JSON), &outcome)?;
    fs::write(dir.join(SUMMARY_TXT), table_text(std::slice::from_ref(&outcome.summary))).at(dir.join(SUMMARY_TXT))?;
    plot_run(dir)?;
    Ok(outcome)
}

/// Runs several presets under `dir/<preset>/` and writes a combined table.
pub fn run_suite(base: &RunConfig, presets: &[Preset], dir: &Path, opts: RunOptions) -> Result<Vec<ExperimentOutcome>> {
    if dir.exists() && is_nonempty_dir(dir) && !opts.resume && !opts.force {
        return Err(CliError::RunDirExists(dir.into()));
    }
    if opts.force && dir.exists() {
        fs::remove_dir_all(dir).at(dir)?;
    }
    fs::create_dir_all(dir).at(dir)?;
    let mut out = Vec::new();
    for &p in presets {
        let mut c = base.clone();
        c.preset = p;
        let sub_opts = RunOptions {
            force: false,
            resume: opts.resume,
        };
        out.push(run_experiment(&c, &dir.join(p.as_str()), sub_opts)?);
    }
    let arms: Vec<ArmSummary> = out.iter().map(|o| o.summary.clone()).collect();
    write_json(&dir.join(SUMMARY_JSON), &arms)?;
    fs::write(dir.join(SUMMARY_TXT), table_text(&arms)).at(dir.join(SUMMARY_TXT))?;
    Ok(out)
}

fn remote_endpoint(config: &RunConfig) -> Result<Option<EndpointConfig>> {
    if config.arm().advisor == AdvisorKind::Remote {
        let timeout = Duration::from_secs(config.curriculum.timeout_secs);
        return Ok(Some(EndpointConfig::from_env(timeout)?));
    }
    Ok(None)
}

fn build_advisor(config: &RunConfig, endpoint: Option<&EndpointConfig>) -> Box<dyn Advisor> {
    let rule = RuleAdvisor {
        force_dev_threshold: config.curriculum.force_dev_threshold,
        success_change_threshold: config.curriculum.success_change_threshold,
    };
    match (config.arm().advisor, endpoint) {
        (AdvisorKind::Rule, _) => Box::new(rule),
        (AdvisorKind::Remote, Some(e)) => Box::new(RemoteAdvisor::new(e.clone(), rule)),
        _ => Box::new(IdentityAdvisor),
    }
}

struct RunObserver {
    dir: PathBuf,
    config_hash: String,
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    iteration: u64,
    env_steps: u64,
    report: &'a wipelab_core::metrics::EvalReport,
    decision: &'a wipelab_core::curriculum::WeightDecision,
    analysis: &'a str,
}

fn metrics_line(e: &HistoryEntry) -> MetricsLine<'_> {
    MetricsLine {
        iteration: e.iteration,
        env_steps: e.env_steps,
        report: &e.report,
        decision: &e.decision,
        analysis: &e.analysis,
    }
}

fn weights_line(iteration: u64, env_steps: u64, state: &CurriculumState) -> serde_json::Value {
    json!({ "iteration": iteration, "env_steps": env_steps, "weights": state.weights })
}

impl CurriculumObserver for RunObserver {
    fn on_iteration(
        &mut self,
        entry: &HistoryEntry,
        state: &CurriculumState,
        trainer: &WipeTrainer,
    ) -> wipelab_core::Result<()> {
        let io = |e: CliError| wipelab_core::Error::Io(std::io::Error::other(e.to_string()));
        append_line(&self.dir.join(METRICS_FILE), &metrics_line(entry)).map_err(io)?;
        append_line(&self.dir.join(WEIGHTS_FILE), &weights_line(entry.iteration, entry.env_steps, state)).map_err(io)?;
        let ck = self.dir.join("checkpoints");
        write_json(&ck.join(STATE_FILE), &(trainer, state)).map_err(io)?;
        save_policy(&ck.join("policy-latest.bin"), &trainer.policy, &self.config_hash)?;
        Ok(())
    }

    fn on_advisor(&mut self, iteration: u64, audit: &[AuditRecord]) -> wipelab_core::Result<()> {
        for a in audit {
            append_line(&self.dir.join(AUDIT_FILE), &json!({ "iteration": iteration, "record": a }))
                .map_err(|e| wipelab_core::Error::Io(std::io::Error::other(e.to_string())))?;
        }
        Ok(())
    }
}

/// Keeps only lines whose `iteration` field is at most `last`.
fn truncate_jsonl(path: &Path, last: u64) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let f = File::open(path).at(path)?;
    let mut kept = String::new();
    for line in BufReader::new(f).lines() {
        let line = line.at(path)?;
        let v: serde_json::Value = serde_json::from_str(&line)?;
        if v["iteration"].as_u64().is_some_and(|i| i <= last) {
            kept.push_str(&line);
            kept.push('\n');
        }
    }
    fs::write(path, kept).at(path)?;
    Ok(())
}

pub fn eval_sampler(config: &RunConfig, seed: u64) -> EnvSampler {
    EnvSampler {
        spec: config.randomization.clone(),
        seed: seed.wrapping_add(config.eval_seed_offset),
    }
}

/// Trains one seed into `dir`, resuming from `checkpoints/state.json` when present.
pub fn run_seed(config: &RunConfig, dir: &Path, endpoint: Option<&EndpointConfig>) -> Result<SeedResult> {
    let seed = config.seeds[0];
    if dir.join(FINAL_FILE).exists() {
        let stored: RunConfig = read_json(&dir.join(CONFIG_FILE))?;
        if &stored == config {
            return read_json(&dir.join(FINAL_FILE));
        }
        return Err(CliError::Config(format!("{} holds a different run", dir.display())));
    }
    let arm = config.arm();
    let state_path = dir.join("checkpoints").join(STATE_FILE);
    let (mut trainer, mut state) = if state_path.exists() {
        let stored: RunConfig = read_json(&dir.join(CONFIG_FILE))?;
        if &stored != config {
            return Err(CliError::Config(format!("{} holds a different run", dir.display())));
        }
        let (t, s): (WipeTrainer, CurriculumState) = read_json(&state_path)?;
        let last = s.history.last().map_or(0, |e| e.iteration);
        for f in [METRICS_FILE, WEIGHTS_FILE, AUDIT_FILE] {
            truncate_jsonl(&dir.join(f), last)?;
        }
        log::info!("seed {seed}: resuming after iteration {last} ({} env steps)", s.env_steps);
        (t, s)
    } else {
        if dir.exists() {
            fs::remove_dir_all(dir).at(dir)?;
        }
        let files = [
            (CONFIG_FILE, config.to_json()?),
            (METRICS_FILE, String::new()),
            (WEIGHTS_FILE, String::new()),
            (AUDIT_FILE, String::new()),
        ];
        create_atomically(dir, &files, &["checkpoints", "traces", "plots"])?;
        let env = WipeEnv::new(config.randomization.clone(), arm.reward_fn, arm.weights, seed)?;
        (Trainer::new(env, config.train.clone())?, CurriculumState::new(arm.weights))
    };

    let mut curriculum = config.curriculum.clone();
    curriculum.advisor = arm.advisor;
    let sampler = eval_sampler(config, seed);
    let mut advisor = build_advisor(config, endpoint);
    let hash = config.hash()?;
    let mut observer = RunObserver {
        dir: dir.to_path_buf(),
        config_hash: hash.clone(),
    };
    curriculum_loop(
        &mut trainer,
        &mut state,
        &sampler,
        config.train.total_steps,
        &curriculum,
        advisor.as_mut(),
        &mut observer,
    )?;

    let (report, traces) = evaluate(
        &trainer.policy,
        &sampler,
        config.final_eval_episodes,
        &arm.reward_fn,
        &state.weights,
    )?;
    save_policy(&dir.join("checkpoints").join("final.bin"), &trainer.policy, &hash)?;
    if config.save_traces {
        for (i, t) in traces.iter().enumerate() {
            trace::write_trace(&dir.join("traces").join(format!("final-{i:03}.csv")), t)?;
        }
        if let Some(t) = traces.first() {
            let rows = trace::rows(t);
            let mu = state.weights.mu;
            fs::write(dir.join("plots").join("final-000-path.svg"), plot::path_plot(&rows, mu)).at(dir)?;
            fs::write(dir.join("plots").join("final-000-force.svg"), plot::force_plot(&rows, mu)).at(dir)?;
        }
    }
    let result = SeedResult {
        seed,
        env_steps: trainer.env_steps(),
        report,
    };
    write_json(&dir.join(FINAL_FILE), &result)?;
    Ok(result)
}

#[derive(Debug, Clone, Deserialize)]
pub struct StoredMetrics {
    pub iteration: u64,
    pub env_steps: u64,
    pub report: wipelab_core::metrics::EvalReport,
}

pub fn read_metrics(path: &Path) -> Result<Vec<StoredMetrics>> {
    let text = fs::read_to_string(path).at(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Parse {
                path: path.into(),
                line: i as u64 + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Curves of the per-iteration evaluations across seeds, with
/// standard-error bands, written to `dir/plots/`.
pub fn plot_run(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut runs: Vec<(String, Vec<Vec<StoredMetrics>>)> = Vec::new();
    let collect = |d: &Path| -> Result<Vec<Vec<StoredMetrics>>> {
        let mut seeds = Vec::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(d).at(d)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        for p in entries {
            let m = p.join(METRICS_FILE);
            if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("seed-")) && m.exists() {
                seeds.push(read_metrics(&m)?);
            }
        }
        Ok(seeds)
    };
    let here = collect(dir)?;
    if !here.is_empty() {
        let name = read_json::<RunConfig>(&dir.join(CONFIG_FILE)).map_or("run".to_string(), |c| c.preset.as_str().into());
        runs.push((name, here));
    } else {
        for p in Preset::ALL {
            let sub = dir.join(p.as_str());
            if sub.is_dir() {
                runs.push((p.as_str().into(), collect(&sub)?));
            }
        }
    }
    if runs.is_empty() {
        return Err(CliError::Config(format!("no metrics found under {}", dir.display())));
    }
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).at(&plots)?;
    type Pick = fn(&wipelab_core::metrics::EvalReport) -> Option<f64>;
    let charts: [(&str, &str, &str, Pick, Option<f64>); 3] = [
        ("success.svg", "Evaluation success rate", "success rate", |r| Some(r.success_rate), None),
        ("nav_force.svg", "Navigational force", "mean f_z (N)", |r| r.nav_force_mean, Some(60.0)),
        ("landing_force.svg", "Landing force", "mean landing f_z (N)", |r| r.landing_force_mean, Some(60.0)),
    ];
    let mut written = Vec::new();
    for (file, title, y_label, pick, target) in charts {
        let series: Vec<plot::Series> = runs.iter().map(|(name, seeds)| band_series(name, seeds, pick)).collect();
        let refs: Vec<plot::RefLine> = target
            .map(|y| plot::RefLine {
                y,
                label: format!("target {y} N"),
            })
            .into_iter()
            .collect();
        let svg = plot::line_chart(title, "environment steps", y_label, &series, &refs);
        let path = plots.join(file);
        fs::write(&path, svg).at(&path)?;
        written.push(path);
    }
    Ok(written)
}

fn band_series(name: &str, seeds: &[Vec<StoredMetrics>], pick: fn(&wipelab_core::metrics::EvalReport) -> Option<f64>) -> plot::Series {
    let mut steps: Vec<u64> = seeds.iter().flat_map(|s| s.iter().map(|m| m.env_steps)).collect();
    steps.sort_unstable();
    steps.dedup();
    let mut points = Vec::new();
    let mut band = Vec::new();
    for st in steps {
        let vals: Vec<f64> = seeds
            .iter()
            .filter_map(|s| s.iter().find(|m| m.env_steps == st).and_then(|m| pick(&m.report)))
            .collect();
        if vals.is_empty() {
            continue;
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let se = if vals.len() > 1 {
            (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        let x = st as f64;
        points.push((x, m));
        band.push((x, m - se, m + se));
    }
    plot::Series {
        name: name.into(),
        points,
        band,
    }
}
