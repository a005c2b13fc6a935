//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 1 2 3`.

use std::collections::HashSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ndarray::{Array1, Array2};
use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wipelab::config::{Preset, RunConfig};
use wipelab::experiment::{read_json, run_experiment, run_suite, seed_dir, RunOptions, CONFIG_FILE, METRICS_FILE, WEIGHTS_FILE};
use wipelab::summary::ArmSummary;
use wipelab_core::curriculum::{goal_spread, maintain, CurriculumConfig, HistoryEntry, MetricsHistory, WeightDecision, WT_CEILING_RATIO};
use wipelab_core::feasibility::{discounted_sum, exact, strategy_returns, upper_bound, FeasibilitySpec, Strategy, Verdict};
use wipelab_core::learner::{ppo_loss, Batch, LossCoefficients, PolicyParams};
use wipelab_core::metrics::EvalReport;
use wipelab_core::reward::{gaussian_force_term, Formulation, RewardFn, RewardWeights};
use wipelab_core::sim::StepInfo;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runs_root() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn forced() -> RunOptions {
    RunOptions {
        force: true,
        resume: false,
    }
}

// 1 -------------------------------------------------------------------------

fn bracket_ratio(poor_ratio: &str) -> Result<f64, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wipelab"))
        .args(["analyze-feasibility", "--gamma", "0.99", "--t1", "1", "--t2", "200", "--horizon", "200"])
        .args(["--poor-ratio", poor_ratio, "--json"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    v["bounds"]["upper_over_wq_max"].as_f64().ok_or_else(|| "missing upper_over_wq_max".into())
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let hi = bracket_ratio("0.99")?;
    let lo = bracket_ratio("0.01")?;
    let secs = started.elapsed().as_secs_f64() / 2.0;
    ensure((hi - 99.02).abs() <= 0.01, || format!("poor-ratio 0.99 gave {hi:.4}"))?;
    ensure((lo - 101.30).abs() <= 0.01, || format!("poor-ratio 0.01 gave {lo:.4}"))?;
    ensure(secs < 1.0, || format!("{secs:.3}s per call"))?;
    Ok(format!("U/Wq_max = {hi:.4} and {lo:.4}; {secs:.3}s per call"))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let s = exact::worst_case_sweep(0.99, 1, 2..=200, 29.0, -1.0).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    ensure(s.naive_intersection_empty, || "naive intersection is non-empty".into())?;
    let (lo, hi) = s.bounded_intersection.ok_or("bounded intersection is empty")?;
    ensure(lo == 0.0, || format!("bounded range starts at {lo}"))?;
    let ratio = hi / 29.0;
    ensure((ratio - 99.0).abs() < 0.5, || format!("bounded range ends at {ratio:.4} Wq_max"))?;
    ensure(secs < 1.0, || format!("{secs:.3}s"))?;
    Ok(format!("naive empty over T2 in [2, 200]; bounded (0, {ratio:.4} Wq_max); {secs:.3}s"))
}

// 3 -------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let spec = FeasibilitySpec {
        wt: 1000.0,
        wq_max: 29.0,
        gamma: 0.99,
        t1: 1,
        t2: 25,
        ..FeasibilitySpec::default()
    };
    let naive = strategy_returns(&spec, Formulation::Naive).map_err(|e| e.to_string())?;
    let bounded = strategy_returns(&spec, Formulation::Bounded).map_err(|e| e.to_string())?;
    ensure(naive.dominant == Verdict::Dominant(Strategy::Forever), || format!("naive {:?}", naive.dominant))?;
    ensure(bounded.dominant == Verdict::Dominant(Strategy::Optimal), || format!("bounded {:?}", bounded.dominant))?;

    // 29 / (1 - 99/100) = 2900 as an exact rational
    let g = BigRational::new(99.into(), 100.into());
    let one = BigRational::from_integer(1.into());
    let w = BigRational::from_integer(29.into());
    let oracle = &w / (&one - &g);
    ensure(oracle == BigRational::from_integer(2900.into()), || format!("oracle {oracle}"))?;
    let ex = exact::strategy_returns(
        &g,
        1,
        25,
        &w,
        &exact::decimal(0.99 * 29.0).map_err(|e| e.to_string())?,
        &BigRational::from_integer((-1).into()),
        &BigRational::from_integer(1000.into()),
    )
    .map_err(|e| e.to_string())?;
    ensure(ex[2] == oracle, || format!("exact R_forever {}", ex[2]))?;
    ensure((naive.r_forever - 2900.0).abs() <= 1e-9 * 2900.0, || format!("float R_forever {}", naive.r_forever))?;
    Ok(format!(
        "naive: forever {:.3} > optimal {:.3}; bounded: optimal {:.3} > forever {:.3}",
        naive.r_forever, naive.r_optimal, bounded.r_optimal, bounded.r_forever
    ))
}

// 4 -------------------------------------------------------------------------

fn ring_of(center: [f64; 2], previous: [f64; 2], rings: usize, p: [f64; 2]) -> Option<usize> {
    let outer = (center[0] - previous[0]).hypot(center[1] - previous[1]);
    let d = (p[0] - center[0]).hypot(p[1] - center[1]);
    if outer <= 0.0 || d > outer {
        return None;
    }
    Some(((d / (outer / rings as f64)).floor() as usize).min(rings - 1))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut grants_total = 0usize;
    for trace in 0..10_000 {
        let rings = rng.random_range(1..=8);
        let n_wp = rng.random_range(1..=6);
        let waypoints: Vec<[f64; 3]> = (0..n_wp)
            .map(|_| [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 0.0])
            .collect();
        let start = [rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25)];
        let w = RewardWeights {
            w_con: rng.random_range(0.0..20.0),
            w_force: rng.random_range(0.0..40.0),
            w_way: 0.0,
            w_final: 0.0,
            w_ac: 0.0,
            w_land: 0.0,
            mu: rng.random_range(40.0..80.0),
            sigma: rng.random_range(2.0..20.0),
            align_threshold: rng.random_range(0.0..1.0),
            ..RewardWeights::default()
        };
        let rf = RewardFn {
            formulation: Formulation::Bounded,
            ring_count: rings,
        };
        let mut ep = rf.episode(&waypoints, start).map_err(|e| e.to_string())?;
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut active = 0usize;
        let mut cumulative = 0.0;
        let len = rng.random_range(1..=200u32);
        for step in 0..len {
            let c = [waypoints[active][0], waypoints[active][1]];
            let prev = if active == 0 {
                start
            } else {
                [waypoints[active - 1][0], waypoints[active - 1][1]]
            };
            let reach = (c[0] - prev[0]).hypot(c[1] - prev[1]) * 1.3 + 1e-3;
            let p = [c[0] + rng.random_range(-reach..reach), c[1] + rng.random_range(-reach..reach)];
            let wiped = rng.random_bool(0.08);
            let info = StepInfo {
                step_index: step + 1,
                f_z: rng.random_range(0.0..120.0),
                in_contact: rng.random_bool(0.7),
                collided: false,
                waypoint_wiped_this_step: wiped.then_some(active),
                final_waypoint_wiped: wiped && active + 1 == n_wp,
                landing_force: None,
                alignment_cosine: rng.random_range(-1.0..1.0),
                accel: [0.0; 3],
                ee_position: [p[0], p[1], 0.0],
                active_waypoint: Some(active),
            };
            let r = ep.reward(&info, &waypoints, &w);

            let con = if info.in_contact { w.w_con } else { 0.0 };
            let e = info.f_z - w.mu;
            let force = if info.alignment_cosine > w.align_threshold {
                w.w_force * (-(e * e) / (2.0 * w.sigma * w.sigma)).exp()
            } else {
                0.0
            };
            let expected = match ring_of(c, prev, rings, p) {
                Some(k) if seen.insert((active, k)) => {
                    grants_total += 1;
                    con + force
                }
                _ => 0.0,
            };
            ensure(r == expected, || format!("trace {trace} step {step}: reward {r}, oracle {expected}"))?;
            cumulative += r;
            if wiped {
                if active + 1 == n_wp {
                    break;
                }
                active += 1;
            }
        }
        let cap = (rings * n_wp) as f64 * (w.w_con + w.w_force);
        ensure(cumulative <= cap, || format!("trace {trace}: cumulative {cumulative} > {cap}"))?;
        ensure(seen.len() <= rings * n_wp, || format!("trace {trace}: {} grants", seen.len()))?;
    }
    for _ in 0..10_000 {
        let mu = rng.random_range(0.0..200.0);
        let sigma = rng.random_range(0.1..50.0);
        let f = rng.random_range(0.0..200.0);
        ensure(gaussian_force_term(mu, mu, sigma) == 1.0, || format!("peak at mu={mu} is not 1"))?;
        ensure(gaussian_force_term(f, mu, sigma) <= 1.0, || format!("value above peak at f={f}"))?;
    }
    Ok(format!("10000 traces, {grants_total} ring grants, all exact"))
}

// 5 -------------------------------------------------------------------------

/// Term-by-term sum of `w gamma^t` over `[a, b]`, or until the tail is negligible.
fn brute(w: f64, a: u64, b: Option<u64>, gamma: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut abs = 0.0;
    let mut t = a;
    let mut g = gamma.powi(a as i32);
    loop {
        if b.is_some_and(|b| t > b) || (b.is_none() && g < 1e-18) {
            break;
        }
        sum += w * g;
        abs += (w * g).abs();
        g *= gamma;
        t += 1;
    }
    (sum, abs)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let horizon = rng.random_range(2..=300u64);
        let t2 = rng.random_range(2..=horizon);
        let t1 = rng.random_range(1..t2);
        let wq_max = rng.random_range(0.5..100.0);
        let spec = FeasibilitySpec {
            gamma: rng.random_range(0.5..0.995),
            t1,
            t2,
            horizon,
            wq_max,
            wq_poor: wq_max * rng.random_range(0.0..0.999),
            wq2: rng.random_range(-10.0..0.0),
            wt: rng.random_range(0.0..5000.0),
        };
        let g = spec.gamma;
        let wt_at = |t: u64| g.powi(t as i32) * spec.wt;
        let (q_opt, a_opt) = brute(spec.wq_max, 0, Some(t2), g);
        let (q_lazy, a_lazy) = brute(spec.wq_poor, 0, Some(t1), g);
        let (q_inf, a_inf) = brute(spec.wq_max, 0, None, g);
        let (q_tail, a_tail) = brute(spec.wq2, t2 + 1, None, g);
        let naive = strategy_returns(&spec, Formulation::Naive).map_err(|e| e.to_string())?;
        let bounded = strategy_returns(&spec, Formulation::Bounded).map_err(|e| e.to_string())?;
        let checks = [
            (naive.r_optimal, q_opt + wt_at(t2), a_opt + wt_at(t2)),
            (naive.r_lazy, q_lazy + wt_at(t1), a_lazy + wt_at(t1)),
            (naive.r_forever, q_inf, a_inf),
            (bounded.r_forever, q_opt + q_tail, a_opt + a_tail),
        ];
        for (k, (closed, bf, scale)) in checks.into_iter().enumerate() {
            let e = rel(closed, bf, scale);
            worst = worst.max(e);
            ensure(e <= 1e-6, || format!("spec {i} return {k}: {closed} vs {bf} ({e:e})"))?;
        }
        let w = rng.random_range(-50.0..50.0);
        let a = rng.random_range(0..100u64);
        let b = a + rng.random_range(0..200u64);
        let closed = discounted_sum(w, a, Some(b), g).map_err(|e| e.to_string())?;
        let (bf, scale) = brute(w, a, Some(b), g);
        let e = rel(closed, bf, scale);
        worst = worst.max(e);
        ensure(e <= 1e-6, || format!("spec {i} sum: {closed} vs {bf}"))?;

        // at W_T = U the optimal and lazy returns coincide
        let u = upper_bound(&spec).map_err(|e| e.to_string())?;
        let opt_u = q_opt + g.powi(t2 as i32) * u;
        let lazy_u = q_lazy + g.powi(t1 as i32) * u;
        let e = rel(opt_u, lazy_u, opt_u.abs() + lazy_u.abs());
        worst = worst.max(e);
        ensure(e <= 1e-6, || format!("spec {i} bound: {opt_u} vs {lazy_u}"))?;
    }
    Ok(format!("1000 specs, worst relative error {worst:.2e}"))
}

// 6 -------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = PolicyParams::new(2, 1, &[2], -0.3, &mut rng);
    let actor_params = p.actor.param_count() + p.log_std.len();
    ensure(actor_params == 10, || format!("toy policy has {actor_params} parameters"))?;
    let n = 12;
    let obs = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
    let actions = Array2::from_shape_fn((n, 1), |_| rng.random_range(-1.0..1.0));
    // log-ratios held away from the clip kinks at ln 0.8 and ln 1.2
    let offsets = [-0.4, -0.1, 0.0, 0.1, 0.3];
    let old_log_prob = Array1::from_shape_fn(n, |i| {
        let m = p.mean(&obs.row(i).to_vec()).unwrap();
        p.log_prob(&m, &actions.row(i).to_vec()) - offsets[i % offsets.len()]
    });
    let batch = Batch {
        obs,
        actions,
        old_log_prob,
        advantages: Array1::from_shape_fn(n, |i| if i % 3 == 0 { -0.9 } else { 1.1 }),
        returns: Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0)),
    };
    let c = LossCoefficients {
        clip: 0.2,
        value: 0.5,
        entropy: 0.01,
    };
    let analytic = ppo_loss(&p, &batch, &c).1.to_flat();
    let base = p.to_flat();
    let h = 1e-6;
    let mut q = p.clone();
    let mut worst = 0.0_f64;
    for k in 0..base.len() {
        let mut x = base.clone();
        x[k] += h;
        q.set_flat(&x).map_err(|e| e.to_string())?;
        let up = ppo_loss(&q, &batch, &c).0.total;
        x[k] -= 2.0 * h;
        q.set_flat(&x).map_err(|e| e.to_string())?;
        let down = ppo_loss(&q, &batch, &c).0.total;
        let fd = (up - down) / (2.0 * h);
        let e = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-4);
        worst = worst.max(e);
        ensure(e <= 1e-4, || format!("parameter {k}: analytic {} vs {fd}", analytic[k]))?;
    }
    Ok(format!("{} parameters ({actor_params} in the policy), worst relative error {worst:.2e}", base.len()))
}

// 7 -------------------------------------------------------------------------

fn median_of(arms: &[ArmSummary], p: Preset) -> Result<f64, String> {
    arms.iter()
        .find(|a| a.preset == p)
        .map(|a| a.median_success)
        .ok_or_else(|| format!("no {} arm", p.as_str()))
}

fn rates(arms: &[ArmSummary]) -> String {
    arms.iter()
        .map(|a| format!("{} {:?} (median {:.2})", a.preset.as_str(), a.success_rates, a.median_success))
        .collect::<Vec<_>>()
        .join("; ")
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let dir = runs_root().join("ordering");
    let out = run_suite(&RunConfig::default(), &Preset::ALL, &dir, forced()).map_err(|e| e.to_string())?;
    let arms: Vec<ArmSummary> = out.into_iter().map(|o| o.summary).collect();
    let minutes = started.elapsed().as_secs_f64() / 60.0;
    let naive = median_of(&arms, Preset::NonBoundedReward)?;
    let bounded = median_of(&arms, Preset::BoundedReward)?;
    let curr = median_of(&arms, Preset::BoundedLlmCurr)?;
    let detail = format!("{}; {minutes:.1} min", rates(&arms));
    ensure(bounded >= naive + 0.20, || format!("bounded not 20 points above naive: {detail}"))?;
    ensure(curr >= bounded, || format!("curriculum below bounded: {detail}"))?;
    Ok(detail)
}

// 8 -------------------------------------------------------------------------

fn report(success: f64, nav_mean: f64, nav_var: f64) -> EvalReport {
    EvalReport {
        n_episodes: 50,
        successes: (success * 50.0).round() as usize,
        success_rate: success,
        collisions: 0,
        timeouts: 0,
        mean_completion_steps: Some(25.0),
        iae_mean: Some(250.0),
        nav_force_mean: Some(nav_mean),
        nav_force_std: Some(nav_var.sqrt()),
        landing_force_mean: Some(60.0),
        landing_force_std: Some(3.0),
        force_percentiles: Some([50.0, 55.0, 60.0, 65.0, 70.0]),
        excluded_episode_count: 0,
        mean_return: 0.0,
    }
}

fn two_step(prev: EvalReport, cur: EvalReport) -> MetricsHistory {
    let mut h = MetricsHistory::default();
    for (i, r) in [prev, cur].into_iter().enumerate() {
        h.push(HistoryEntry {
            iteration: i as u64 + 1,
            env_steps: 0,
            report: r,
            weights: RewardWeights::default(),
            analysis: String::new(),
            decision: WeightDecision::Unchanged,
        })
        .unwrap();
    }
    h
}

/// Checks the clip and terminal-reward invariants on every logged weight set.
fn check_weight_log(root: &Path, seeds: &[u64], c: &CurriculumConfig) -> Result<usize, String> {
    let mut n = 0;
    for &seed in seeds {
        let path = seed_dir(root, seed).join(WEIGHTS_FILE);
        let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
            let w: RewardWeights = serde_json::from_value(v["weights"].clone()).map_err(|e| e.to_string())?;
            let spread = goal_spread(&w, c);
            ensure(spread <= c.clip_factor * (1.0 + 1e-12), || format!("seed {seed}: goal spread {spread}"))?;
            let wt = w.terminal_reward();
            ensure(wt > 0.0 && wt < WT_CEILING_RATIO * w.wq_max(), || format!("seed {seed}: W_T {wt}"))?;
            n += 1;
        }
    }
    Ok(n)
}

fn criterion_8() -> Outcome {
    let c = CurriculumConfig::default();
    let table = [
        (two_step(report(0.9, 61.0, 80.0), report(0.88, 62.0, 60.0)), true),
        (two_step(report(0.9, 61.0, 80.0), report(0.88, 68.0, 60.0)), false),
        (two_step(report(0.9, 61.0, 80.0), report(0.7, 62.0, 60.0)), false),
    ];
    for (i, (h, want)) in table.iter().enumerate() {
        ensure(maintain(h, &c) == *want, || format!("maintenance example {} gave {}", i + 1, !want))?;
    }

    let mut base = RunConfig::default();
    // navigation at 10% of the quality rewards it is weighed against
    base.weights = base.weights.with_terminal_reward(100.0);
    let dir = runs_root().join("imbalanced");
    let out = run_suite(&base, &[Preset::BoundedReward, Preset::BoundedLlmCurr], &dir, forced())
        .map_err(|e| e.to_string())?;
    let arms: Vec<ArmSummary> = out.into_iter().map(|o| o.summary).collect();

    let curr_dir = dir.join(Preset::BoundedLlmCurr.as_str());
    let mut logged = check_weight_log(&curr_dir, &base.seeds, &c.anchored(&base.weights))?;
    let ordering = runs_root().join("ordering").join(Preset::BoundedLlmCurr.as_str());
    if ordering.exists() {
        logged += check_weight_log(&ordering, &base.seeds, &c.anchored(&RewardWeights::default()))?;
    }

    let plain = median_of(&arms, Preset::BoundedReward)?;
    let curr = median_of(&arms, Preset::BoundedLlmCurr)?;
    let detail = format!("maintenance table ok; {logged} weight updates within invariants; {}", rates(&arms));
    ensure(curr > plain, || format!("curriculum median not strictly higher: {detail}"))?;
    Ok(detail)
}

// 9 -------------------------------------------------------------------------

fn small_run() -> RunConfig {
    let mut c = RunConfig::for_preset(Preset::BoundedLlmCurr);
    c.seeds = vec![7];
    c.train.total_steps = 12_288;
    c.train.rollout_length = 512;
    c.train.minibatches = 8;
    c.train.hidden = vec![16, 16];
    c.curriculum.warmup_steps = 4096;
    c.curriculum.cadence_steps = 2048;
    c.curriculum.eval_episodes = 8;
    c.final_eval_episodes = 4;
    c
}

fn criterion_9() -> Outcome {
    let root = runs_root().join("determinism");
    let first = root.join("first");
    run_experiment(&small_run(), &first, forced()).map_err(|e| e.to_string())?;
    let snapshot: RunConfig = read_json(&seed_dir(&first, 7).join(CONFIG_FILE)).map_err(|e| e.to_string())?;
    let replay = root.join("replay");
    run_experiment(&snapshot, &replay, forced()).map_err(|e| e.to_string())?;
    let a = fs::read(seed_dir(&first, 7).join(METRICS_FILE)).map_err(|e| e.to_string())?;
    let b = fs::read(seed_dir(&replay, 7).join(METRICS_FILE)).map_err(|e| e.to_string())?;
    let lines = a.iter().filter(|c| **c == b'\n').count();
    ensure(lines > 0, || "empty metrics log".into())?;
    ensure(a == b, || "replayed metrics.jsonl differs".into())?;
    Ok(format!("{lines} metrics lines, {} bytes identical", a.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "feasibility bracket", criterion_1),
        (2, "naive infeasibility", criterion_2),
        (3, "strategy dominance", criterion_3),
        (4, "reward-engine properties", criterion_4),
        (5, "closed form vs brute force", criterion_5),
        (6, "gradient check", criterion_6),
        (7, "end-to-end ordering", criterion_7),
        (8, "curriculum suite", criterion_8),
        (9, "determinism", criterion_9),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("criterion {id} ({name}): PASS [{secs:.1}s] {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{secs:.1}s] {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
