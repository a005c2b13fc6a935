//! Discounted-return analysis of the quality/terminal reward trade-off.
//!
//! Two per-step aggregates are considered: a quality reward `W_q` paid every step
//! and a terminal reward `W_T` paid once on completion. Three candidate
//! strategies compete:
//!
//! - optimal: best quality until completing at step `T2`;
//! - lazy: degraded quality, completing early at `T1`;
//! - forever: best quality, never completing.
//!
//! Requiring optimal to beat lazy bounds `W_T` from above (`U`); requiring it to
//! beat forever bounds it from below (`L`). With checkpoint gating the forever
//! return is capped after `T2` steps, which moves `L` to zero or below.
//!
//! [`exact`] repeats the key quantities over big rationals so equalities such as
//! `L = U` in the worst case are decided without rounding.

pub mod exact;

use serde::{Deserialize, Serialize};

use crate::reward::Formulation;
use crate::{Error, Result};

/// Relative tolerance under which two returns count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Margin used for "much greater / much less than" recommendations.
pub const SAFE_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilitySpec {
    pub gamma: f64,
    /// Lazy completion step.
    pub t1: u64,
    /// Optimal completion step.
    pub t2: u64,
    pub horizon: u64,
    pub wq_max: f64,
    pub wq_poor: f64,
    /// Per-step quality once every checkpoint has been used (bounded only).
    pub wq2: f64,
    pub wt: f64,
}

impl Default for FeasibilitySpec {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            t1: 1,
            t2: 25,
            horizon: 200,
            wq_max: 29.0,
            wq_poor: 0.99 * 29.0,
            wq2: -1.0,
            wt: 1000.0,
        }
    }
}

impl FeasibilitySpec {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(1 <= self.t1 && self.t1 < self.t2 && self.t2 <= self.horizon) {
            return Err(Error::domain(format!(
                "need 1 <= T1 < T2 <= H, got T1={}, T2={}, H={}",
                self.t1, self.t2, self.horizon
            )));
        }
        if !(self.wq_poor < self.wq_max) {
            return Err(Error::domain("need Wq_poor < Wq_max"));
        }
        for (name, v) in [
            ("wq_max", self.wq_max),
            ("wq_poor", self.wq_poor),
            ("wq2", self.wq2),
            ("wt", self.wt),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// `Wq_poor / Wq_max`.
    pub fn poor_ratio(&self) -> f64 {
        self.wq_poor / self.wq_max
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("gamma must lie in (0, 1), got {gamma}")))
    }
}

/// Closed-form `sum_{t=t_start}^{t_end} gamma^t * w`; `t_end = None` is an
/// infinite tail.
pub fn discounted_sum(w: f64, t_start: u64, t_end: Option<u64>, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let head = gamma.powf(t_start as f64);
    match t_end {
        None => Ok(w * head / (1.0 - gamma)),
        Some(end) if end < t_start => Err(Error::domain(format!("t_end {end} < t_start {t_start}"))),
        Some(end) => Ok(w * (head - gamma.powf((end + 1) as f64)) / (1.0 - gamma)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Optimal,
    Lazy,
    Forever,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "strategies", rename_all = "kebab-case")]
pub enum Verdict {
    Dominant(Strategy),
    Tie(Vec<Strategy>),
}

impl Verdict {
    pub fn dominant(&self) -> Option<Strategy> {
        match self {
            Verdict::Dominant(s) => Some(*s),
            Verdict::Tie(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReturns {
    pub r_optimal: f64,
    pub r_lazy: f64,
    pub r_forever: f64,
    pub dominant: Verdict,
}

fn verdict(values: [(Strategy, f64); 3]) -> Verdict {
    let best = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * best.abs().max(1.0);
    let top: Vec<Strategy> = values
        .iter()
        .filter(|(_, v)| best - v <= tol)
        .map(|(s, _)| *s)
        .collect();
    if top.len() == 1 {
        Verdict::Dominant(top[0])
    } else {
        Verdict::Tie(top)
    }
}

/// Discounted returns of the three strategies.
///
/// `T1 = T2` is accepted here so degenerate ties can be inspected.
pub fn strategy_returns(spec: &FeasibilitySpec, formulation: Formulation) -> Result<StrategyReturns> {
    let g = spec.gamma;
    check_gamma(g)?;
    if spec.t1 > spec.t2 {
        return Err(Error::domain("need T1 <= T2"));
    }
    let r_optimal = discounted_sum(spec.wq_max, 0, Some(spec.t2), g)? + g.powf(spec.t2 as f64) * spec.wt;
    let r_lazy = discounted_sum(spec.wq_poor, 0, Some(spec.t1), g)? + g.powf(spec.t1 as f64) * spec.wt;
    let r_forever = match formulation {
        Formulation::Naive => discounted_sum(spec.wq_max, 0, None, g)?,
        Formulation::Bounded => {
            discounted_sum(spec.wq_max, 0, Some(spec.t2), g)? + discounted_sum(spec.wq2, spec.t2 + 1, None, g)?
        }
    };
    Ok(StrategyReturns {
        r_optimal,
        r_lazy,
        r_forever,
        dominant: verdict([
            (Strategy::Optimal, r_optimal),
            (Strategy::Lazy, r_lazy),
            (Strategy::Forever, r_forever),
        ]),
    })
}

/// Largest `W_T` for which optimal still beats lazy.
pub fn upper_bound(spec: &FeasibilitySpec) -> Result<f64> {
    let g = spec.gamma;
    check_gamma(g)?;
    if spec.t1 >= spec.t2 {
        return Err(Error::domain("upper bound needs T1 < T2 (denominator vanishes)"));
    }
    let num = discounted_sum(spec.wq_max, 0, Some(spec.t2), g)? - discounted_sum(spec.wq_poor, 0, Some(spec.t1), g)?;
    let den = g.powf(spec.t1 as f64) - g.powf(spec.t2 as f64);
    Ok(num / den)
}

/// Smallest `W_T` for which optimal still beats forever.
pub fn lower_bound(spec: &FeasibilitySpec, formulation: Formulation) -> Result<f64> {
    let g = spec.gamma;
    check_gamma(g)?;
    let w = match formulation {
        Formulation::Naive => spec.wq_max,
        Formulation::Bounded => spec.wq2,
    };
    Ok(g * w / (1.0 - g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeasibleRange {
    Interval { lo: f64, hi: f64 },
    Empty,
}

impl FeasibleRange {
    /// Open interval `(lo, hi)`, empty when `lo >= hi`.
    pub fn open(lo: f64, hi: f64) -> Self {
        if lo < hi {
            FeasibleRange::Interval { lo, hi }
        } else {
            FeasibleRange::Empty
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, FeasibleRange::Empty)
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            FeasibleRange::Interval { lo, hi } => lo < x && x < hi,
            FeasibleRange::Empty => false,
        }
    }

    pub fn intersect(&self, other: &FeasibleRange) -> FeasibleRange {
        match (*self, *other) {
            (FeasibleRange::Interval { lo: a, hi: b }, FeasibleRange::Interval { lo: c, hi: d }) => {
                FeasibleRange::open(a.max(c), b.min(d))
            }
            _ => FeasibleRange::Empty,
        }
    }
}

/// `(max(0, L), U)` with "much greater/less than" read as a multiplicative
/// `margin >= 1`: a positive `L` is raised to `margin * L` and `U` lowered to
/// `U / margin`.
pub fn feasible_range(spec: &FeasibilitySpec, formulation: Formulation, margin: f64) -> Result<FeasibleRange> {
    if !(margin >= 1.0 && margin.is_finite()) {
        return Err(Error::domain(format!("margin must be finite and >= 1, got {margin}")));
    }
    let l = lower_bound(spec, formulation)?;
    let u = upper_bound(spec)?;
    let lo = if l > 0.0 { l * margin } else { 0.0 };
    Ok(FeasibleRange::open(lo, u / margin))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub t2: u64,
    pub lower: f64,
    pub upper: f64,
    pub range: FeasibleRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T2Sweep {
    pub formulation: Formulation,
    pub margin: f64,
    pub entries: Vec<SweepEntry>,
    /// Range valid for every swept `T2` at once.
    pub intersection: FeasibleRange,
}

/// Feasible ranges for each `T2` in `t2_values` (other fields from `spec`).
pub fn sweep_t2(
    spec: &FeasibilitySpec,
    formulation: Formulation,
    t2_values: impl IntoIterator<Item = u64>,
    margin: f64,
) -> Result<T2Sweep> {
    let mut entries = Vec::new();
    let mut intersection = FeasibleRange::Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    for t2 in t2_values {
        let s = FeasibilitySpec { t2, ..*spec };
        let range = feasible_range(&s, formulation, margin)?;
        intersection = intersection.intersect(&range);
        entries.push(SweepEntry {
            t2,
            lower: lower_bound(&s, formulation)?,
            upper: upper_bound(&s)?,
            range,
        });
    }
    if entries.is_empty() {
        return Err(Error::domain("empty T2 sweep"));
    }
    Ok(T2Sweep {
        formulation,
        margin,
        entries,
        intersection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub upper: f64,
    pub upper_over_wq_max: f64,
    pub lower_naive: f64,
    pub lower_bounded: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranges {
    pub margin: f64,
    pub naive: FeasibleRange,
    pub bounded: FeasibleRange,
    pub wt_in_naive: bool,
    pub wt_in_bounded: bool,
}

/// Full report emitted by the `analyze-feasibility` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub spec: FeasibilitySpec,
    pub bounds: Bounds,
    pub ranges: Vec<Ranges>,
    pub strategy_returns_naive: StrategyReturns,
    pub strategy_returns_bounded: StrategyReturns,
    pub sweeps: Vec<T2Sweep>,
    /// Exact-arithmetic verdict with `Wq_poor -> Wq_max`.
    pub worst_case: exact::WorstCaseSweep,
}

/// Bounds, raw and safe-margin ranges, strategy returns and `T2` sweeps over
/// `[2, H]` for both formulations.
pub fn analyze(spec: &FeasibilitySpec) -> Result<FeasibilityReport> {
    spec.validate()?;
    let upper = upper_bound(spec)?;
    let bounds = Bounds {
        upper,
        upper_over_wq_max: upper / spec.wq_max,
        lower_naive: lower_bound(spec, Formulation::Naive)?,
        lower_bounded: lower_bound(spec, Formulation::Bounded)?,
    };
    let mut ranges = Vec::new();
    let mut sweeps = Vec::new();
    for margin in [1.0, SAFE_MARGIN] {
        let naive = feasible_range(spec, Formulation::Naive, margin)?;
        let bounded = feasible_range(spec, Formulation::Bounded, margin)?;
        ranges.push(Ranges {
            margin,
            naive,
            bounded,
            wt_in_naive: naive.contains(spec.wt),
            wt_in_bounded: bounded.contains(spec.wt),
        });
        for f in [Formulation::Naive, Formulation::Bounded] {
            let t2s = (spec.t1 + 1).max(2)..=spec.horizon;
            sweeps.push(sweep_t2(spec, f, t2s, margin)?);
        }
    }
    let worst_case = exact::worst_case_sweep(spec.gamma, spec.t1, (spec.t1 + 1).max(2)..=spec.horizon, spec.wq_max, spec.wq2)?;
    Ok(FeasibilityReport {
        spec: *spec,
        bounds,
        ranges,
        strategy_returns_naive: strategy_returns(spec, Formulation::Naive)?,
        strategy_returns_bounded: strategy_returns(spec, Formulation::Bounded)?,
        sweeps,
        worst_case,
    })
}
