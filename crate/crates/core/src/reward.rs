//! Per-step reward and its checkpoint-gated variant.
//!
//! Weights are stored as non-negative magnitudes; penalties get their sign here.

use serde::{Deserialize, Serialize};

use crate::sim::StepInfo;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    /// Collision penalty magnitude.
    pub w_col: f64,
    /// Contact flag weight.
    pub w_con: f64,
    /// Force Gaussian weight.
    pub w_force: f64,
    /// Reward per wiped waypoint.
    pub w_way: f64,
    /// Extra reward when the last waypoint is wiped.
    pub w_final: f64,
    /// Acceleration penalty magnitude.
    pub w_ac: f64,
    /// Landing-force penalty multiplier.
    pub w_land: f64,
    /// Target normal force (N).
    pub mu: f64,
    /// Width of the force Gaussian (N).
    pub sigma: f64,
    pub align_threshold: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_col: 200.0,
            w_con: 9.0,
            w_force: 20.0,
            w_way: 300.0,
            w_final: 700.0,
            w_ac: 0.05,
            w_land: 0.0,
            mu: 60.0,
            sigma: 10.0,
            align_threshold: 0.8,
        }
    }
}

impl RewardWeights {
    /// Peak per-step quality reward (`w_con + w_force`, zero acceleration).
    pub fn wq_max(&self) -> f64 {
        self.w_con + self.w_force
    }

    /// Terminal reward earned on the final waypoint.
    pub fn terminal_reward(&self) -> f64 {
        self.w_way + self.w_final
    }

    /// Rescales the navigation weights so that `terminal_reward() == wt`.
    pub fn with_terminal_reward(mut self, wt: f64) -> Self {
        let cur = self.terminal_reward();
        if cur > 0.0 {
            let k = wt / cur;
            self.w_way *= k;
            self.w_final *= k;
        }
        self
    }

    pub fn magnitudes(&self) -> [(&'static str, f64); 7] {
        [
            ("w_col", self.w_col),
            ("w_con", self.w_con),
            ("w_force", self.w_force),
            ("w_way", self.w_way),
            ("w_final", self.w_final),
            ("w_ac", self.w_ac),
            ("w_land", self.w_land),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.magnitudes() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::config("sigma must be > 0"));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::config("mu must be > 0"));
        }
        if !(self.align_threshold > -1.0 && self.align_threshold < 1.0) {
            return Err(Error::config("align_threshold must lie in (-1, 1)"));
        }
        Ok(())
    }
}

/// Which reward formulation drives learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    Naive,
    Bounded,
}

pub const DEFAULT_RING_COUNT: usize = 5;

/// Concentric rings around the next waypoint. Each ring grants the quality
/// terms at most once per waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointLayout {
    /// Waypoint index the rings are centered on.
    pub waypoint: usize,
    pub center: [f64; 2],
    pub outer_radius: f64,
    pub visited: Vec<bool>,
}

impl CheckpointLayout {
    /// Rings centered on `center` whose outer radius reaches `previous`.
    pub fn new(waypoint: usize, center: [f64; 2], previous: [f64; 2], ring_count: usize) -> Result<Self> {
        if ring_count == 0 {
            return Err(Error::config("ring_count must be >= 1"));
        }
        Ok(Self {
            waypoint,
            center,
            outer_radius: (center[0] - previous[0]).hypot(center[1] - previous[1]),
            visited: vec![false; ring_count],
        })
    }

    pub fn ring_count(&self) -> usize {
        self.visited.len()
    }

    pub fn ring_spacing(&self) -> f64 {
        self.outer_radius / self.ring_count() as f64
    }

    /// Ring index (0 = innermost) containing the planar point, if any.
    pub fn ring_of(&self, x: f64, y: f64) -> Option<usize> {
        let d = (x - self.center[0]).hypot(y - self.center[1]);
        if self.outer_radius <= 0.0 || d > self.outer_radius {
            return None;
        }
        let idx = (d / self.ring_spacing()).floor() as usize;
        Some(idx.min(self.ring_count() - 1))
    }

    /// Marks the ring under `(x, y)` visited; true if it was not visited before.
    fn check(&mut self, x: f64, y: f64) -> bool {
        match self.ring_of(x, y) {
            Some(i) if !self.visited[i] => {
                self.visited[i] = true;
                true
            }
            _ => false,
        }
    }
}

/// Re-centers the rings on the waypoint after `wiped_waypoint`.
pub fn advance_checkpoints(
    layout: &CheckpointLayout,
    wiped_waypoint: usize,
    waypoints: &[[f64; 3]],
) -> Result<CheckpointLayout> {
    if wiped_waypoint != layout.waypoint {
        return Err(Error::usage(format!(
            "wiped waypoint {wiped_waypoint} is not the active center {}",
            layout.waypoint
        )));
    }
    let next = wiped_waypoint + 1;
    if next >= waypoints.len() {
        return Err(Error::usage("no waypoint left to center checkpoints on"));
    }
    let c = waypoints[next];
    let p = waypoints[wiped_waypoint];
    CheckpointLayout::new(next, [c[0], c[1]], [p[0], p[1]], layout.ring_count())
}

/// `exp(-(f_z - mu)^2 / (2 sigma^2))`.
pub fn gaussian_force_term(f_z: f64, mu: f64, sigma: f64) -> f64 {
    let e = f_z - mu;
    (-(e * e) / (2.0 * sigma * sigma)).exp()
}

/// Contact plus aligned-force terms, before any checkpoint gating.
pub fn quality_terms(info: &StepInfo, w: &RewardWeights) -> f64 {
    let con = if info.in_contact { w.w_con } else { 0.0 };
    let aligned = info.alignment_cosine > w.align_threshold;
    let force = if aligned {
        w.w_force * gaussian_force_term(info.f_z, w.mu, w.sigma)
    } else {
        0.0
    };
    con + force
}

fn waypoint_terms(info: &StepInfo, w: &RewardWeights) -> f64 {
    let mut r = 0.0;
    if info.waypoint_wiped_this_step.is_some() {
        r += w.w_way;
    }
    if info.final_waypoint_wiped {
        r += w.w_final;
    }
    r
}

fn penalty_terms(info: &StepInfo, w: &RewardWeights) -> f64 {
    let a = info.accel;
    let accel = w.w_ac * (a[0].abs() + a[1].abs() + a[2].abs());
    let landing = info
        .landing_force
        .map_or(0.0, |f| w.w_land * (f - w.mu).max(0.0));
    accel + landing
}

/// Ungated per-step reward.
pub fn reward_naive(info: &StepInfo, w: &RewardWeights) -> f64 {
    if info.collided {
        return -w.w_col;
    }
    quality_terms(info, w) + waypoint_terms(info, w) - penalty_terms(info, w)
}

/// Checkpoint-gated reward; returns the reward and the updated layout.
pub fn reward_bounded(
    info: &StepInfo,
    layout: &CheckpointLayout,
    w: &RewardWeights,
) -> (f64, CheckpointLayout) {
    let mut layout = layout.clone();
    let r = reward_bounded_in_place(info, &mut layout, w);
    (r, layout)
}

pub(crate) fn reward_bounded_in_place(info: &StepInfo, layout: &mut CheckpointLayout, w: &RewardWeights) -> f64 {
    if info.collided {
        return -w.w_col;
    }
    let [x, y, _] = info.ee_position;
    let gate = layout.check(x, y);
    let quality = if gate { quality_terms(info, w) } else { 0.0 };
    quality + waypoint_terms(info, w) - penalty_terms(info, w)
}

/// Reward formulation plus ring count; builds per-episode reward state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardFn {
    pub formulation: Formulation,
    pub ring_count: usize,
}

impl RewardFn {
    pub fn new(formulation: Formulation) -> Self {
        Self {
            formulation,
            ring_count: DEFAULT_RING_COUNT,
        }
    }

    pub fn episode(&self, waypoints: &[[f64; 3]], start: [f64; 2]) -> Result<EpisodeReward> {
        EpisodeReward::new(self.formulation, waypoints, start, self.ring_count)
    }
}

/// Per-episode reward state: picks the formulation and keeps the rings
/// centered on the active waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReward {
    formulation: Formulation,
    layout: Option<CheckpointLayout>,
}

impl EpisodeReward {
    /// `start` is the planar start position, which bounds the first ring set.
    pub fn new(formulation: Formulation, waypoints: &[[f64; 3]], start: [f64; 2], ring_count: usize) -> Result<Self> {
        let layout = match formulation {
            Formulation::Naive => None,
            Formulation::Bounded => {
                let c = waypoints
                    .first()
                    .ok_or_else(|| Error::config("at least one waypoint is required"))?;
                Some(CheckpointLayout::new(0, [c[0], c[1]], start, ring_count)?)
            }
        };
        Ok(Self { formulation, layout })
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn layout(&self) -> Option<&CheckpointLayout> {
        self.layout.as_ref()
    }

    pub fn reward(&mut self, info: &StepInfo, waypoints: &[[f64; 3]], w: &RewardWeights) -> f64 {
        match self.layout.as_mut() {
            None => reward_naive(info, w),
            Some(layout) => {
                let r = reward_bounded_in_place(info, layout, w);
                if let Some(i) = info.waypoint_wiped_this_step {
                    if i + 1 < waypoints.len() {
                        if let Ok(next) = advance_checkpoints(layout, i, waypoints) {
                            *layout = next;
                        }
                    }
                }
                r
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info() -> StepInfo {
        StepInfo {
            step_index: 1,
            f_z: 60.0,
            in_contact: true,
            collided: false,
            waypoint_wiped_this_step: None,
            final_waypoint_wiped: false,
            landing_force: None,
            alignment_cosine: 0.9,
            accel: [0.0; 3],
            ee_position: [0.0, 0.0, 0.0],
            active_waypoint: Some(0),
        }
    }

    fn layout() -> CheckpointLayout {
        // center (0,0), outer radius 0.1, spacing 0.02
        CheckpointLayout::new(0, [0.0, 0.0], [0.1, 0.0], 5).unwrap()
    }

    #[test]
    fn gaussian_values() {
        assert_eq!(gaussian_force_term(60.0, 60.0, 10.0), 1.0);
        assert!((gaussian_force_term(70.0, 60.0, 10.0) - (-0.5f64).exp()).abs() < 1e-15);
        let v = gaussian_force_term(0.0, 60.0, 10.0);
        assert!((v - (-18.0f64).exp()).abs() < 1e-20);
        assert!((v - 1.523e-8).abs() < 1e-10);
    }

    #[test]
    fn collision_dominates() {
        let w = RewardWeights::default();
        let mut i = info();
        i.collided = true;
        i.waypoint_wiped_this_step = Some(0);
        i.accel = [100.0; 3];
        assert_eq!(reward_naive(&i, &w), -w.w_col);
        let (r, l) = reward_bounded(&i, &layout(), &w);
        assert_eq!(r, -w.w_col);
        assert!(l.visited.iter().all(|v| !v));
    }

    #[test]
    fn peak_quality() {
        let w = RewardWeights::default();
        assert_eq!(reward_naive(&info(), &w), w.w_con + w.w_force);
    }

    #[test]
    fn misaligned_gates_force_term() {
        let w = RewardWeights::default();
        let mut i = info();
        i.alignment_cosine = 0.5;
        assert_eq!(reward_naive(&i, &w), w.w_con);
        // exactly at the threshold is not "greater than"
        i.alignment_cosine = 0.8;
        assert_eq!(reward_naive(&i, &w), w.w_con);
    }

    #[test]
    fn waypoint_and_final_rewards() {
        let w = RewardWeights::default();
        let mut i = info();
        i.in_contact = false;
        i.f_z = 0.0;
        i.alignment_cosine = 0.0;
        i.waypoint_wiped_this_step = Some(0);
        assert_eq!(reward_naive(&i, &w), w.w_way);
        i.final_waypoint_wiped = true;
        assert_eq!(reward_naive(&i, &w), w.w_way + w.w_final);
    }

    #[test]
    fn penalties_have_negative_sign() {
        let mut w = RewardWeights::default();
        w.w_land = 0.5;
        let mut i = info();
        i.in_contact = false;
        i.f_z = 80.0;
        i.alignment_cosine = 0.0;
        i.accel = [1.0, -2.0, 3.0];
        i.landing_force = Some(80.0);
        let r = reward_naive(&i, &w);
        assert!((r - (-0.05 * 6.0 - 0.5 * 20.0)).abs() < 1e-12);
    }

    #[test]
    fn ring_granted_once() {
        let w = RewardWeights::default();
        let mut i = info();
        i.ee_position = [0.05, 0.0, 0.0]; // ring 2
        let l0 = layout();
        assert_eq!(l0.ring_of(0.05, 0.0), Some(2));
        let (r1, l1) = reward_bounded(&i, &l0, &w);
        assert_eq!(r1, w.w_con + w.w_force);
        assert!(l1.visited[2]);
        i.accel = [1.0, 0.0, 0.0];
        let (r2, l2) = reward_bounded(&i, &l1, &w);
        assert_eq!(r2, -w.w_ac);
        assert_eq!(l1, l2);
    }

    #[test]
    fn outside_rings_grants_nothing() {
        let w = RewardWeights::default();
        let mut i = info();
        i.ee_position = [0.2, 0.0, 0.0];
        let (r, l) = reward_bounded(&i, &layout(), &w);
        assert_eq!(r, 0.0);
        assert!(l.visited.iter().all(|v| !v));
    }

    #[test]
    fn ring_edges() {
        let l = layout();
        assert_eq!(l.ring_of(0.0, 0.0), Some(0));
        assert_eq!(l.ring_of(0.1, 0.0), Some(4));
        assert_eq!(l.ring_of(0.1000001, 0.0), None);
        assert!((l.ring_spacing() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn advance_recenters_on_next_waypoint() {
        let wps = [[0.0, 0.0, 0.0], [0.03, 0.04, 0.0]];
        let mut l = layout();
        l.visited[3] = true;
        let n = advance_checkpoints(&l, 0, &wps).unwrap();
        assert_eq!(n.waypoint, 1);
        assert_eq!(n.center, [0.03, 0.04]);
        assert!((n.outer_radius - 0.05).abs() < 1e-15);
        assert_eq!(n.ring_count(), 5);
        assert!(n.visited.iter().all(|v| !v));
        assert!(matches!(advance_checkpoints(&n, 1, &wps), Err(Error::Usage(_))));
        assert!(matches!(advance_checkpoints(&l, 1, &wps), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_rings_rejected() {
        assert!(CheckpointLayout::new(0, [0.0, 0.0], [1.0, 0.0], 0).is_err());
    }

    #[test]
    fn weights_validation() {
        RewardWeights::default().validate().unwrap();
        let mut w = RewardWeights::default();
        w.w_ac = -1.0;
        assert!(w.validate().is_err());
        let mut w = RewardWeights::default();
        w.sigma = 0.0;
        assert!(w.validate().is_err());
        let mut w = RewardWeights::default();
        w.align_threshold = 1.0;
        assert!(w.validate().is_err());
    }

    #[test]
    fn terminal_rescale_keeps_proportions() {
        let w = RewardWeights::default().with_terminal_reward(500.0);
        assert!((w.terminal_reward() - 500.0).abs() < 1e-12);
        assert!((w.w_way / w.w_final - 300.0 / 700.0).abs() < 1e-12);
    }
}
