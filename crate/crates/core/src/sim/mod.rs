//! Point-tool wiping simulator.
//!
//! The end effector is a pose-controlled rigid point. Each control step applies a
//! clamped pose delta, resolves vertical penetration against the height field,
//! and reports the spring-damper normal force. Sliding friction damps tangential
//! motion in proportion to the normal load; torsional and rolling friction damp
//! yaw and roll/pitch the same way.

mod config;
mod contact;
mod randomize;
mod surface;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{ActionBounds, TableExtents, WorldConfig};
pub use contact::contact_force;
pub use randomize::{sample_environment, GaussianSpec, RandomizationSpec};
pub use surface::{dome, SurfaceParams, DOME_WIDTH};

use crate::{Error, Result};

/// Below this planar speed the alignment cosine is reported as zero.
pub const ALIGNMENT_EPSILON: f64 = 1e-6;

// Observation scaling so every entry is O(1).
const OBS_POSITION_SCALE: f64 = 0.2;
const OBS_VELOCITY_SCALE: f64 = 0.4;
const OBS_ACCEL_SCALE: f64 = 8.0;

/// Number of observation entries that do not depend on the waypoint count.
pub const OBS_BASE_LEN: usize = 20;

pub fn observation_len(n_waypoints: usize) -> usize {
    OBS_BASE_LEN + n_waypoints
}

/// Six-dimensional pose delta.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    /// `(dx, dy, dz)` in meters.
    pub translation: [f64; 3],
    /// `(droll, dpitch, dyaw)` in radians.
    pub rotation: [f64; 3],
}

impl Action {
    pub const DIM: usize = 6;

    pub fn zero() -> Self {
        Self::default()
    }

    /// Rejects non-finite components and clamps the rest to `bounds`.
    pub fn sanitize(&self, bounds: &ActionBounds) -> Result<Action> {
        let all = self.translation.iter().chain(self.rotation.iter());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("action {self:?}")));
        }
        let t = bounds.translation;
        let r = bounds.rotation;
        Ok(Action {
            translation: self.translation.map(|v| v.clamp(-t, t)),
            rotation: self.rotation.map(|v| v.clamp(-r, r)),
        })
    }

    /// Maps a policy output in `[-1, 1]^6` (clamped) onto physical deltas.
    pub fn from_normalized(u: &[f64], bounds: &ActionBounds) -> Result<Action> {
        if u.len() != Self::DIM {
            return Err(Error::Shape {
                expected: Self::DIM,
                actual: u.len(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("normalized action {u:?}")));
        }
        let c = |i: usize, s: f64| u[i].clamp(-1.0, 1.0) * s;
        let t = bounds.translation;
        let r = bounds.rotation;
        Ok(Action {
            translation: [c(0, t), c(1, t), c(2, t)],
            rotation: [c(3, r), c(4, r), c(5, r)],
        })
    }
}

/// Flat observation vector. See [`observe`] for the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    Completed,
    Collided,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub ee_position: [f64; 3],
    /// `(roll, pitch, yaw)` in radians, wrapped to `(-pi, pi]`.
    pub ee_orientation: [f64; 3],
    pub ee_velocity: [f64; 3],
    pub ee_acceleration: [f64; 3],
    pub normal_force: f64,
    pub in_contact: bool,
    /// First contact already happened.
    pub landed: bool,
    pub step_index: u32,
    pub waypoints_wiped: Vec<bool>,
    pub collided: bool,
    /// Signed vertical penetration at the end of the last step.
    pub penetration: f64,
    pub contact_steps: u32,
    pub status: Option<TerminalStatus>,
}

impl SimState {
    /// Index of the next waypoint to wipe, or `None` once all are wiped.
    pub fn next_waypoint(&self) -> Option<usize> {
        self.waypoints_wiped.iter().position(|w| !w)
    }

    pub fn wiped_count(&self) -> usize {
        self.waypoints_wiped.iter().filter(|w| **w).count()
    }

    pub fn is_terminal(&self) -> bool {
        self.status.is_some()
    }
}

/// Per-step events consumed by the reward engine and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step_index: u32,
    pub f_z: f64,
    pub in_contact: bool,
    pub collided: bool,
    pub waypoint_wiped_this_step: Option<usize>,
    pub final_waypoint_wiped: bool,
    /// Normal force of the first contact of the episode; `Some` only on that step.
    pub landing_force: Option<f64>,
    pub alignment_cosine: f64,
    pub accel: [f64; 3],
    pub ee_position: [f64; 3],
    /// Waypoint the tool was heading to when the step began.
    pub active_waypoint: Option<usize>,
}

impl StepInfo {
    pub fn landing_event(&self) -> bool {
        self.landing_force.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SimState,
    pub observation: Observation,
    pub info: StepInfo,
}

impl StepOutcome {
    pub fn status(&self) -> Option<TerminalStatus> {
        self.state.status
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Builds the observation for `state`.
///
/// Layout: relative vector to the next waypoint (3), next-waypoint one-hot (n),
/// tool position (3), sine and cosine of roll/pitch/yaw (6), velocity (3),
/// acceleration (3), normal force over target force and the contact flag (2).
pub fn observe(state: &SimState, config: &WorldConfig) -> Observation {
    let n = config.waypoints.len();
    let mut o = Vec::with_capacity(observation_len(n));
    let p = state.ee_position;
    match state.next_waypoint() {
        Some(i) => {
            let w = config.waypoints[i];
            o.extend((0..3).map(|k| (w[k] - p[k]) / OBS_POSITION_SCALE));
        }
        None => o.extend([0.0; 3]),
    }
    let next = state.next_waypoint();
    o.extend((0..n).map(|i| if Some(i) == next { 1.0 } else { 0.0 }));
    o.extend(p.iter().map(|v| v / OBS_POSITION_SCALE));
    for a in state.ee_orientation {
        o.push(a.sin());
        o.push(a.cos());
    }
    o.extend(state.ee_velocity.iter().map(|v| v / OBS_VELOCITY_SCALE));
    o.extend(state.ee_acceleration.iter().map(|v| v / OBS_ACCEL_SCALE));
    o.push(state.normal_force / config.target_force);
    o.push(if state.in_contact { 1.0 } else { 0.0 });
    Observation(o)
}

/// Starts an episode hovering above the configured start point.
///
/// The seed only jitters the start position inside `start_jitter`.
pub fn reset(config: &WorldConfig, seed: u64) -> Result<(SimState, Observation)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = config.start_jitter;
    let (jx, jy) = if j > 0.0 {
        (rng.random_range(-j..=j), rng.random_range(-j..=j))
    } else {
        (0.0, 0.0)
    };
    let x = config.start_xy[0] + jx;
    let y = config.start_xy[1] + jy;
    let z = config.surface.height(x, y) + config.hover_height;
    let state = SimState {
        ee_position: [x, y, z],
        ee_orientation: [0.0; 3],
        ee_velocity: [0.0; 3],
        ee_acceleration: [0.0; 3],
        normal_force: 0.0,
        in_contact: false,
        landed: false,
        step_index: 0,
        waypoints_wiped: vec![false; config.waypoints.len()],
        collided: false,
        penetration: -config.hover_height,
        contact_steps: 0,
        status: None,
    };
    let obs = observe(&state, config);
    Ok((state, obs))
}

/// Advances the simulation by one control step.
pub fn step(state: &SimState, action: &Action, config: &WorldConfig) -> Result<StepOutcome> {
    if state.is_terminal() || state.collided {
        return Err(Error::usage("cannot step a terminal state; call reset"));
    }
    if state.step_index >= config.horizon {
        return Err(Error::usage("episode horizon already reached"));
    }
    let action = action.sanitize(&config.action_bounds)?;
    let rate = config.control_rate;
    let load = state.normal_force / config.target_force;
    let s = &config.surface;

    // Friction damps commanded motion in proportion to the normal load.
    let slide = 1.0 / (1.0 + s.sliding_friction * load);
    let roll = 1.0 / (1.0 + s.rolling_friction * load);
    let twist = 1.0 / (1.0 + s.torsional_friction * load);

    let p0 = state.ee_position;
    let p = [
        p0[0] + action.translation[0] * slide,
        p0[1] + action.translation[1] * slide,
        p0[2] + action.translation[2],
    ];
    let o0 = state.ee_orientation;
    let orientation = [
        wrap_angle(o0[0] + action.rotation[0] * roll),
        wrap_angle(o0[1] + action.rotation[1] * roll),
        wrap_angle(o0[2] + action.rotation[2] * twist),
    ];
    let velocity = [0, 1, 2].map(|k| (p[k] - p0[k]) * rate);
    let accel = [0, 1, 2].map(|k| (velocity[k] - state.ee_velocity[k]) * rate);

    let penetration = s.height(p[0], p[1]) - p[2];
    let rate_of_penetration = (penetration - state.penetration.max(0.0)) * rate;
    let f_z = contact_force(
        config.contact_stiffness,
        config.contact_damping,
        penetration,
        rate_of_penetration,
    );
    let in_contact = f_z > 0.0;

    let inside = config.table_extents.contains_xy(p[0], p[1]) && p[2] < config.table_extents.z_max;
    let collided = !inside || f_z > config.force_limit;

    let landing_force = (in_contact && !state.landed).then_some(f_z);

    let active = state.next_waypoint();
    let alignment_cosine = match active {
        Some(i) => {
            let w = config.waypoints[i];
            let (vx, vy) = (velocity[0], velocity[1]);
            let (dx, dy) = (w[0] - p[0], w[1] - p[1]);
            let vn = vx.hypot(vy);
            let dn = dx.hypot(dy);
            if vn < ALIGNMENT_EPSILON || dn == 0.0 {
                0.0
            } else {
                ((vx * dx + vy * dy) / (vn * dn)).clamp(-1.0, 1.0)
            }
        }
        None => 0.0,
    };

    let mut wiped = state.waypoints_wiped.clone();
    let mut wiped_now = None;
    if !collided && in_contact {
        if let Some(i) = active {
            let w = config.waypoints[i];
            if (w[0] - p[0]).hypot(w[1] - p[1]) <= config.wipe_radius {
                wiped[i] = true;
                wiped_now = Some(i);
            }
        }
    }
    let all_wiped = wiped.iter().all(|w| *w);
    let final_waypoint_wiped = wiped_now.is_some() && all_wiped;

    let step_index = state.step_index + 1;
    let status = if collided {
        Some(TerminalStatus::Collided)
    } else if all_wiped {
        Some(TerminalStatus::Completed)
    } else if step_index >= config.horizon {
        Some(TerminalStatus::TimedOut)
    } else {
        None
    };

    let next = SimState {
        ee_position: p,
        ee_orientation: orientation,
        ee_velocity: velocity,
        ee_acceleration: accel,
        normal_force: f_z,
        in_contact,
        landed: state.landed || in_contact,
        step_index,
        waypoints_wiped: wiped,
        collided,
        penetration,
        contact_steps: state.contact_steps + u32::from(in_contact),
        status,
    };
    let info = StepInfo {
        step_index,
        f_z,
        in_contact,
        collided,
        waypoint_wiped_this_step: wiped_now,
        final_waypoint_wiped,
        landing_force,
        alignment_cosine,
        accel,
        ee_position: p,
        active_waypoint: active,
    };
    let observation = observe(&next, config);
    Ok(StepOutcome {
        state: next,
        observation,
        info,
    })
}

/// Owning wrapper that keeps the current state next to its configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: WorldConfig,
    state: SimState,
}

impl Simulator {
    pub fn new(config: WorldConfig, seed: u64) -> Result<(Self, Observation)> {
        let (state, obs) = reset(&config, seed)?;
        Ok((Self { config, state }, obs))
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn step(&mut self, action: &Action) -> Result<(Observation, StepInfo)> {
        let out = step(&self.state, action, &self.config)?;
        self.state = out.state;
        Ok((out.observation, out.info))
    }
}
