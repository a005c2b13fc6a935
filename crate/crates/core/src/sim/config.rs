use serde::{Deserialize, Serialize};

use super::surface::SurfaceParams;
use crate::{Error, Result};

/// Axis-aligned workspace box. Leaving it counts as a collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableExtents {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Highest allowed tool height above `z = 0`.
    pub z_max: f64,
}

impl Default for TableExtents {
    fn default() -> Self {
        Self {
            x_min: -0.2,
            x_max: 0.2,
            y_min: -0.2,
            y_max: 0.2,
            z_max: 0.3,
        }
    }
}

impl TableExtents {
    /// Strict interior test in the table plane.
    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x > self.x_min && x < self.x_max && y > self.y_min && y < self.y_max
    }
}

/// Per-step pose-delta limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    /// Meters per control step along each axis.
    pub translation: f64,
    /// Radians per control step about each axis.
    pub rotation: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self {
            translation: 0.02,
            rotation: 0.05,
        }
    }
}

/// One randomized wiping environment. Units are SI throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub surface: SurfaceParams,
    /// Ordered waypoints `(x, y, z)` lying on the surface.
    pub waypoints: Vec<[f64; 3]>,
    pub target_force: f64,
    pub horizon: u32,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub control_rate: f64,
    pub table_extents: TableExtents,
    pub rng_seed: u64,
    #[serde(default)]
    pub action_bounds: ActionBounds,
    #[serde(default = "default_wipe_radius")]
    pub wipe_radius: f64,
    #[serde(default = "default_force_limit")]
    pub force_limit: f64,
    #[serde(default = "default_hover_height")]
    pub hover_height: f64,
    #[serde(default)]
    pub start_xy: [f64; 2],
    #[serde(default = "default_start_jitter")]
    pub start_jitter: f64,
}

fn default_wipe_radius() -> f64 {
    0.02
}
fn default_force_limit() -> f64 {
    200.0
}
fn default_hover_height() -> f64 {
    0.02
}
fn default_start_jitter() -> f64 {
    0.01
}

impl Default for WorldConfig {
    fn default() -> Self {
        let surface = SurfaceParams::default();
        let waypoints = [[0.08, 0.05], [-0.06, -0.1]]
            .iter()
            .map(|&[x, y]| [x, y, surface.height(x, y)])
            .collect();
        Self {
            surface,
            waypoints,
            target_force: 60.0,
            horizon: 200,
            contact_stiffness: 6000.0,
            contact_damping: 50.0,
            control_rate: 20.0,
            table_extents: TableExtents::default(),
            rng_seed: 0,
            action_bounds: ActionBounds::default(),
            wipe_radius: default_wipe_radius(),
            force_limit: default_force_limit(),
            hover_height: default_hover_height(),
            start_xy: [0.0, 0.0],
            start_jitter: default_start_jitter(),
        }
    }
}

impl WorldConfig {
    /// Surface height with an extents check.
    pub fn surface_height(&self, x: f64, y: f64) -> Result<f64> {
        if !self.table_extents.contains_xy(x, y) {
            return Err(Error::domain(format!("({x}, {y}) is outside the table extents")));
        }
        Ok(self.surface.height(x, y))
    }

    /// Control period in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.control_rate
    }

    /// Re-project every waypoint's `z` onto the current surface.
    pub fn snap_waypoints(&mut self) {
        for w in &mut self.waypoints {
            w[2] = self.surface.height(w[0], w[1]);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.surface.validate()?;
        if self.horizon < 1 {
            return Err(Error::config("horizon must be >= 1"));
        }
        let positive = [
            ("target_force", self.target_force),
            ("contact_stiffness", self.contact_stiffness),
            ("control_rate", self.control_rate),
            ("wipe_radius", self.wipe_radius),
            ("force_limit", self.force_limit),
            ("action_bounds.translation", self.action_bounds.translation),
            ("action_bounds.rotation", self.action_bounds.rotation),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.contact_damping.is_finite() && self.contact_damping >= 0.0) {
            return Err(Error::config("contact_damping must be >= 0"));
        }
        if !(self.hover_height.is_finite() && self.hover_height > 0.0) {
            return Err(Error::config("hover_height must be > 0"));
        }
        if !(self.start_jitter.is_finite() && self.start_jitter >= 0.0) {
            return Err(Error::config("start_jitter must be >= 0"));
        }
        let e = &self.table_extents;
        if !(e.x_min < e.x_max && e.y_min < e.y_max) {
            return Err(Error::config("table extents are empty"));
        }
        if self.waypoints.is_empty() {
            return Err(Error::config("at least one waypoint is required"));
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !e.contains_xy(w[0], w[1]) {
                return Err(Error::config(format!("waypoint {i} lies outside the table extents")));
            }
            let h = self.surface.height(w[0], w[1]);
            if (w[2] - h).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "waypoint {i} is not on the surface (z = {}, surface = {h})",
                    w[2]
                )));
            }
        }
        let j = self.start_jitter;
        let [sx, sy] = self.start_xy;
        if !(e.contains_xy(sx - j, sy - j) && e.contains_xy(sx + j, sy + j)) {
            return Err(Error::config("start pose (with jitter) must lie inside the table"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        WorldConfig::default().validate().unwrap();
    }

    #[test]
    fn out_of_extents_height_is_domain_error() {
        let c = WorldConfig::default();
        assert!(matches!(c.surface_height(0.5, 0.0), Err(Error::Domain(_))));
        assert!(c.surface_height(0.1, 0.1).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = WorldConfig::default();
        c.horizon = 0;
        assert!(c.validate().is_err());

        let mut c = WorldConfig::default();
        c.target_force = 0.0;
        assert!(c.validate().is_err());

        let mut c = WorldConfig::default();
        c.waypoints[0] = [0.3, 0.0, 0.0];
        assert!(c.validate().is_err());

        let mut c = WorldConfig::default();
        c.waypoints[1][2] += 0.01;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip_uses_field_names() {
        let c = WorldConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        for key in ["\"surface\"", "\"curvature_scale\"", "\"waypoints\"", "\"target_force\"", "\"horizon\""] {
            assert!(s.contains(key), "{key} missing from {s}");
        }
        let back: WorldConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
