use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::WorldConfig;
use super::surface::SurfaceParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: f64,
    pub std: f64,
}

impl GaussianSpec {
    /// Draws until the sample is strictly positive.
    fn sample_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mean, self.std).expect("std must be finite and >= 0");
        loop {
            let v: f64 = normal.sample(rng);
            if v > 0.0 {
                return v;
            }
        }
    }
}

/// Ranges for per-episode environment sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationSpec {
    pub curvature_levels: Vec<f64>,
    pub sliding: GaussianSpec,
    pub torsional: GaussianSpec,
    pub rolling: GaussianSpec,
    /// Distance kept between sampled waypoints and the table edge.
    pub waypoint_margin: f64,
    pub min_waypoint_separation: f64,
    /// Minimum planar distance between the start point and any waypoint.
    pub min_start_clearance: f64,
    pub waypoint_count: usize,
    /// Everything that is not randomized comes from here.
    pub base: WorldConfig,
}

impl Default for RandomizationSpec {
    fn default() -> Self {
        Self {
            curvature_levels: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            sliding: GaussianSpec { mean: 0.30, std: 0.05 },
            torsional: GaussianSpec { mean: 0.06, std: 0.02 },
            rolling: GaussianSpec { mean: 0.0125, std: 0.005 },
            waypoint_margin: 0.04,
            min_waypoint_separation: 0.08,
            min_start_clearance: 0.05,
            waypoint_count: 2,
            base: WorldConfig::default(),
        }
    }
}

impl RandomizationSpec {
    pub fn validate(&self) -> crate::Result<()> {
        if self.curvature_levels.is_empty()
            || self.curvature_levels.iter().any(|c| !(0.0..=1.0).contains(c))
        {
            return Err(crate::Error::config("curvature levels must be non-empty and in [0, 1]"));
        }
        for g in [self.sliding, self.torsional, self.rolling] {
            if !(g.std.is_finite() && g.std >= 0.0 && g.mean.is_finite()) {
                return Err(crate::Error::config("friction gaussian needs finite mean and std >= 0"));
            }
            if g.std == 0.0 && g.mean <= 0.0 {
                return Err(crate::Error::config("degenerate friction gaussian must have mean > 0"));
            }
        }
        if self.waypoint_count == 0 {
            return Err(crate::Error::config("waypoint_count must be >= 1"));
        }
        let e = &self.base.table_extents;
        let span = (e.x_max - e.x_min).min(e.y_max - e.y_min) - 2.0 * self.waypoint_margin;
        if span <= 0.0 || self.min_waypoint_separation >= span {
            return Err(crate::Error::config("waypoint region too small for the separation"));
        }
        Ok(())
    }
}

/// Samples one environment: curvature level, frictions, waypoints and seed.
///
/// Waypoints are drawn uniformly from the margin-inset table by rejection until
/// every pair is at least `min_waypoint_separation` apart.
pub fn sample_environment<R: Rng + ?Sized>(rng: &mut R, spec: &RandomizationSpec) -> WorldConfig {
    let level = spec.curvature_levels[rng.random_range(0..spec.curvature_levels.len())];
    let surface = SurfaceParams {
        curvature_scale: level,
        base_amplitude: spec.base.surface.base_amplitude,
        sliding_friction: spec.sliding.sample_positive(rng),
        torsional_friction: spec.torsional.sample_positive(rng),
        rolling_friction: spec.rolling.sample_positive(rng),
    };

    let e = spec.base.table_extents;
    let m = spec.waypoint_margin;
    let start = spec.base.start_xy;
    let mut points: Vec<[f64; 2]> = Vec::with_capacity(spec.waypoint_count);
    while points.len() < spec.waypoint_count {
        let cand = [
            rng.random_range(e.x_min + m..e.x_max - m),
            rng.random_range(e.y_min + m..e.y_max - m),
        ];
        let dist = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        let separated = points.iter().all(|p| dist(p, &cand) >= spec.min_waypoint_separation);
        let clear = dist(&start, &cand) >= spec.min_start_clearance;
        if separated && clear {
            points.push(cand);
        }
    }

    let mut config = spec.base.clone();
    config.surface = surface;
    config.waypoints = points
        .iter()
        .map(|&[x, y]| [x, y, surface.height(x, y)])
        .collect();
    config.rng_seed = rng.random();
    config
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sliding_mean_matches_gaussian() {
        let spec = RandomizationSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| sample_environment(&mut rng, &spec).surface.sliding_friction)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.30).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn samples_are_valid_and_on_levels() {
        let spec = RandomizationSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let levels = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let mut seen = [false; 6];
        for _ in 0..2000 {
            let c = sample_environment(&mut rng, &spec);
            let idx = levels
                .iter()
                .position(|l| *l == c.surface.curvature_scale)
                .expect("curvature level");
            seen[idx] = true;
            assert!(c.surface.sliding_friction > 0.0);
            assert!(c.surface.torsional_friction > 0.0);
            assert!(c.surface.rolling_friction > 0.0);
            let (a, b) = (c.waypoints[0], c.waypoints[1]);
            assert!((a[0] - b[0]).hypot(a[1] - b[1]) >= spec.min_waypoint_separation);
            c.validate().unwrap();
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn non_positive_draws_are_resampled() {
        let g = GaussianSpec { mean: 0.0, std: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert!(g.sample_positive(&mut rng) > 0.0);
        }
    }

    #[test]
    fn same_rng_state_same_environment() {
        let spec = RandomizationSpec::default();
        let a = sample_environment(&mut ChaCha8Rng::seed_from_u64(9), &spec);
        let b = sample_environment(&mut ChaCha8Rng::seed_from_u64(9), &spec);
        assert_eq!(a, b);
    }
}
