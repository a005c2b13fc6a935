use serde::{Deserialize, Serialize};

/// Width (standard deviation, meters) of the fixed dome bump that shapes every
/// curved tabletop. Curvature levels only rescale its height.
pub const DOME_WIDTH: f64 = 0.12;

/// Height-field parameters of one tabletop plus its contact frictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    /// Fraction of the maximum curvature, in `[0, 1]`.
    pub curvature_scale: f64,
    /// Dome height in meters at `curvature_scale = 1`.
    pub base_amplitude: f64,
    pub sliding_friction: f64,
    pub torsional_friction: f64,
    pub rolling_friction: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self {
            curvature_scale: 0.0,
            base_amplitude: 0.04,
            sliding_friction: 0.30,
            torsional_friction: 0.06,
            rolling_friction: 0.0125,
        }
    }
}

/// Unit-peak smooth bump centered on the table origin.
pub fn dome(x: f64, y: f64) -> f64 {
    (-(x * x + y * y) / (2.0 * DOME_WIDTH * DOME_WIDTH)).exp()
}

impl SurfaceParams {
    /// Height of the surface at `(x, y)`; no extents check.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        if self.curvature_scale == 0.0 {
            return 0.0;
        }
        self.curvature_scale * self.base_amplitude * dome(x, y)
    }

    /// Gradient `(dh/dx, dh/dy)` of [`SurfaceParams::height`].
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let h = self.height(x, y);
        let s2 = DOME_WIDTH * DOME_WIDTH;
        (-x / s2 * h, -y / s2 * h)
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(0.0..=1.0).contains(&self.curvature_scale) {
            return Err(crate::Error::config(format!(
                "curvature_scale {} outside [0, 1]",
                self.curvature_scale
            )));
        }
        if !(self.base_amplitude.is_finite() && self.base_amplitude >= 0.0) {
            return Err(crate::Error::config("base_amplitude must be finite and >= 0"));
        }
        for (name, v) in [
            ("sliding_friction", self.sliding_friction),
            ("torsional_friction", self.torsional_friction),
            ("rolling_friction", self.rolling_friction),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::config(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(scale: f64) -> SurfaceParams {
        SurfaceParams {
            curvature_scale: scale,
            base_amplitude: 0.05,
            ..Default::default()
        }
    }

    #[test]
    fn flat_table_is_zero() {
        let p = params(0.0);
        for &(x, y) in &[(0.0, 0.0), (0.1, -0.13), (-0.19, 0.19)] {
            assert_eq!(p.height(x, y), 0.0);
        }
    }

    #[test]
    fn apex_matches_amplitude() {
        assert_eq!(params(1.0).height(0.0, 0.0), 0.05);
    }

    #[test]
    fn curvature_scales_linearly() {
        let full = params(1.0).height(0.0, 0.0);
        assert!((params(0.4).height(0.0, 0.0) - 0.4 * full).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(x in -0.2f64..0.2, y in -0.2f64..0.2, s in 0.0f64..1.0) {
            let p = params(s);
            let h = 1e-6;
            let gx = (p.height(x + h, y) - p.height(x - h, y)) / (2.0 * h);
            let gy = (p.height(x, y + h) - p.height(x, y - h)) / (2.0 * h);
            let (ax, ay) = p.gradient(x, y);
            prop_assert!((gx - ax).abs() < 1e-7);
            prop_assert!((gy - ay).abs() < 1e-7);
        }

        #[test]
        fn height_bounded_by_peak(x in -0.2f64..0.2, y in -0.2f64..0.2, s in 0.0f64..1.0) {
            let p = params(s);
            let z = p.height(x, y);
            prop_assert!(z >= 0.0 && z <= s * 0.05 + 1e-15);
        }
    }
}
