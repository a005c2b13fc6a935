/// Unilateral linear spring-damper normal force.
///
/// `penetration` is positive when the tool is below the surface and
/// `penetration_rate` is its time derivative (positive while pressing deeper).
/// The damper opposes the motion, so a fast separation can drive the raw value
/// negative; the result is clamped at zero.
pub fn contact_force(stiffness: f64, damping: f64, penetration: f64, penetration_rate: f64) -> f64 {
    if penetration <= 0.0 {
        return 0.0;
    }
    (stiffness * penetration + damping * penetration_rate).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_penetration_no_force() {
        assert_eq!(contact_force(6000.0, 50.0, 0.0, 1.0), 0.0);
        assert_eq!(contact_force(6000.0, 50.0, -0.01, 0.0), 0.0);
    }

    #[test]
    fn one_centimeter_gives_target_force() {
        // 6000 N/m * 0.01 m
        assert!((contact_force(6000.0, 0.0, 0.01, 0.0) - 60.0).abs() < 1e-12);
    }

    #[test]
    fn fast_separation_clamps_to_zero() {
        // spring 6 N, damper -50 N
        assert_eq!(contact_force(6000.0, 50.0, 0.001, -1.0), 0.0);
    }

    #[test]
    fn pressing_adds_damping() {
        let f = contact_force(6000.0, 50.0, 0.01, 0.2);
        assert!((f - 70.0).abs() < 1e-12);
    }
}
