use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest admissible lap width, exclusive: `(2/3) r sin(theta/2)`.
pub fn max_lap_width<T: Scalar>(range: T, theta: T) -> T {
    T::of(2.0) / T::of(3.0) * range * (theta / T::of(2.0)).sin()
}

/// Largest plane spacing for which the sonar fans of three consecutive planes still
/// overlap: `sqrt(r^2 - 2.25 w^2) - 1.5 w cot(theta/2)`.
pub fn max_delta_h<T: Scalar>(range: T, theta: T, lap_width: T) -> Result<T> {
    let limit = max_lap_width(range, theta);
    if !(lap_width > T::zero() && lap_width < limit) {
        return Err(Error::Config(format!(
            "lap width violates 0 < w < (2/3) r sin(theta/2): w = {lap_width}, limit = {limit}"
        )));
    }
    let w15 = T::of(1.5) * lap_width;
    Ok((range * range - w15 * w15).sqrt() - w15 / (theta / T::of(2.0)).tan())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_bounds() {
        let theta = 120f64.to_radians();
        assert!((max_delta_h(150.0, theta, 25.0).unwrap() - 123.59).abs() < 0.01);
        assert!((max_lap_width(150.0, theta) - 86.60).abs() < 0.01);
        let b = max_delta_h(100.0, 90f64.to_radians(), 20.0).unwrap();
        assert!((b - (9100f64.sqrt() - 30.0)).abs() < 1e-9);
        assert!(matches!(
            max_delta_h(150.0, theta, 90.0),
            Err(Error::Config(_))
        ));
        let b32 = max_delta_h(150.0f32, 120f32.to_radians(), 25.0).unwrap();
        assert!((b32 - 123.59).abs() < 0.01);
    }

    #[test]
    fn bound_vanishes_at_the_lap_width_limit() {
        let theta = 120f64.to_radians();
        let w = max_lap_width(150.0, theta) * (1.0 - 1e-9);
        let b = max_delta_h(150.0, theta, w).unwrap();
        assert!(b > 0.0 && b < 1e-3);
    }
}
