//! Model constants.

use crate::{Error, Result};

/// The four model constants: temperature `theta`, spatial variance
/// coefficient `a` (motion variance `a·y²`), and breeding coefficients
/// `r`, `rho` (branching rate `r·y² + rho`).
///
/// Construction goes through [`ModelParams::new`], which enforces the
/// high-temperature regime `theta > 8r` and `a > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    theta: f64,
    a: f64,
    r: f64,
    rho: f64,
}

impl ModelParams {
    pub fn new(theta: f64, a: f64, r: f64, rho: f64) -> Result<Self> {
        for (name, value) in [("theta", theta), ("a", a), ("r", r), ("rho", rho)] {
            if !value.is_finite() {
                return Err(Error::NotFinite { name, value });
            }
        }
        if theta <= 0.0 {
            return Err(Error::NonPositiveTheta(theta));
        }
        if a <= 0.0 {
            return Err(Error::NonPositiveA(a));
        }
        if r < 0.0 {
            return Err(Error::NegativeRate { name: "r", value: r });
        }
        if rho < 0.0 {
            return Err(Error::NegativeRate { name: "rho", value: rho });
        }
        if theta <= 8.0 * r {
            return Err(Error::LowTemperature { theta, bound: 8.0 * r });
        }
        Ok(Self { theta, a, r, rho })
    }

    /// Reference set `(θ, a, r, ρ) = (10, 1, 1, 1)`; its wave speed is `√22`.
    pub fn p0() -> Self {
        Self { theta: 10.0, a: 1.0, r: 1.0, rho: 1.0 }
    }

    /// `(10, 1, 1, 0.1)`: slower growth, used for the long-horizon
    /// population experiments.
    pub fn low_rho() -> Self {
        Self { theta: 10.0, a: 1.0, r: 1.0, rho: 0.1 }
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }
    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }
    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }
    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Branching rate `R(y) = r·y² + ρ`.
    #[inline]
    pub fn branch_rate(&self, y: f64) -> f64 {
        self.r * y * y + self.rho
    }

    /// Spatial variance rate `A(y) = a·y²`.
    #[inline]
    pub fn spatial_variance(&self, y: f64) -> f64 {
        self.a * y * y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_reference_set() {
        assert!(ModelParams::new(10.0, 1.0, 1.0, 1.0).is_ok());
        assert_eq!(ModelParams::new(10.0, 1.0, 1.0, 1.0).unwrap(), ModelParams::p0());
    }

    #[test]
    fn low_temperature_boundary_rejected() {
        assert!(matches!(
            ModelParams::new(8.0, 1.0, 1.0, 1.0),
            Err(Error::LowTemperature { .. })
        ));
    }

    #[test]
    fn zero_a_rejected() {
        assert_eq!(ModelParams::new(10.0, 0.0, 1.0, 1.0), Err(Error::NonPositiveA(0.0)));
    }

    #[test]
    fn other_violations() {
        assert!(matches!(ModelParams::new(0.0, 1.0, 0.0, 1.0), Err(Error::NonPositiveTheta(_))));
        assert!(matches!(
            ModelParams::new(10.0, 1.0, -0.1, 1.0),
            Err(Error::NegativeRate { name: "r", .. })
        ));
        assert!(matches!(
            ModelParams::new(10.0, 1.0, 0.0, -1.0),
            Err(Error::NegativeRate { name: "rho", .. })
        ));
        assert!(matches!(ModelParams::new(f64::NAN, 1.0, 0.0, 1.0), Err(Error::NotFinite { .. })));
        // r = 0 is fine
        assert!(ModelParams::new(10.0, 1.0, 0.0, 1.0).is_ok());
    }
}
