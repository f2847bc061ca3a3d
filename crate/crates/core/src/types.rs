//! Validated scalar quantities of the aggregation model.
//!
//! Each newtype checks its domain once at construction so the numerical code
//! downstream can assume it.

use serde::Serialize;

use crate::error::{Error, Result};

/// Per-bit probability that a sensor observation differs from the source bit.
///
/// Lives in `[0, 0.5)`. At exactly one half every estimator is useless, so that
/// value is rejected.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct NoiseLevel(pub(crate) f64);

impl NoiseLevel {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..0.5).contains(&p) {
            Ok(Self(p))
        } else {
            Err(Error::domain("noise level p", p, "[0, 0.5)"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Signal margin `1 - 2p` of the observation channel.
    #[inline]
    pub fn margin(self) -> f64 {
        1.0 - 2.0 * self.0
    }
}

/// Compression rate `N/M` of one sensor, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Rate(pub(crate) f64);

impl Rate {
    pub const ONE: Rate = Rate(1.0);

    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 && r <= 1.0 {
            Ok(Self(r))
        } else {
            Err(Error::domain("rate R", r, "(0, 1]"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Per-bit flip probability introduced by lossy compression, in `[0, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Distortion(pub(crate) f64);

impl Distortion {
    pub const ZERO: Distortion = Distortion(0.0);

    pub fn new(d: f64) -> Result<Self> {
        if (0.0..=0.5).contains(&d) {
            Ok(Self(d))
        } else {
            Err(Error::domain("distortion D", d, "[0, 0.5]"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Total rate budget `lambda = L * R` shared by all sensors.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Capacity(pub(crate) f64);

impl Capacity {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self(lambda))
        } else {
            Err(Error::domain("capacity lambda", lambda, "(0, inf)"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        Self::new(self.0 * factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_level_bounds() {
        assert!(NoiseLevel::new(0.0).is_ok());
        assert!(NoiseLevel::new(0.4999).is_ok());
        assert!(NoiseLevel::new(0.5).is_err());
        assert!(NoiseLevel::new(-1e-12).is_err());
        assert!(NoiseLevel::new(f64::NAN).is_err());
    }

    #[test]
    fn rate_bounds() {
        assert!(Rate::new(1.0).is_ok());
        assert!(Rate::new(1e-12).is_ok());
        assert!(Rate::new(0.0).is_err());
        assert!(Rate::new(1.0 + 1e-12).is_err());
    }

    #[test]
    fn distortion_and_capacity_bounds() {
        assert!(Distortion::new(0.5).is_ok());
        assert!(Distortion::new(0.50001).is_err());
        assert!(Capacity::new(0.0).is_err());
        assert!(Capacity::new(f64::INFINITY).is_err());
        assert_eq!(
            Capacity::new(500.0).unwrap().scaled(2.0).unwrap().get(),
            1000.0
        );
    }
}
