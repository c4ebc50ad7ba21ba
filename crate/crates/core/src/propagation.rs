//! LoS path loss and the 3GPP blockage model.

use std::f64::consts::PI;

use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// LoS path-loss exponent `eta`.
    pub pathloss_exponent: f64,
    /// Reference distance `D` in meters; losses are flat below it.
    pub reference_distance: f64,
    /// Blockage parameter `a1` in meters.
    pub blockage_a1: f64,
    /// Blockage parameter `a2` in meters.
    pub blockage_a2: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            pathloss_exponent: 2.0,
            reference_distance: 1.0,
            blockage_a1: 63.0,
            blockage_a2: 18.0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::invalid("path-loss exponent must be > 0"));
        }
        if !(self.reference_distance > 0.0 && self.reference_distance.is_finite()) {
            return Err(Error::invalid("reference distance D must be > 0"));
        }
        if !(self.blockage_a1 > 0.0 && self.blockage_a2 > 0.0) {
            return Err(Error::invalid("blockage parameters a1, a2 must be > 0"));
        }
        Ok(())
    }

    /// Free-space intercept `rho(f) = (c / (4 pi f))^2`.
    pub fn intercept(f: f64) -> f64 {
        let x = SPEED_OF_LIGHT / (4.0 * PI * f);
        x * x
    }

    /// Distance part `max(D, r)^-eta` of the path loss.
    pub fn distance_loss(&self, r: f64) -> f64 {
        r.max(self.reference_distance).powf(-self.pathloss_exponent)
    }

    /// `rho(f) * max(D, r)^-eta`.
    pub fn path_loss(&self, f: f64, r: f64) -> f64 {
        Self::intercept(f) * self.distance_loss(r)
    }

    /// `e^{-r/a1} + (1 - e^{-r/a1}) min(a2/r, 1)`.
    pub fn los_probability(&self, r: f64) -> f64 {
        if r <= self.blockage_a2 {
            return 1.0;
        }
        let e = (-r / self.blockage_a1).exp();
        e + (1.0 - e) * (self.blockage_a2 / r)
    }
}
