//! Leaky-wave antenna (parallel-plate waveguide, TE1 mode).
//!
//! The far-field pattern is `G(f, theta) = L |sinc((-j alpha - k0 cos theta + beta) L / 2)|`
//! with `k0 = 2 pi f / c` and `beta = k0 sqrt(1 - (f_co / f)^2)`. Radiation
//! peaks where `beta = k0 cos theta`, i.e. at `f = f_co / sin theta`, which
//! couples each direction to its own frequency.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::numerics::complex_sinc_c;
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaConfig {
    /// Aperture length `L` in meters.
    pub aperture_length: f64,
    /// Inter-plate distance `d` in meters.
    pub plate_separation: f64,
    /// Attenuation coefficient `alpha` in rad/m.
    pub attenuation: f64,
    /// Effective-gain calibration constant `xi`.
    pub gain_scale: f64,
}

impl AntennaConfig {
    pub fn new(
        aperture_length: f64,
        plate_separation: f64,
        attenuation: f64,
        gain_scale: f64,
    ) -> Result<Self> {
        let cfg = Self {
            aperture_length,
            plate_separation,
            attenuation,
            gain_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_length > 0.0 && self.aperture_length.is_finite()) {
            return Err(Error::invalid("aperture length L must be > 0"));
        }
        if !(self.plate_separation > 0.0 && self.plate_separation.is_finite()) {
            return Err(Error::invalid("plate separation d must be > 0"));
        }
        if !(self.attenuation >= 0.0 && self.attenuation.is_finite()) {
            return Err(Error::invalid("attenuation alpha must be >= 0"));
        }
        if !(self.gain_scale > 0.0 && self.gain_scale.is_finite()) {
            return Err(Error::invalid("gain scale xi must be > 0"));
        }
        Ok(())
    }

    /// TE1 cutoff `f_co = c / (2 d)` in Hz.
    pub fn cutoff_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.plate_separation)
    }

    /// Same antenna with a different attenuation coefficient.
    pub fn with_attenuation(self, attenuation: f64) -> Self {
        Self {
            attenuation,
            ..self
        }
    }

    /// Pattern magnitude `G(f, theta)` in units of `L`.
    pub fn gain(&self, f: f64, theta: f64) -> Result<f64> {
        check_fast_wave(self, f)?;
        check_angle(theta)?;
        Ok(self.gain_unchecked(f, theta))
    }

    /// Effective gain `xi * G(f, theta)`.
    pub fn effective_gain(&self, f: f64, theta: f64) -> Result<f64> {
        Ok(self.gain_scale * self.gain(f, theta)?)
    }

    /// Hot-loop version of [`effective_gain`](Self::effective_gain) for
    /// callers that validated `f` and `theta` up front.
    pub(crate) fn effective_gain_unchecked(&self, f: f64, theta: f64) -> f64 {
        self.gain_scale * self.gain_unchecked(f, theta)
    }

    pub(crate) fn gain_unchecked(&self, f: f64, theta: f64) -> f64 {
        let k0 = 2.0 * PI * f / SPEED_OF_LIGHT;
        let ratio = self.cutoff_frequency() / f;
        let beta = k0 * (1.0 - ratio * ratio).sqrt();
        let half = 0.5 * self.aperture_length;
        let z = Complex64::new((beta - k0 * theta.cos()) * half, -self.attenuation * half);
        self.aperture_length * complex_sinc_c(z).norm()
    }

    /// Frequency of maximum radiation towards `theta`: `f_co / sin theta`.
    pub fn peak_frequency(&self, theta: f64) -> Result<f64> {
        check_angle_closed(theta)?;
        Ok(self.cutoff_frequency() / theta.sin())
    }

    /// Bandwidth spanned by an angular spread `delta_theta` around `theta`.
    pub fn radiation_bandwidth(&self, theta: f64, delta_theta: f64) -> Result<f64> {
        check_angle(theta)?;
        if !(delta_theta >= 0.0) {
            return Err(Error::invalid("angular spread must be >= 0"));
        }
        Ok(self.cutoff_frequency() * delta_theta / (theta.sin() * theta.tan()))
    }

    /// Angular width covered by a subchannel of bandwidth `bandwidth` at `theta`.
    ///
    /// Inverse of [`radiation_bandwidth`](Self::radiation_bandwidth); the
    /// interfering directions are `[theta - w/2, theta + w/2]`.
    pub fn angle_window(&self, theta: f64, bandwidth: f64) -> Result<f64> {
        check_angle(theta)?;
        if !(bandwidth >= 0.0) {
            return Err(Error::invalid("bandwidth must be >= 0"));
        }
        Ok(bandwidth * theta.sin() * theta.tan() / self.cutoff_frequency())
    }

    /// Second-order expansion of the lossless (`alpha = 0`) pattern around its
    /// peak, with `beta ~ k0 (1 - f_co^2 / (2 f^2))`.
    ///
    /// Goes negative far from the peak; callers decide how to clamp.
    pub fn gain_taylor(&self, f: f64, theta: f64) -> Result<f64> {
        check_fast_wave(self, f)?;
        Ok(self.gain_taylor_unchecked(f, theta))
    }

    pub(crate) fn gain_taylor_unchecked(&self, f: f64, theta: f64) -> f64 {
        let l = self.aperture_length;
        let k0 = 2.0 * PI * f / SPEED_OF_LIGHT;
        let fco = self.cutoff_frequency();
        let detune = k0 * (1.0 - fco * fco / (2.0 * f * f) - theta.cos());
        l - l * l * l / 24.0 * detune * detune
    }
}

fn check_fast_wave(cfg: &AntennaConfig, f: f64) -> Result<()> {
    let fco = cfg.cutoff_frequency();
    if f > fco && f.is_finite() {
        Ok(())
    } else {
        Err(Error::SlowWave {
            frequency: f,
            cutoff: fco,
        })
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "angle {theta} rad outside (0, pi/2)"
        )))
    }
}

// The peak-frequency map is also defined at broadside, theta = pi/2.
fn check_angle_closed(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "angle {theta} rad outside (0, pi/2]"
        )))
    }
}
