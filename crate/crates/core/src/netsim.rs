//! Monte Carlo estimate of the typical link's rate over Poisson networks.
//!
//! Transmitters form a PPP of density `lambda` on a disk of radius `R_sim`
//! around the typical receiver. A transmitter interferes only if it uses the
//! typical subchannel (probability `P_fo`), has a LoS path to the receiver,
//! and (in windowed mode) its direction falls inside the angular window that
//! maps onto the subchannel's band. Interferer gain is evaluated at `f_o`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand_distr::{Distribution, Poisson};

use crate::antenna::AntennaConfig;
use crate::numerics::{pairwise_sum, RngStream};
use crate::propagation::ChannelConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceMode {
    /// Only interferers whose direction lies in the subchannel's angular window.
    #[default]
    Windowed,
    /// Every co-band LoS interferer, weighted by its full pattern.
    FullPattern,
    /// Noise only.
    Off,
}

impl std::str::FromStr for InterferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "windowed" => Ok(Self::Windowed),
            "full" | "full-pattern" => Ok(Self::FullPattern),
            "off" => Ok(Self::Off),
            other => Err(Error::invalid(format!(
                "unknown interference mode `{other}` (windowed|full|off)"
            ))),
        }
    }
}

impl std::fmt::Display for InterferenceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Windowed => "windowed",
            Self::FullPattern => "full",
            Self::Off => "off",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkScenario {
    /// Transmitter density `lambda_THz`, 1/m^2.
    pub density: f64,
    /// Transmit PSD `q_t`, W/Hz.
    pub transmit_psd: f64,
    /// Noise PSD `sigma_o^2`, W/Hz.
    pub noise_psd: f64,
    /// Typical link center frequency `f_o`, Hz.
    pub frequency: f64,
    /// Subchannel bandwidth `B_o`, Hz.
    pub bandwidth: f64,
    /// Typical link distance `r_o`, m.
    pub distance: f64,
    /// Typical link direction `theta_o`, rad.
    pub angle: f64,
    /// Radius of the simulated disk, m.
    pub sim_radius: f64,
    pub trials: usize,
    pub interference_mode: InterferenceMode,
}

impl NetworkScenario {
    pub fn validate(&self, antenna: &AntennaConfig) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be > 0, got {v}")))
            }
        };
        positive(self.density, "density")?;
        positive(self.transmit_psd, "transmit PSD")?;
        positive(self.noise_psd, "noise PSD")?;
        positive(self.bandwidth, "bandwidth")?;
        if !(self.distance >= 0.0) {
            return Err(Error::invalid("typical distance must be >= 0"));
        }
        if !(self.angle > 0.0 && self.angle < FRAC_PI_2) {
            return Err(Error::invalid("typical angle must lie in (0, pi/2)"));
        }
        let fco = antenna.cutoff_frequency();
        if !(self.frequency > fco) {
            return Err(Error::SlowWave {
                frequency: self.frequency,
                cutoff: fco,
            });
        }
        if !(self.sim_radius > self.distance) {
            return Err(Error::invalid(
                "simulation radius must exceed the typical distance",
            ));
        }
        if self.trials < 1 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        Ok(())
    }

    /// Probability `P_fo` that a transmitter's subchannel overlaps the typical one.
    pub fn co_band_probability(&self, antenna: &AntennaConfig) -> Result<f64> {
        let th = self.angle;
        let p = 2.0 * self.bandwidth * th.sin() * th.tan() / (PI * antenna.cutoff_frequency());
        if p > 1.0 {
            Err(Error::ThinningProbability(p))
        } else {
            Ok(p)
        }
    }

    /// Interfering directions `[theta_o - w/2, theta_o + w/2]`, clipped to `(0, pi/2)`.
    pub fn angular_window(&self, antenna: &AntennaConfig) -> Result<(f64, f64)> {
        let w = antenna.angle_window(self.angle, self.bandwidth)?;
        Ok((
            (self.angle - 0.5 * w).max(0.0),
            (self.angle + 0.5 * w).min(FRAC_PI_2),
        ))
    }

    /// Received signal PSD of the typical link.
    pub fn signal_psd(&self, antenna: &AntennaConfig, channel: &ChannelConfig) -> Result<f64> {
        Ok(self.transmit_psd
            * antenna.effective_gain(self.frequency, self.angle)?
            * channel.path_loss(self.frequency, self.distance))
    }

    /// Rate with no interference: `B_o log2(1 + S / sigma^2)`.
    pub fn noise_limited_rate(
        &self,
        antenna: &AntennaConfig,
        channel: &ChannelConfig,
    ) -> Result<f64> {
        Ok(
            self.bandwidth * (self.signal_psd(antenna, channel)? / self.noise_psd).ln_1p()
                / std::f64::consts::LN_2,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Distance to the typical receiver, m.
    pub distance: f64,
    /// Direction of the interfering link, rad.
    pub direction: f64,
    pub co_band: bool,
    pub los: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Realization {
    pub interferers: Vec<Interferer>,
}

impl Realization {
    pub fn empty() -> Self {
        Self::default()
    }
}

fn poisson_count(mean: f64, rng: &mut RngStream) -> Result<usize> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist =
        Poisson::new(mean).map_err(|e| Error::invalid(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

fn disk_radius(radius: f64, rng: &mut RngStream) -> f64 {
    radius * rng.uniform().sqrt()
}

/// One full network realization: every transmitter on the disk, with marks.
pub fn sample_realization(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    rng: &mut RngStream,
) -> Result<Realization> {
    scenario.validate(antenna)?;
    let p_band = scenario.co_band_probability(antenna)?;
    let r_sim = scenario.sim_radius;
    let n = poisson_count(scenario.density * PI * r_sim * r_sim, rng)?;
    let mut interferers = Vec::with_capacity(n);
    for _ in 0..n {
        let distance = disk_radius(r_sim, rng);
        let co_band = rng.uniform() < p_band;
        let los = rng.uniform() < channel.los_probability(distance);
        let direction = FRAC_PI_2 * rng.uniform_open();
        interferers.push(Interferer {
            distance,
            direction,
            co_band,
            los,
        });
    }
    Ok(Realization { interferers })
}

/// A realization holding only transmitters that can interfere in the
/// scenario's mode.
///
/// Independent thinning of a PPP is again a PPP, so drawing the retained
/// points directly has the same law for the rate as filtering a
/// [`sample_realization`] draw. Every returned point is co-band; LoS marks
/// are still drawn per point. In windowed mode directions are uniform over
/// the window.
pub fn sample_active_realization(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    rng: &mut RngStream,
) -> Result<Realization> {
    scenario.validate(antenna)?;
    if scenario.interference_mode == InterferenceMode::Off {
        return Ok(Realization::empty());
    }
    let p_band = scenario.co_band_probability(antenna)?;
    let (lo, hi) = match scenario.interference_mode {
        InterferenceMode::Windowed => scenario.angular_window(antenna)?,
        _ => (0.0, FRAC_PI_2),
    };
    let r_sim = scenario.sim_radius;
    let keep = p_band * (hi - lo) / FRAC_PI_2;
    let n = poisson_count(scenario.density * keep * PI * r_sim * r_sim, rng)?;
    let mut interferers = Vec::with_capacity(n);
    for _ in 0..n {
        let distance = disk_radius(r_sim, rng);
        let los = rng.uniform() < channel.los_probability(distance);
        let direction = lo + (hi - lo) * rng.uniform_open();
        interferers.push(Interferer {
            distance,
            direction,
            co_band: true,
            los,
        });
    }
    Ok(Realization { interferers })
}

/// Precomputed per-scenario constants for the inner Monte Carlo loop.
#[derive(Debug, Clone, Copy)]
struct LinkBudget {
    signal: f64,
    noise: f64,
    bandwidth: f64,
    psd: f64,
    frequency: f64,
    window: (f64, f64),
    mode: InterferenceMode,
    antenna: AntennaConfig,
    channel: ChannelConfig,
}

impl LinkBudget {
    fn new(
        scenario: &NetworkScenario,
        antenna: &AntennaConfig,
        channel: &ChannelConfig,
    ) -> Result<Self> {
        scenario.validate(antenna)?;
        Ok(Self {
            signal: scenario.signal_psd(antenna, channel)?,
            noise: scenario.noise_psd,
            bandwidth: scenario.bandwidth,
            psd: scenario.transmit_psd,
            frequency: scenario.frequency,
            window: scenario.angular_window(antenna)?,
            mode: scenario.interference_mode,
            antenna: *antenna,
            channel: *channel,
        })
    }

    fn interference(&self, realization: &Realization) -> f64 {
        let (lo, hi) = self.window;
        let mut total = 0.0;
        for it in &realization.interferers {
            if !(it.co_band && it.los) {
                continue;
            }
            let counted = match self.mode {
                InterferenceMode::Off => false,
                InterferenceMode::FullPattern => true,
                InterferenceMode::Windowed => it.direction >= lo && it.direction <= hi,
            };
            if counted {
                total += self.psd
                    * self
                        .antenna
                        .effective_gain_unchecked(self.frequency, it.direction)
                    * self.channel.path_loss(self.frequency, it.distance);
            }
        }
        total
    }

    fn rate(&self, interference: f64) -> f64 {
        self.bandwidth * (self.signal / (interference + self.noise)).ln_1p()
            / std::f64::consts::LN_2
    }
}

/// Aggregate interference PSD at the typical receiver.
pub fn interference(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    realization: &Realization,
) -> Result<f64> {
    Ok(LinkBudget::new(scenario, antenna, channel)?.interference(realization))
}

/// `B_o log2(1 + S / (I + sigma^2))` for one realization, in bit/s.
pub fn instantaneous_rate(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    realization: &Realization,
) -> Result<f64> {
    let budget = LinkBudget::new(scenario, antenna, channel)?;
    Ok(budget.rate(budget.interference(realization)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRate {
    /// Sample mean, bit/s.
    pub mean: f64,
    /// Standard error of the mean, bit/s.
    pub std_error: f64,
    pub trials: usize,
}

/// Evaluate `per_trial` on streams `(base_seed, 0..trials)`, in trial order.
pub fn run_trials<T, F>(trials: usize, base_seed: u64, per_trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync + Send,
{
    let run = |i: usize| {
        let mut rng = RngStream::new(base_seed, i as u64);
        per_trial(&mut rng)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(run).collect()
    }
}

/// Sample mean and standard error with pairwise summation.
pub fn mean_and_std_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Average rate over `scenario.trials` independent realizations.
///
/// Trial `i` draws from `RngStream(base_seed, i)`, so the result does not
/// depend on thread count or scheduling.
pub fn mean_rate(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    base_seed: u64,
) -> Result<MeanRate> {
    if scenario.trials < 2 {
        return Err(Error::invalid("mean_rate needs at least 2 trials"));
    }
    let budget = LinkBudget::new(scenario, antenna, channel)?;
    let rates = run_trials(scenario.trials, base_seed, |rng| {
        let real = sample_active_realization(scenario, antenna, channel, rng)?;
        Ok(budget.rate(budget.interference(&real)))
    })?;
    let (mean, std_error) = mean_and_std_error(&rates);
    Ok(MeanRate {
        mean,
        std_error,
        trials: scenario.trials,
    })
}

/// Empirical Laplace transform `E[exp(-s I)]` of the interference, with its
/// standard error.
pub fn empirical_laplace(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    s: f64,
    base_seed: u64,
) -> Result<(f64, f64)> {
    let budget = LinkBudget::new(scenario, antenna, channel)?;
    let values = run_trials(scenario.trials, base_seed, |rng| {
        let real = sample_active_realization(scenario, antenna, channel, rng)?;
        Ok((-s * budget.interference(&real)).exp())
    })?;
    Ok(mean_and_std_error(&values))
}
