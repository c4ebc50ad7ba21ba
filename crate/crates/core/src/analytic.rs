//! Stochastic-geometry average rate of the typical link.
//!
//! ```text
//! R = (B_o / ln 2) int_0^inf (1/s) (1 - e^{-s X}) Theta(s) e^{-s sigma^2} ds
//! Theta(s) = exp(-2 pi lambda P_fo int_0^inf P_LoS(r) (1 - Xi(s, r)) r dr)
//! 1 - Xi(s, r) = (2/pi) int_window (1 - e^{-s q_t G(f_o, phi) rho m(r)^-eta}) dphi
//! ```
//!
//! with `X = Y m(r_o)^-eta`, `Y = q_t G(f_o, theta_o) rho` and
//! `m(r) = max(D, r)`. Directions outside the window contribute nothing,
//! which is what the `(2/pi) int (1 - e^...)` form encodes.

use std::cell::Cell;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, LN_2, PI};

use crate::antenna::AntennaConfig;
use crate::netsim::{InterferenceMode, NetworkScenario};
use crate::numerics::{
    integrate_finite, integrate_piecewise, integrate_semi_infinite, kronrod_rule, QuadratureSpec,
};
use crate::propagation::ChannelConfig;
use crate::{Error, Result};

/// Which expression stands in for `1 - Xi(s, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XiModel {
    /// `(2/pi) int_window (1 - e^{-s ...}) dphi`.
    #[default]
    Corrected,
    /// `1 - (2/pi) int_window e^{-s ...} dphi`, which ignores directions
    /// outside the window. Does not vanish as `r -> inf`, so `Theta -> 0`.
    AsPrinted,
    /// Window gain replaced by its value at `theta_o`:
    /// `(2 dtheta/pi) (1 - e^{-s Y m(r)^-eta})`.
    LowerBound,
}

/// `s q_t G rho m(r)^-eta` below which the `r` integral switches to its
/// first-order tail.
const TAIL_SWITCH: f64 = 1e-4;
/// Upper limit of the `r` integral, m.
const R_CAP: f64 = 1e4;
const MAX_WINDOW_PANELS: usize = 512;

/// Everything the nested integrals need for one scenario.
#[derive(Debug, Clone)]
pub struct RateIntegrandContext {
    y: f64,
    x: f64,
    noise: f64,
    bandwidth: f64,
    window: (f64, f64),
    thinned_density: f64,
    mode: InterferenceMode,
    channel: ChannelConfig,
    /// `(weight, q_t G(f_o, phi) rho)` on a composite Kronrod rule over the window.
    nodes: Vec<(f64, f64)>,
    max_coefficient: f64,
    gain_integral: f64,
    inner: QuadratureSpec,
    outer: QuadratureSpec,
}

impl RateIntegrandContext {
    pub fn new(
        scenario: &NetworkScenario,
        antenna: &AntennaConfig,
        channel: &ChannelConfig,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        spec.validate()?;
        channel.validate()?;
        scenario.validate(antenna)?;
        if !(channel.pathloss_exponent > 1.0) {
            return Err(Error::invalid(
                "the interference Laplace transform needs a path-loss exponent > 1",
            ));
        }
        let rho = ChannelConfig::intercept(scenario.frequency);
        let y = scenario.transmit_psd
            * antenna.effective_gain(scenario.frequency, scenario.angle)?
            * rho;
        let x = y * channel.distance_loss(scenario.distance);
        let p_band = scenario.co_band_probability(antenna)?;
        let window = match scenario.interference_mode {
            InterferenceMode::FullPattern => (0.0, FRAC_PI_2),
            _ => scenario.angular_window(antenna)?,
        };
        let coeff = |phi: f64| {
            scenario.transmit_psd * antenna.effective_gain_unchecked(scenario.frequency, phi) * rho
        };
        let nodes = window_rule(window, coeff);
        let max_coefficient = nodes.iter().map(|n| n.1).fold(0.0, f64::max);
        let gain_integral = nodes.iter().map(|(w, a)| w * a).sum();
        let inner_rel = (spec.relative_tolerance * 1e-2).max(1e-12);
        Ok(Self {
            y,
            x,
            noise: scenario.noise_psd,
            bandwidth: scenario.bandwidth,
            window,
            thinned_density: scenario.density * p_band,
            mode: scenario.interference_mode,
            channel: *channel,
            nodes,
            max_coefficient,
            gain_integral,
            inner: spec.with_tolerances(inner_rel, 0.0),
            outer: *spec,
        })
    }

    /// `Y = q_t G(f_o, theta_o) rho`.
    pub fn signal_factor(&self) -> f64 {
        self.y
    }

    /// Received signal PSD `X = Y m(r_o)^-eta`.
    pub fn received_signal(&self) -> f64 {
        self.x
    }

    /// Scale of the outer `s` substitution.
    pub fn s_scale(&self) -> f64 {
        1.0 / (self.x + self.noise)
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// `lambda P_fo`, 1/m^2.
    pub fn thinned_density(&self) -> f64 {
        self.thinned_density
    }

    fn window_width(&self) -> f64 {
        self.window.1 - self.window.0
    }

    fn complement(&self, s: f64, r: f64, model: XiModel) -> f64 {
        let loss = self.channel.distance_loss(r);
        match model {
            XiModel::Corrected => {
                FRAC_2_PI
                    * self
                        .nodes
                        .iter()
                        .map(|&(w, a)| -w * (-s * a * loss).exp_m1())
                        .sum::<f64>()
            }
            XiModel::AsPrinted => {
                1.0 - FRAC_2_PI
                    * self
                        .nodes
                        .iter()
                        .map(|&(w, a)| w * (-s * a * loss).exp())
                        .sum::<f64>()
            }
            XiModel::LowerBound => FRAC_2_PI * self.window_width() * -(-s * self.y * loss).exp_m1(),
        }
    }

    /// `1 - Xi(s, r)` under `model`, on the cached window rule.
    pub fn one_minus_xi(&self, s: f64, r: f64, model: XiModel) -> Result<f64> {
        check_s(s)?;
        if !(r >= 0.0) {
            return Err(Error::invalid("r must be >= 0"));
        }
        Ok(self.complement(s, r, model))
    }

    pub fn xi(&self, s: f64, r: f64, model: XiModel) -> Result<f64> {
        Ok(1.0 - self.one_minus_xi(s, r, model)?)
    }

    /// Corrected `1 - Xi(s, r)` by adaptive quadrature over the window,
    /// independent of the cached rule.
    pub fn one_minus_xi_adaptive(
        &self,
        s: f64,
        r: f64,
        antenna: &AntennaConfig,
        scenario: &NetworkScenario,
    ) -> Result<f64> {
        check_s(s)?;
        let rho = ChannelConfig::intercept(scenario.frequency);
        let loss = self.channel.distance_loss(r);
        let v = integrate_finite(
            |phi| {
                -(-s * scenario.transmit_psd
                    * antenna.effective_gain_unchecked(scenario.frequency, phi)
                    * rho
                    * loss)
                    .exp_m1()
            },
            self.window.0,
            self.window.1,
            &self.inner,
        )?;
        Ok(FRAC_2_PI * v)
    }

    /// `Theta(s) = E[exp(-s I)]` for the windowed (or full-pattern) interference.
    pub fn laplace_interference(&self, s: f64, model: XiModel) -> Result<f64> {
        check_s(s)?;
        if self.mode == InterferenceMode::Off {
            return Ok(1.0);
        }
        let ch = &self.channel;
        let integrand = |r: f64| ch.los_probability(r) * self.complement(s, r, model) * r;

        let exponent = if model == XiModel::AsPrinted {
            integrate_piecewise(integrand, &breakpoints(ch, R_CAP), &self.inner)?
        } else {
            let (amax, first_order) = match model {
                XiModel::LowerBound => (self.y, FRAC_2_PI * self.window_width() * self.y),
                _ => (self.max_coefficient, FRAC_2_PI * self.gain_integral),
            };
            if amax == 0.0 {
                return Ok(1.0);
            }
            let r_int = (s * amax / TAIL_SWITCH)
                .powf(1.0 / ch.pathloss_exponent)
                .clamp(2.0 * ch.blockage_a2.max(ch.reference_distance), R_CAP);
            let body = integrate_piecewise(integrand, &breakpoints(ch, r_int), &self.inner)?;
            // 1 - e^{-x} ~ x beyond r_int.
            let tail = s
                * first_order
                * integrate_semi_infinite(
                    |u| {
                        let r = r_int + u;
                        ch.los_probability(r) * ch.distance_loss(r) * r
                    },
                    r_int,
                    &self.inner,
                )?;
            body + tail
        };
        Ok((-2.0 * PI * self.thinned_density * exponent).exp())
    }

    /// Average rate in bit/s with `model` standing in for `1 - Xi`.
    pub fn average_rate(&self, model: XiModel) -> Result<f64> {
        let failure: Cell<Option<Error>> = Cell::new(None);
        let (x, noise) = (self.x, self.noise);
        let value = integrate_semi_infinite(
            |s| {
                let theta = match self.laplace_interference(s, model) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.set(Some(e));
                        return f64::NAN;
                    }
                };
                if theta == 0.0 {
                    return 0.0;
                }
                -(-s * x).exp_m1() / s * theta * (-s * noise).exp()
            },
            self.s_scale(),
            &self.outer,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(self.bandwidth / LN_2 * value?)
    }

    /// `B_o log2(1 + X / sigma^2)`.
    pub fn noise_limited_rate(&self) -> f64 {
        self.bandwidth * (self.x / self.noise).ln_1p() / LN_2
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "Laplace variable s must be > 0, got {s}"
        )))
    }
}

fn breakpoints(ch: &ChannelConfig, end: f64) -> Vec<f64> {
    let mut pts = vec![0.0, ch.reference_distance, ch.blockage_a2, end];
    pts.retain(|&p| p <= end);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn composite(window: (f64, f64), panels: usize) -> Vec<(f64, f64)> {
    let h = (window.1 - window.0) / panels as f64;
    (0..panels)
        .flat_map(|i| kronrod_rule(window.0 + i as f64 * h, window.0 + (i + 1) as f64 * h))
        .collect()
}

/// Composite rule whose panel count is doubled until the gain integral
/// settles to 1e-12.
fn window_rule(window: (f64, f64), coeff: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    if window.1 <= window.0 {
        return Vec::new();
    }
    let eval = |panels: usize| -> (Vec<(f64, f64)>, f64) {
        let nodes: Vec<(f64, f64)> = composite(window, panels)
            .into_iter()
            .map(|(phi, w)| (w, coeff(phi)))
            .collect();
        let total = nodes.iter().map(|(w, a)| w * a).sum();
        (nodes, total)
    };
    let (mut nodes, mut total) = eval(1);
    let mut panels = 1;
    while panels < MAX_WINDOW_PANELS {
        panels *= 2;
        let (next, next_total) = eval(panels);
        let settled = (next_total - total).abs() <= 1e-12 * next_total.abs();
        nodes = next;
        total = next_total;
        if settled {
            break;
        }
    }
    nodes
}

/// Average rate (bit/s) of the typical link.
pub fn average_rate(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    RateIntegrandContext::new(scenario, antenna, channel, spec)?.average_rate(XiModel::Corrected)
}

/// Lower bound on [`average_rate`] from `G(f_o, phi) <= G(f_o, theta_o)`.
///
/// Only a bound when the window gain peaks at `theta_o`, which holds when
/// `f_o` is the peak frequency of `theta_o`.
pub fn average_rate_lower_bound(
    scenario: &NetworkScenario,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    RateIntegrandContext::new(scenario, antenna, channel, spec)?.average_rate(XiModel::LowerBound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm_to_watts;
    use approx::assert_relative_eq;

    fn antenna(alpha: f64) -> AntennaConfig {
        AntennaConfig::new(0.06, 0.0035, alpha, 1.0).unwrap()
    }

    fn reference(r_o: f64) -> NetworkScenario {
        NetworkScenario {
            density: 0.5,
            transmit_psd: dbm_to_watts(-71.76),
            noise_psd: dbm_to_watts(-168.0),
            frequency: 270e9,
            bandwidth: 5e9,
            distance: r_o,
            angle: 28.7f64.to_radians(),
            sim_radius: 500.0,
            trials: 2,
            interference_mode: InterferenceMode::Windowed,
        }
    }

    fn tight() -> QuadratureSpec {
        QuadratureSpec::default().with_tolerances(1e-9, 0.0)
    }

    fn ctx(sc: &NetworkScenario, alpha: f64) -> RateIntegrandContext {
        RateIntegrandContext::new(sc, &antenna(alpha), &ChannelConfig::default(), &tight()).unwrap()
    }

    #[test]
    fn awgn_reduction() {
        for qt in [-91.76, -71.76, -51.76] {
            let sc = NetworkScenario {
                density: 1e-15,
                transmit_psd: dbm_to_watts(qt),
                ..reference(30.0)
            };
            let c = ctx(&sc, 120.0);
            assert_relative_eq!(
                c.average_rate(XiModel::Corrected).unwrap(),
                c.noise_limited_rate(),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn off_mode_is_awgn_rate() {
        let sc = NetworkScenario {
            interference_mode: InterferenceMode::Off,
            ..reference(10.0)
        };
        let c = ctx(&sc, 60.0);
        assert_eq!(
            c.laplace_interference(1e15, XiModel::Corrected).unwrap(),
            1.0
        );
        assert_relative_eq!(
            c.average_rate(XiModel::Corrected).unwrap(),
            c.noise_limited_rate(),
            max_relative = 1e-7
        );
    }

    #[test]
    fn xi_limits() {
        let c = ctx(&reference(30.0), 120.0);
        assert!(c.one_minus_xi(1e-30, 5.0, XiModel::Corrected).unwrap() < 1e-12);
        assert!(c.laplace_interference(1e-30, XiModel::Corrected).unwrap() > 1.0 - 1e-12);
        // Far field matches the first-order expansion.
        let (s, r) = (1.0 / c.received_signal(), 3e4_f64);
        let first = FRAC_2_PI * s * c.gain_integral * r.powi(-2);
        assert_relative_eq!(
            c.one_minus_xi(s, r, XiModel::Corrected).unwrap(),
            first,
            max_relative = 1e-4
        );
        assert!(c.one_minus_xi(-1.0, 1.0, XiModel::Corrected).is_err());
    }

    #[test]
    fn vanishing_window_removes_interference() {
        let sc = NetworkScenario {
            bandwidth: 1e3,
            ..reference(30.0)
        };
        let c = ctx(&sc, 120.0);
        let s = 1.0 / c.received_signal();
        assert!(c.one_minus_xi(s, 2.0, XiModel::Corrected).unwrap() < 1e-6);
    }

    #[test]
    fn cached_window_rule_matches_adaptive() {
        let a = antenna(120.0);
        for sc in [
            reference(30.0),
            NetworkScenario {
                bandwidth: 15e9,
                ..reference(30.0)
            },
        ] {
            let c = ctx(&sc, 120.0);
            for s_mult in [1e-3, 1.0, 1e3, 1e6] {
                let s = s_mult / c.received_signal();
                for r in [0.5, 5.0, 40.0, 400.0] {
                    let cached = c.one_minus_xi(s, r, XiModel::Corrected).unwrap();
                    let adaptive = c.one_minus_xi_adaptive(s, r, &a, &sc).unwrap();
                    assert_relative_eq!(cached, adaptive, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn as_printed_is_degenerate() {
        let c = ctx(&reference(30.0), 120.0);
        let s = 1.0 / c.received_signal();
        assert!(c.laplace_interference(s, XiModel::AsPrinted).unwrap() < 1e-6);
        assert!(c.laplace_interference(s, XiModel::Corrected).unwrap() > 0.1);
        // As printed, 1 - Xi tends to the outside-window mass instead of 0.
        let far = c.one_minus_xi(s, 1e6, XiModel::AsPrinted).unwrap();
        assert_relative_eq!(
            far,
            1.0 - FRAC_2_PI * (c.window.1 - c.window.0),
            max_relative = 1e-9
        );
    }

    #[test]
    fn lower_bound_below_rate_at_peak_frequency() {
        let a = antenna(60.0);
        let theta = 20f64.to_radians();
        let sc = NetworkScenario {
            angle: theta,
            frequency: a.peak_frequency(theta).unwrap(),
            density: 1.0,
            bandwidth: 15e9,
            ..reference(30.0)
        };
        let c = ctx(&sc, 60.0);
        let exact = c.average_rate(XiModel::Corrected).unwrap();
        let lb = c.average_rate(XiModel::LowerBound).unwrap();
        assert!(lb <= exact, "lb {lb} > exact {exact}");
        assert!(exact < c.noise_limited_rate());
    }

    #[test]
    fn monotone_in_density_distance_and_noise() {
        let rate = |sc: NetworkScenario| ctx(&sc, 120.0).average_rate(XiModel::Corrected).unwrap();
        let base = NetworkScenario {
            bandwidth: 15e9,
            ..reference(20.0)
        };
        assert!(
            rate(NetworkScenario {
                density: 1e-2,
                ..base
            }) >= rate(NetworkScenario {
                density: 1.0,
                ..base
            })
        );
        assert!(
            rate(NetworkScenario {
                distance: 10.0,
                ..base
            }) >= rate(NetworkScenario {
                distance: 20.0,
                ..base
            })
        );
        assert!(
            rate(base)
                >= rate(NetworkScenario {
                    noise_psd: 2.0 * base.noise_psd,
                    ..base
                })
        );
    }

    #[test]
    fn laplace_matches_monte_carlo() {
        let (a, ch) = (antenna(120.0), ChannelConfig::default());
        // A wide disk so truncation stays below the Monte Carlo noise.
        let sc = NetworkScenario {
            sim_radius: 3000.0,
            trials: 4000,
            ..reference(30.0)
        };
        let c = ctx(&sc, 120.0);
        let s = 0.3 / c.received_signal();
        let theta = c.laplace_interference(s, XiModel::Corrected).unwrap();
        let (emp, se) = crate::netsim::empirical_laplace(&sc, &a, &ch, s, 17).unwrap();
        assert!(theta > 0.2 && theta < 0.9, "theta = {theta}");
        assert!(
            (emp - theta).abs() <= 3.0 * se,
            "analytic {theta}, empirical {emp} +- {se}"
        );
    }

    #[test]
    fn rejects_small_exponent() {
        let ch = ChannelConfig {
            pathloss_exponent: 1.0,
            ..Default::default()
        };
        assert!(
            RateIntegrandContext::new(&reference(30.0), &antenna(60.0), &ch, &tight()).is_err()
        );
    }
}
