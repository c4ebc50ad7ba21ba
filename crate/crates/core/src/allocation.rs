//! Greedy subchannel allocation over a wide THz band.
//!
//! The allocator works on the lossless Taylor surrogate of the pattern. Its
//! SNR is a constant times
//!
//! ```text
//! F(f) = f^-2 (L - (L^3 pi^2 f^2 / (6 c^2)) (1 - f_co^2 / (2 f^2) - cos theta)^2)
//! ```
//!
//! which is unimodal in `f`. The first center is its maximizer; every later
//! center extends the current block by a factor `Lambda = 10^(eps/20)` on
//! whichever side has the larger `F`. With width `2 f (Lambda - 1)/(Lambda + 1)`
//! the received power ripple inside a subchannel is exactly `eps` dB under
//! free-space loss, and neighbouring subchannels touch without overlapping.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::antenna::AntennaConfig;
use crate::propagation::ChannelConfig;
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationConfig {
    /// `B_total`, Hz.
    pub total_bandwidth: f64,
    /// `(f_lo, f_hi)`, Hz.
    pub band: (f64, f64),
    /// Linear SNR threshold `gamma_th`.
    pub qos_threshold: f64,
    /// Ripple `eps`, dB.
    pub ripple_db: f64,
    /// Link direction, rad.
    pub angle: f64,
    /// Link distance, m.
    pub distance: f64,
    pub transmit_psd: f64,
    pub noise_psd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subchannel {
    pub center: f64,
    pub bandwidth: f64,
    /// Surrogate SNR at the center (linear).
    pub center_snr: f64,
}

impl Subchannel {
    pub fn lower_edge(&self) -> f64 {
        self.center - 0.5 * self.bandwidth
    }

    pub fn upper_edge(&self) -> f64 {
        self.center + 0.5 * self.bandwidth
    }
}

/// Subchannels in allocation order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubchannelPlan {
    pub entries: Vec<Subchannel>,
}

impl SubchannelPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_bandwidth(&self) -> f64 {
        self.entries.iter().map(|e| e.bandwidth).sum()
    }

    fn center_range(&self) -> Option<(f64, f64)> {
        let mut it = self.entries.iter().map(|e| e.center);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), c| (lo.min(c), hi.max(c))))
    }
}

impl AllocationConfig {
    pub fn validate(&self, antenna: &AntennaConfig) -> Result<()> {
        let (lo, hi) = self.band;
        if !(self.total_bandwidth > 0.0 && self.total_bandwidth.is_finite()) {
            return Err(Error::invalid("total bandwidth must be > 0"));
        }
        if !(antenna.cutoff_frequency() < lo && lo < hi && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "band [{lo:e}, {hi:e}] Hz must lie above the cutoff {:e} Hz",
                antenna.cutoff_frequency()
            )));
        }
        if !(self.qos_threshold > 0.0) {
            return Err(Error::invalid("QoS threshold must be > 0"));
        }
        if !(self.ripple_db > 0.0 && self.ripple_db.is_finite()) {
            return Err(Error::invalid("ripple must be > 0 dB"));
        }
        if !(self.angle > 0.0 && self.angle < FRAC_PI_2) {
            return Err(Error::invalid("link angle must lie in (0, pi/2)"));
        }
        if !(self.distance >= 0.0) {
            return Err(Error::invalid("link distance must be >= 0"));
        }
        if !(self.transmit_psd > 0.0 && self.noise_psd > 0.0) {
            return Err(Error::invalid("PSDs must be > 0"));
        }
        Ok(())
    }

    /// `Lambda = 10^(eps/20)`.
    pub fn lattice_ratio(&self) -> f64 {
        10f64.powf(self.ripple_db / 20.0)
    }

    /// Natural subchannel width at `f`: `2 f (Lambda - 1)/(Lambda + 1)`.
    pub fn natural_bandwidth(&self, f: f64) -> f64 {
        let l = self.lattice_ratio();
        2.0 * f * (l - 1.0) / (l + 1.0)
    }

    /// Centers whose natural-width subchannel fits inside the band.
    pub fn admissible_centers(&self) -> (f64, f64) {
        let l = self.lattice_ratio();
        (
            self.band.0 * (l + 1.0) / 2.0,
            self.band.1 * (l + 1.0) / (2.0 * l),
        )
    }

    fn admissible(&self, f: f64) -> bool {
        let (lo, hi) = self.admissible_centers();
        // Lattice points produced by repeated multiplication may land an ulp
        // outside an edge they should touch.
        f >= lo * (1.0 - 1e-12) && f <= hi * (1.0 + 1e-12)
    }
}

/// Surrogate SNR without the clamp at 0.
pub fn f_snr_raw(
    cfg: &AllocationConfig,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    f: f64,
) -> f64 {
    cfg.transmit_psd * antenna.gain_scale * channel.path_loss(f, cfg.distance) / cfg.noise_psd
        * antenna.gain_taylor_unchecked(f, cfg.angle)
}

/// Surrogate (Taylor, `alpha = 0`) SNR at `f`, clamped at 0.
pub fn f_snr(
    cfg: &AllocationConfig,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    f: f64,
) -> Result<f64> {
    antenna.gain_taylor(f, cfg.angle)?;
    Ok(f_snr_raw(cfg, antenna, channel, f).max(0.0))
}

/// Shape of the surrogate SNR, proportional to it for a fixed link.
pub fn surrogate_objective(antenna: &AntennaConfig, theta: f64, f: f64) -> f64 {
    let l = antenna.aperture_length;
    let fco = antenna.cutoff_frequency();
    let detune = 1.0 - fco * fco / (2.0 * f * f) - theta.cos();
    (l - l * l * l * PI * PI * f * f / (6.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT) * detune * detune)
        / (f * f)
}

/// Unconstrained maximizer of the surrogate:
/// `f_co^2 / sqrt(12 c^2 / (L^2 pi^2) + 2 (1 - cos theta) f_co^2)`.
pub fn surrogate_argmax(antenna: &AntennaConfig, theta: f64) -> f64 {
    let l = antenna.aperture_length;
    let fco = antenna.cutoff_frequency();
    let c = SPEED_OF_LIGHT;
    fco * fco / (12.0 * c * c / (l * l * PI * PI) + 2.0 * (1.0 - theta.cos()) * fco * fco).sqrt()
}

/// Surrogate maximizer clamped to `[f_lo, f_hi]`, regardless of QoS.
pub fn first_center_candidate(cfg: &AllocationConfig, antenna: &AntennaConfig) -> f64 {
    surrogate_argmax(antenna, cfg.angle).clamp(cfg.band.0, cfg.band.1)
}

/// First subchannel center, or `None` if even the best frequency misses the
/// QoS threshold.
///
/// The center is kept far enough from the band edges for its full natural
/// width to fit.
pub fn first_center(
    cfg: &AllocationConfig,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
) -> Result<Option<f64>> {
    cfg.validate(antenna)?;
    let (lo, hi) = cfg.admissible_centers();
    if lo > hi {
        return Ok(None);
    }
    let f = first_center_candidate(cfg, antenna).clamp(lo, hi);
    Ok((f_snr(cfg, antenna, channel, f)? >= cfg.qos_threshold).then_some(f))
}

/// Next lattice center beside the current block, or `None` when neither side
/// is admissible or the better side misses the QoS threshold.
pub fn next_center(
    cfg: &AllocationConfig,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    plan: &SubchannelPlan,
) -> Result<Option<f64>> {
    let Some((f_min, f_max)) = plan.center_range() else {
        return Err(Error::invalid("next_center needs a non-empty plan"));
    };
    let l = cfg.lattice_ratio();
    let candidates = [f_min / l, f_max * l];
    // Ties go to the lower frequency, which is listed first.
    let best = candidates
        .into_iter()
        .filter(|&f| cfg.admissible(f))
        .map(|f| (f, surrogate_objective(antenna, cfg.angle, f)))
        .fold(None, |acc: Option<(f64, f64)>, (f, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((f, v)),
        });
    match best {
        Some((f, _)) if f_snr(cfg, antenna, channel, f)? >= cfg.qos_threshold => Ok(Some(f)),
        _ => Ok(None),
    }
}

/// `min(2 f (Lambda - 1)/(Lambda + 1), remaining)`.
pub fn bandwidth_for(cfg: &AllocationConfig, f: f64, remaining: f64) -> f64 {
    cfg.natural_bandwidth(f).min(remaining.max(0.0))
}

/// Greedy allocation: best surrogate center first, then lattice neighbours
/// until the budget runs out or the QoS threshold cuts the search.
pub fn allocate(
    cfg: &AllocationConfig,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
) -> Result<SubchannelPlan> {
    let mut plan = SubchannelPlan::default();
    let Some(first) = first_center(cfg, antenna, channel)? else {
        return Ok(plan);
    };
    let mut remaining = cfg.total_bandwidth;
    let mut center = first;
    loop {
        let width = bandwidth_for(cfg, center, remaining);
        if width <= 0.0 {
            break;
        }
        plan.entries.push(Subchannel {
            center,
            bandwidth: width,
            center_snr: f_snr(cfg, antenna, channel, center)?,
        });
        remaining -= width;
        if remaining <= 0.0 {
            break;
        }
        match next_center(cfg, antenna, channel, &plan)? {
            Some(f) => center = f,
            None => break,
        }
    }
    Ok(plan)
}

/// `N` contiguous equal-width subchannels sharing `B_total`, centered as a
/// block on the peak frequency of `theta` and shifted to stay in the band.
pub fn equal_allocation(
    cfg: &AllocationConfig,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    n: usize,
) -> Result<SubchannelPlan> {
    cfg.validate(antenna)?;
    if n == 0 {
        return Ok(SubchannelPlan::default());
    }
    let (lo, hi) = cfg.band;
    let total = cfg.total_bandwidth;
    if total > hi - lo {
        return Err(Error::invalid("total bandwidth exceeds the band"));
    }
    let peak = antenna.peak_frequency(cfg.angle)?;
    let start = (peak - 0.5 * total).clamp(lo, hi - total);
    let width = total / n as f64;
    let entries = (0..n)
        .map(|i| {
            let center = start + (i as f64 + 0.5) * width;
            Ok(Subchannel {
                center,
                bandwidth: width,
                center_snr: f_snr(cfg, antenna, channel, center)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SubchannelPlan { entries })
}

/// Link geometry and budget used to score a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub angle: f64,
    pub distance: f64,
    pub transmit_psd: f64,
    pub noise_psd: f64,
}

impl From<&AllocationConfig> for Link {
    fn from(c: &AllocationConfig) -> Self {
        Self {
            angle: c.angle,
            distance: c.distance,
            transmit_psd: c.transmit_psd,
            noise_psd: c.noise_psd,
        }
    }
}

/// Sum rate of a plan under the exact pattern with attenuation `alpha`, bit/s.
pub fn plan_rate(
    plan: &SubchannelPlan,
    antenna: &AntennaConfig,
    channel: &ChannelConfig,
    link: &Link,
    alpha: f64,
) -> Result<f64> {
    let ant = antenna.with_attenuation(alpha);
    plan.entries.iter().try_fold(0.0, |acc, e| {
        let snr = link.transmit_psd
            * ant.effective_gain(e.center, link.angle)?
            * channel.path_loss(e.center, link.distance)
            / link.noise_psd;
        Ok(acc + e.bandwidth * snr.ln_1p() / LN_2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{db_to_linear, dbm_to_watts};
    use approx::assert_relative_eq;

    fn antenna() -> AntennaConfig {
        AntennaConfig::new(0.06, 0.0035, 0.0, 1.0).unwrap()
    }

    fn cfg(theta_deg: f64, r: f64) -> AllocationConfig {
        AllocationConfig {
            total_bandwidth: 15e9,
            band: (100e9, 350e9),
            qos_threshold: db_to_linear(-6.5),
            ripple_db: 0.2,
            angle: theta_deg.to_radians(),
            distance: r,
            transmit_psd: dbm_to_watts(-71.76),
            noise_psd: dbm_to_watts(-168.0),
        }
    }

    #[test]
    fn reference_values() {
        let a = antenna();
        let ch = ChannelConfig::default();
        assert_relative_eq!(
            surrogate_argmax(&a, 28.7f64.to_radians()),
            83_629_458_485.0,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            bandwidth_for(&cfg(45.0, 50.0), 200e9, 1e12),
            4_604_966_728.915_942,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            f_snr_raw(&cfg(45.0, 50.0), &a, &ch, 200e9),
            -0.2745,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            f_snr(&cfg(15.0, 5.0), &a, &ch, 160e9).unwrap(),
            0.22333,
            max_relative = 1e-4
        );
        assert_eq!(f_snr(&cfg(45.0, 50.0), &a, &ch, 200e9).unwrap(), 0.0);
    }

    #[test]
    fn bandwidth_edge_cases() {
        let c = cfg(30.0, 5.0);
        assert_eq!(bandwidth_for(&c, 200e9, 0.0), 0.0);
        assert_eq!(bandwidth_for(&c, 200e9, 1e9), 1e9);
        let flat = AllocationConfig {
            ripple_db: 1e-12,
            ..c
        };
        assert!(bandwidth_for(&flat, 200e9, 1e12) < 1e-1);
    }

    #[test]
    fn first_center_is_surrogate_peak_and_respects_qos() {
        let a = antenna();
        let ch = ChannelConfig::default();
        let c = cfg(15.0, 3.0);
        let f1 = first_center(&c, &a, &ch).unwrap().unwrap();
        let step = 1e6;
        let best = (0..250_000)
            .map(|i| c.band.0 + i as f64 * step)
            .max_by(|x, y| f_snr_raw(&c, &a, &ch, *x).total_cmp(&f_snr_raw(&c, &a, &ch, *y)))
            .unwrap();
        assert!((f1 - best).abs() <= step);
        let strict = AllocationConfig {
            qos_threshold: 1e9,
            ..c
        };
        assert_eq!(first_center(&strict, &a, &ch).unwrap(), None);
        assert!(allocate(&strict, &a, &ch).unwrap().is_empty());
    }

    #[test]
    fn small_angle_limit() {
        let a = antenna();
        let l = a.aperture_length;
        let fco = a.cutoff_frequency();
        let limit = fco * fco * l * PI / (12f64.sqrt() * SPEED_OF_LIGHT);
        assert_relative_eq!(surrogate_argmax(&a, 1e-6), limit, max_relative = 1e-9);
    }

    #[test]
    fn tiny_budget_gives_one_subchannel() {
        let a = antenna();
        let ch = ChannelConfig::default();
        let c = AllocationConfig {
            total_bandwidth: 1e9,
            ..cfg(15.0, 3.0)
        };
        let plan = allocate(&c, &a, &ch).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.entries[0].bandwidth, 1e9);
    }

    #[test]
    fn single_subchannel_rate() {
        let a = antenna();
        let ch = ChannelConfig::default();
        let c = cfg(15.0, 3.0);
        let e = Subchannel {
            center: 200e9,
            bandwidth: 2e9,
            center_snr: 0.0,
        };
        let plan = SubchannelPlan { entries: vec![e] };
        let snr = c.transmit_psd
            * a.with_attenuation(60.0).gain(200e9, c.angle).unwrap()
            * ch.path_loss(200e9, 3.0)
            / c.noise_psd;
        assert_relative_eq!(
            plan_rate(&plan, &a, &ch, &Link::from(&c), 60.0).unwrap(),
            2e9 * (1.0 + snr).log2(),
            max_relative = 1e-14
        );
        assert_eq!(
            plan_rate(&SubchannelPlan::default(), &a, &ch, &Link::from(&c), 60.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn next_center_needs_plan_and_picks_worse_than_first() {
        let a = antenna();
        let ch = ChannelConfig::default();
        let c = cfg(15.0, 2.0);
        assert!(next_center(&c, &a, &ch, &SubchannelPlan::default()).is_err());
        let f1 = first_center(&c, &a, &ch).unwrap().unwrap();
        let plan = SubchannelPlan {
            entries: vec![Subchannel {
                center: f1,
                bandwidth: c.natural_bandwidth(f1),
                center_snr: f_snr(&c, &a, &ch, f1).unwrap(),
            }],
        };
        let f2 = next_center(&c, &a, &ch, &plan).unwrap().unwrap();
        let l = c.lattice_ratio();
        assert!((f2 - f1 * l).abs() < 1.0 || (f2 - f1 / l).abs() < 1.0);
        assert!(surrogate_objective(&a, c.angle, f2) < surrogate_objective(&a, c.angle, f1));
    }

    #[test]
    fn equal_allocation_tiles_budget_inside_band() {
        let a = antenna();
        let ch = ChannelConfig::default();
        for theta in [5.0, 15.0, 60.0] {
            let c = cfg(theta, 3.0);
            let plan = equal_allocation(&c, &a, &ch, 4).unwrap();
            assert_eq!(plan.len(), 4);
            assert_relative_eq!(
                plan.total_bandwidth(),
                c.total_bandwidth,
                max_relative = 1e-12
            );
            assert!(plan.entries[0].lower_edge() >= c.band.0 - 1e-3);
            assert!(plan.entries[3].upper_edge() <= c.band.1 + 1e-3);
            for w in plan.entries.windows(2) {
                assert_relative_eq!(w[0].upper_edge(), w[1].lower_edge(), max_relative = 1e-12);
            }
        }
        assert!(equal_allocation(&cfg(15.0, 3.0), &a, &ch, 0)
            .unwrap()
            .is_empty());
    }

    fn check_plan(c: &AllocationConfig, plan: &SubchannelPlan) {
        let l = c.lattice_ratio();
        let total = plan.total_bandwidth();
        assert!(total <= c.total_bandwidth * (1.0 + 1e-12));
        for e in &plan.entries {
            assert!(e.bandwidth > 0.0);
            assert!(e.center_snr >= c.qos_threshold);
            assert!(
                e.lower_edge() >= c.band.0 * (1.0 - 1e-12)
                    && e.upper_edge() <= c.band.1 * (1.0 + 1e-12)
            );
        }
        for w in plan.entries.windows(2) {
            assert!(w[1].center_snr <= w[0].center_snr * (1.0 + 1e-12));
        }
        let mut sorted = plan.entries.clone();
        sorted.sort_by(|x, y| x.center.total_cmp(&y.center));
        for w in sorted.windows(2) {
            assert_relative_eq!(w[1].center / w[0].center, l, max_relative = 1e-12);
            assert!(w[0].upper_edge() <= w[1].lower_edge() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn ripple_is_epsilon_under_free_space_loss() {
        let c = cfg(15.0, 2.0);
        let ch = ChannelConfig::default();
        let plan = allocate(&c, &antenna(), &ch).unwrap();
        assert!(plan.len() > 1);
        for e in plan
            .entries
            .iter()
            .filter(|e| (e.bandwidth - c.natural_bandwidth(e.center)).abs() < 1.0)
        {
            let db = 10.0
                * (ch.path_loss(e.lower_edge(), 2.0) / ch.path_loss(e.upper_edge(), 2.0)).log10();
            assert_relative_eq!(db, c.ripple_db, max_relative = 1e-9);
        }
    }

    #[test]
    fn unpicked_lattice_points_are_no_better() {
        let a = antenna();
        let ch = ChannelConfig::default();
        for (theta, r) in [(10.0, 1.5), (15.0, 3.0), (20.0, 4.0), (25.0, 2.0)] {
            let c = cfg(theta, r);
            let plan = allocate(&c, &a, &ch).unwrap();
            check_plan(&c, &plan);
            let Some((lo, hi)) = plan.center_range() else {
                continue;
            };
            let weakest = plan
                .entries
                .iter()
                .map(|e| e.center_snr)
                .fold(f64::INFINITY, f64::min);
            let l = c.lattice_ratio();
            for side in [lo / l, hi * l] {
                if c.admissible(side) {
                    assert!(f_snr(&c, &a, &ch, side).unwrap() <= weakest * (1.0 + 1e-12));
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn plans_satisfy_constraints(theta in 3.0f64..80.0, r in 0.2f64..8.0, btot in 1e9f64..60e9, eps in 0.05f64..1.0) {
                let c = AllocationConfig { total_bandwidth: btot, ripple_db: eps, ..cfg(theta, r) };
                let plan = allocate(&c, &antenna(), &ChannelConfig::default()).unwrap();
                check_plan(&c, &plan);
                // Budget is exhausted unless the QoS or band cut stopped the search.
                if !plan.is_empty() {
                    let cut = next_center(&c, &antenna(), &ChannelConfig::default(), &plan).unwrap().is_none();
                    prop_assert!(cut || (plan.total_bandwidth() - btot).abs() <= 1e-6 * btot);
                }
            }

            #[test]
            fn surrogate_is_unimodal(theta in 3.0f64..80.0) {
                let a = antenna();
                let th = theta.to_radians();
                let peak = surrogate_argmax(&a, th);
                let grid: Vec<f64> = (1..400).map(|i| a.cutoff_frequency() * (1.0 + i as f64 * 0.05)).collect();
                for w in grid.windows(2) {
                    let (f0, f1) = (surrogate_objective(&a, th, w[0]), surrogate_objective(&a, th, w[1]));
                    if w[1] <= peak { prop_assert!(f1 >= f0); }
                    if w[0] >= peak { prop_assert!(f1 <= f0); }
                }
            }
        }
    }
}
