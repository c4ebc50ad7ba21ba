//! Transmit PSD per subchannel maximizing energy efficiency.
//!
//! Each subchannel maximizes `log2(1 + q Xi) / (q + q_c)` over
//! `gamma_th / Xi <= q <= q_max`. The stationarity function
//! `(q + q_c) Xi / (1 + q Xi) - ln(1 + q Xi)` is decreasing in `q`, so the
//! unconstrained optimum is its root and the constrained one is that root
//! pushed into the feasible interval.

use std::f64::consts::LN_2;

use crate::numerics::bisect_decreasing;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    /// PSD ceiling `q_max`, W/Hz.
    pub max_psd: f64,
    /// Circuit PSD `q_c`, W/Hz.
    pub circuit_psd: f64,
    /// Linear SNR threshold `gamma_th`.
    pub qos_threshold: f64,
    /// Channel-to-noise ratios `Xi_n = G(f_n, theta) l(r) / sigma^2`, 1/(W/Hz).
    pub channel_gains: Vec<f64>,
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_psd > 0.0 && self.max_psd.is_finite()) {
            return Err(Error::invalid("q_max must be > 0"));
        }
        if !(self.circuit_psd > 0.0 && self.circuit_psd.is_finite()) {
            return Err(Error::invalid("q_c must be > 0"));
        }
        if !(self.qos_threshold > 0.0) {
            return Err(Error::invalid("QoS threshold must be > 0"));
        }
        if let Some(g) = self
            .channel_gains
            .iter()
            .find(|g| !(**g > 0.0 && g.is_finite()))
        {
            return Err(Error::invalid(format!(
                "channel gains must be > 0, got {g}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Optimal PSD per subchannel; `None` where QoS cannot be met at `q_max`.
    pub psd: Vec<Option<f64>>,
    /// Mean of the EE objective over feasible subchannels, (bit/s/Hz)/(W/Hz).
    pub average_ee: f64,
}

impl PowerAllocation {
    pub fn feasible(&self) -> impl Iterator<Item = bool> + '_ {
        self.psd.iter().map(Option::is_some)
    }
}

/// `log2(1 + q Xi) / (q + q_c)`.
pub fn ee_objective(q: f64, xi: f64, q_c: f64) -> f64 {
    (q * xi).ln_1p() / LN_2 / (q + q_c)
}

/// `(q + q_c) Xi / (1 + q Xi) - ln(1 + q Xi)`; same sign as the derivative
/// of [`ee_objective`].
pub fn ee_stationarity(q: f64, xi: f64, q_c: f64) -> f64 {
    let qx = q * xi;
    (q + q_c) * xi / (1.0 + qx) - qx.ln_1p()
}

/// Optimal PSD for one subchannel, or `None` if `gamma_th / Xi > q_max`.
pub fn optimal_psd(xi: f64, q_max: f64, q_c: f64, gamma_th: f64) -> Result<Option<f64>> {
    let q_min = gamma_th / xi;
    if q_min > q_max {
        return Ok(None);
    }
    if ee_stationarity(q_max, xi, q_c) >= 0.0 {
        return Ok(Some(q_max));
    }
    let lo = f64::EPSILON * q_max;
    let q_o = bisect_decreasing(|q| ee_stationarity(q, xi, q_c), lo, q_max, 1e-12 * q_max)?;
    Ok(Some(q_o.max(q_min)))
}

/// Per-subchannel optimum and the resulting average EE.
pub fn allocate_power(cfg: &PowerConfig) -> Result<PowerAllocation> {
    cfg.validate()?;
    if cfg.channel_gains.is_empty() {
        return Err(Error::invalid("no subchannels to allocate power to"));
    }
    let psd = cfg
        .channel_gains
        .iter()
        .map(|&xi| optimal_psd(xi, cfg.max_psd, cfg.circuit_psd, cfg.qos_threshold))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = psd
        .iter()
        .zip(&cfg.channel_gains)
        .filter_map(|(q, &xi)| q.map(|q| ee_objective(q, xi, cfg.circuit_psd)))
        .collect();
    if values.is_empty() {
        return Err(Error::AllSubchannelsInfeasible);
    }
    let average_ee = values.iter().sum::<f64>() / values.len() as f64;
    Ok(PowerAllocation { psd, average_ee })
}

/// Average EE with `q_n = q_max` on the subchannels that are feasible at `q_max`.
pub fn equal_power_ee(cfg: &PowerConfig) -> Result<f64> {
    cfg.validate()?;
    let values: Vec<f64> = cfg
        .channel_gains
        .iter()
        .filter(|&&xi| cfg.qos_threshold / xi <= cfg.max_psd)
        .map(|&xi| ee_objective(cfg.max_psd, xi, cfg.circuit_psd))
        .collect();
    if values.is_empty() {
        return Err(Error::AllSubchannelsInfeasible);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{db_to_linear, dbm_to_watts};
    use approx::assert_relative_eq;

    fn nominal(gains: Vec<f64>) -> PowerConfig {
        PowerConfig {
            max_psd: dbm_to_watts(-71.76),
            circuit_psd: dbm_to_watts(-81.76),
            qos_threshold: db_to_linear(-6.5),
            channel_gains: gains,
        }
    }

    #[test]
    fn objective_values() {
        assert_relative_eq!(ee_objective(1.0, 1.0, 1.0), 0.5, max_relative = 1e-15);
        assert_eq!(ee_objective(3.0, 0.0, 1.0), 0.0);
        // Small q: objective ~ q Xi / (ln 2 q_c).
        let (xi, qc) = (2.0, 0.5);
        assert_relative_eq!(
            ee_objective(1e-9, xi, qc) / 1e-9,
            xi / (LN_2 * qc),
            max_relative = 1e-6
        );
    }

    #[test]
    fn stationarity_shape() {
        assert_relative_eq!(ee_stationarity(0.0, 3.0, 0.25), 0.75, max_relative = 1e-15);
        assert!(ee_stationarity(1e30, 3.0, 0.25) < -10.0);
        let (xi, qc) = (5.0, 0.3);
        let grid: Vec<f64> = (1..20_000).map(|i| i as f64 * 1e-3).collect();
        for w in grid.windows(2) {
            assert!(ee_stationarity(w[1], xi, qc) < ee_stationarity(w[0], xi, qc));
            let slope = ee_objective(w[1], xi, qc) - ee_objective(w[0], xi, qc);
            let (s0, s1) = (ee_stationarity(w[0], xi, qc), ee_stationarity(w[1], xi, qc));
            if s0 > 0.0 && s1 > 0.0 {
                assert!(slope > 0.0);
            }
            if s0 < 0.0 && s1 < 0.0 {
                assert!(slope < 0.0);
            }
        }
    }

    #[test]
    fn branches() {
        let (qm, qc, g) = (
            dbm_to_watts(-71.76),
            dbm_to_watts(-81.76),
            db_to_linear(-6.5),
        );
        // With q_c = q_max / 10 the first branch needs q_max Xi < 1/6 < gamma_th,
        // so it only shows up with a larger circuit PSD.
        let xi_weak = 2.0 * g / qm;
        assert!(ee_stationarity(qm, xi_weak, qc) < 0.0);
        assert!(ee_stationarity(qm, xi_weak, qm) >= 0.0);
        assert_eq!(optimal_psd(xi_weak, qm, qm, g).unwrap(), Some(qm));
        // Hopeless channel.
        assert_eq!(optimal_psd(0.5 * g / qm, qm, qc, g).unwrap(), None);
        // Strong channel: interior root.
        let xi = 1e4 / qm;
        let q = optimal_psd(xi, qm, qc, g).unwrap().unwrap();
        assert!(q < qm);
        assert!(q * xi >= g);
        let step = (qm - g / xi) / 1e6;
        let best = (0..=1_000_000)
            .map(|i| g / xi + i as f64 * step)
            .max_by(|a, b| ee_objective(*a, xi, qc).total_cmp(&ee_objective(*b, xi, qc)))
            .unwrap();
        assert!((q - best).abs() <= step);
    }

    #[test]
    fn qos_floor_binds() {
        let (qm, qc) = (1.0, 1e-3);
        let xi = 1e4;
        let q_o = optimal_psd(xi, qm, qc, 1e-6).unwrap().unwrap();
        let floor = 0.5 * qm * xi;
        let q = optimal_psd(xi, qm, qc, floor).unwrap().unwrap();
        assert!(q_o < floor / xi);
        assert_eq!(q, floor / xi);
    }

    #[test]
    fn allocate_power_averages_feasible() {
        let g = db_to_linear(-6.5);
        let qm = dbm_to_watts(-71.76);
        let cfg = nominal(vec![1e3 / qm, 0.1 * g / qm, 30.0 / qm]);
        let out = allocate_power(&cfg).unwrap();
        assert_eq!(out.feasible().collect::<Vec<_>>(), vec![true, false, true]);
        assert!(out.average_ee >= equal_power_ee(&cfg).unwrap());
        let single = nominal(vec![30.0 / qm]);
        let q = optimal_psd(
            30.0 / qm,
            single.max_psd,
            single.circuit_psd,
            single.qos_threshold,
        )
        .unwrap()
        .unwrap();
        assert_relative_eq!(
            allocate_power(&single).unwrap().average_ee,
            ee_objective(q, 30.0 / qm, single.circuit_psd)
        );
        assert!(matches!(
            allocate_power(&nominal(vec![0.1 * g / qm])),
            Err(Error::AllSubchannelsInfeasible)
        ));
        assert!(allocate_power(&nominal(vec![])).is_err());
        assert!(allocate_power(&nominal(vec![-1.0])).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn optimum_beats_grid(log_xi in 8.0f64..14.0, log_qc in -14.0f64..-9.0, log_qm in -12.0f64..-9.0, gamma_db in -10.0f64..5.0) {
                let (xi, qc, qm, g) = (10f64.powf(log_xi), 10f64.powf(log_qc), 10f64.powf(log_qm), db_to_linear(gamma_db));
                match optimal_psd(xi, qm, qc, g).unwrap() {
                    None => prop_assert!(g / xi > qm),
                    Some(q) => {
                        prop_assert!(q * xi >= g * (1.0 - 1e-12) && q <= qm);
                        let best = ee_objective(q, xi, qc);
                        let lo = g / xi;
                        for i in 0..=10_000 {
                            let p = lo + (qm - lo) * i as f64 / 10_000.0;
                            prop_assert!(ee_objective(p, xi, qc) <= best * (1.0 + 1e-9));
                        }
                        prop_assert!(best >= ee_objective(qm, xi, qc));
                    }
                }
            }
        }
    }
}
