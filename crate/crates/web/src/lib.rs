//! Browser bindings for three interactive views: the antenna pattern, a
//! subchannel plan for one link and the analytic rate against distance.
//!
//! Every export returns a flat `Float64Array`; the layouts are documented on
//! each function. The plain-Rust versions are public for native tests.

use thzsim::allocation::{self, AllocationConfig, Link};
use thzsim::analytic::{RateIntegrandContext, XiModel};
use thzsim::netsim::{InterferenceMode, NetworkScenario};
use thzsim::numerics::QuadratureSpec;
use thzsim::{db_to_linear, dbm_to_watts, AntennaConfig, ChannelConfig, Result};
use wasm_bindgen::prelude::*;

const PLATE_SEPARATION: f64 = 0.0035;
const TRANSMIT_DBM_PER_HZ: f64 = -71.76;
const NOISE_DBM_PER_HZ: f64 = -168.0;

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// `G(f, theta) / L` at `points` angles spread evenly over `(0, 90)` degrees.
pub fn pattern_values(l_m: f64, alpha: f64, f_ghz: f64, points: usize) -> Result<Vec<f64>> {
    let antenna = AntennaConfig::new(l_m, PLATE_SEPARATION, alpha, 1.0)?;
    (1..=points)
        .map(|i| {
            let theta = (i as f64 / (points + 1) as f64) * std::f64::consts::FRAC_PI_2;
            Ok(antenna.gain(f_ghz * 1e9, theta)? / l_m)
        })
        .collect()
}

#[wasm_bindgen]
pub fn pattern(
    l_m: f64,
    alpha: f64,
    f_ghz: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(pattern_values(l_m, alpha, f_ghz, points))
}

/// `[proposed_bps, equal_bps, (center_ghz, width_ghz, center_snr_db) ...]`
/// for one link over the 100-350 GHz band.
pub fn plan_values(
    theta_deg: f64,
    r_m: f64,
    btotal_ghz: f64,
    l_m: f64,
    alpha: f64,
    epsilon_db: f64,
    gamma_th_db: f64,
) -> Result<Vec<f64>> {
    let scored = AntennaConfig::new(l_m, PLATE_SEPARATION, alpha, 1.0)?;
    let lossless = scored.with_attenuation(0.0);
    let channel = ChannelConfig::default();
    let cfg = AllocationConfig {
        total_bandwidth: btotal_ghz * 1e9,
        band: (100e9, 350e9),
        qos_threshold: db_to_linear(gamma_th_db),
        ripple_db: epsilon_db,
        angle: theta_deg.to_radians(),
        distance: r_m,
        transmit_psd: dbm_to_watts(TRANSMIT_DBM_PER_HZ),
        noise_psd: dbm_to_watts(NOISE_DBM_PER_HZ),
    };
    let plan = allocation::allocate(&cfg, &lossless, &channel)?;
    let equal = allocation::equal_allocation(&cfg, &lossless, &channel, plan.len())?;
    let link = Link::from(&cfg);
    let mut out = vec![
        allocation::plan_rate(&plan, &scored, &channel, &link, alpha)?,
        allocation::plan_rate(&equal, &scored, &channel, &link, alpha)?,
    ];
    for e in &plan.entries {
        out.extend([
            e.center / 1e9,
            e.bandwidth / 1e9,
            10.0 * e.center_snr.log10(),
        ]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn plan(
    theta_deg: f64,
    r_m: f64,
    btotal_ghz: f64,
    l_m: f64,
    alpha: f64,
    epsilon_db: f64,
    gamma_th_db: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    js(plan_values(
        theta_deg,
        r_m,
        btotal_ghz,
        l_m,
        alpha,
        epsilon_db,
        gamma_th_db,
    ))
}

/// `[(r_m, rate_bps, noise_only_bps) ...]` at `points` distances up to
/// `r_max`, for a receiver at 28.7 degrees on a 270 GHz subchannel.
pub fn rate_values(
    alpha: f64,
    density: f64,
    bo_ghz: f64,
    r_max: f64,
    points: usize,
) -> Result<Vec<f64>> {
    let antenna = AntennaConfig::new(0.06, PLATE_SEPARATION, alpha, 1.0)?;
    let channel = ChannelConfig::default();
    let quad = QuadratureSpec::default().with_tolerances(1e-6, 0.0);
    let mut out = Vec::with_capacity(3 * points);
    for i in 1..=points {
        let r = r_max * i as f64 / points as f64;
        let sc = NetworkScenario {
            density,
            transmit_psd: dbm_to_watts(TRANSMIT_DBM_PER_HZ),
            noise_psd: dbm_to_watts(NOISE_DBM_PER_HZ),
            frequency: 270e9,
            bandwidth: bo_ghz * 1e9,
            distance: r,
            angle: 28.7f64.to_radians(),
            sim_radius: 2.0 * r_max.max(500.0),
            trials: 1,
            interference_mode: InterferenceMode::Windowed,
        };
        let ctx = RateIntegrandContext::new(&sc, &antenna, &channel, &quad)?;
        out.extend([
            r,
            ctx.average_rate(XiModel::Corrected)?,
            ctx.noise_limited_rate(),
        ]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn rate_curve(
    alpha: f64,
    density: f64,
    bo_ghz: f64,
    r_max: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(rate_values(alpha, density, bo_ghz, r_max, points))
}
