//! Leaky-wave antenna THz network model: frequency-angle coupling, rate analysis and allocation.
//!
//! The crate covers the whole chain for a typical THz link whose transmitter
//! uses a leaky-wave antenna:
//!
//! * [`antenna`]: pattern, angle-frequency coupling, Taylor surrogate.
//! * [`propagation`]: free-space path loss and 3GPP LoS blockage.
//! * [`netsim`]: Monte Carlo over Poisson networks with frequency thinning.
//! * [`analytic`]: the stochastic-geometry average rate and its lower bound.
//! * [`allocation`]: greedy subchannel allocation over a wide band.
//! * [`power_ee`]: per-subchannel PSD maximizing energy efficiency.
//! * [`cli`]: config files, parameter sweeps and CSV output.
//!
//! All quantities are SI: Hz, meters, radians, W/Hz for spectral densities.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod analytic;
pub mod antenna;
pub mod cli;
pub mod netsim;
pub mod numerics;
pub mod power_ee;
pub mod propagation;

use thiserror::Error;

pub use allocation::{AllocationConfig, SubchannelPlan};
pub use analytic::RateIntegrandContext;
pub use antenna::AntennaConfig;
pub use netsim::{InterferenceMode, NetworkScenario};
pub use numerics::{QuadratureSpec, RngStream};
pub use power_ee::{PowerAllocation, PowerConfig};
pub use propagation::ChannelConfig;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
    #[error("frequency {frequency:e} Hz is not above the cutoff {cutoff:e} Hz (slow-wave region)")]
    SlowWave { frequency: f64, cutoff: f64 },
    #[error("co-band probability {0} exceeds 1: subchannel too wide for this cutoff and angle")]
    ThinningProbability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no subchannel can meet the QoS threshold within the PSD limit")]
    AllSubchannelsInfeasible,
    #[error(transparent)]
    Config(#[from] cli::ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm (or dBm/Hz) to W (or W/Hz).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}
