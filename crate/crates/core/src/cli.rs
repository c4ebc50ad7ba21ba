//! Experiment configs, parameter sweeps and CSV output.
//!
//! A config is a TOML file with six flat sections. Key names carry their
//! unit (`fo_ghz`, `qt_dbm_per_hz`, ...); values are kept in those units in
//! [`ExperimentSpec`] and converted to SI only when a run builds the model
//! types.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use toml::{Spanned, Value};

use crate::allocation::{self, AllocationConfig, Link};
use crate::analytic::{RateIntegrandContext, XiModel};
use crate::antenna::AntennaConfig;
use crate::netsim::{self, InterferenceMode, NetworkScenario};
use crate::numerics::{QuadratureSpec, RngStream};
use crate::power_ee::{self, PowerConfig};
use crate::propagation::ChannelConfig;
use crate::{db_to_linear, dbm_to_watts, Error, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}:{line}: unknown section [{section}]")]
    UnknownSection {
        path: String,
        line: usize,
        section: String,
    },
    #[error("{path}: missing section [{section}]")]
    MissingSection { path: String, section: String },
    #[error("{path}:{line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        path: String,
        line: usize,
        section: String,
        key: String,
    },
    #[error("{path}:{line}: missing required key `{key}` in [{section}]")]
    MissingKey {
        path: String,
        line: usize,
        section: String,
        key: String,
    },
    #[error("{path}:{line}: key `{key}` has the wrong unit suffix; expected `{expected}`")]
    UnitSuffix {
        path: String,
        line: usize,
        key: String,
        expected: String,
    },
    #[error("{path}:{line}: `{key}`: {message}")]
    InvalidValue {
        path: String,
        line: usize,
        key: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    RateAnalytic,
    RateMc,
    RateCompare,
    Allocate,
    AllocateCompare,
    PowerEe,
    Sweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::RateAnalytic,
        Self::RateMc,
        Self::RateCompare,
        Self::Allocate,
        Self::AllocateCompare,
        Self::PowerEe,
        Self::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::RateAnalytic => "rate-analytic",
            Self::RateMc => "rate-mc",
            Self::RateCompare => "rate-compare",
            Self::Allocate => "allocate",
            Self::AllocateCompare => "allocate-compare",
            Self::PowerEe => "power-ee",
            Self::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn default_axis(self) -> &'static str {
        match self {
            Self::RateAnalytic | Self::RateMc | Self::RateCompare => "ro_m",
            _ => "btotal_ghz",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaSection {
    pub l_m: f64,
    pub d_m: f64,
    pub alpha_rad_per_m: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSection {
    pub eta_los: f64,
    pub d_ref_m: f64,
    pub a1_m: f64,
    pub a2_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSection {
    pub lambda_per_m2: f64,
    pub qt_dbm_per_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub fo_ghz: f64,
    pub bo_ghz: f64,
    pub ro_m: f64,
    pub theta_o_deg: f64,
    pub rsim_m: f64,
    pub mode: InterferenceMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationSection {
    pub btotal_ghz: f64,
    pub band_lo_ghz: f64,
    pub band_hi_ghz: f64,
    pub gamma_th_db: f64,
    pub epsilon_db: f64,
    pub rmax_m: f64,
    /// Random `(theta, r)` links averaged per sweep point.
    pub draws: usize,
    /// Fixed link for the `allocate` experiment.
    pub theta_deg: Option<f64>,
    pub r_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSection {
    pub qmax_dbm_per_hz: f64,
    pub qc_dbm_per_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub kind: Option<ExperimentKind>,
    pub trials: usize,
    pub seed: u64,
    pub sweep_param: Option<String>,
    pub sweep_values: Vec<f64>,
    pub out: Option<String>,
}

/// A parsed config, in the units of its keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub antenna: AntennaSection,
    pub channel: ChannelSection,
    pub network: NetworkSection,
    pub allocation: AllocationSection,
    pub power: PowerSection,
    pub experiment: ExperimentSection,
}

const DEFAULT_RSIM_M: f64 = 500.0;
const DEFAULT_DRAWS: usize = 1000;

/// `(section, key)` pairs that take a float and may be swept.
const SWEEPABLE: [(&str, &str); 25] = [
    ("antenna", "L_m"),
    ("antenna", "d_m"),
    ("antenna", "alpha_rad_per_m"),
    ("antenna", "xi"),
    ("channel", "eta_los"),
    ("channel", "D_m"),
    ("channel", "a1_m"),
    ("channel", "a2_m"),
    ("network", "lambda_per_m2"),
    ("network", "qt_dbm_per_hz"),
    ("network", "noise_dbm_per_hz"),
    ("network", "fo_ghz"),
    ("network", "bo_ghz"),
    ("network", "ro_m"),
    ("network", "theta_o_deg"),
    ("network", "rsim_m"),
    ("allocation", "btotal_ghz"),
    ("allocation", "band_lo_ghz"),
    ("allocation", "band_hi_ghz"),
    ("allocation", "gamma_th_db"),
    ("allocation", "epsilon_db"),
    ("allocation", "rmax_m"),
    ("power", "qmax_dbm_per_hz"),
    ("power", "qc_dbm_per_hz"),
    ("allocation", "theta_deg"),
];

/// Every accepted key with the stem used to spot a wrong unit suffix.
const KEYS: &[(&str, &str, &str)] = &[
    ("antenna", "L_m", "L"),
    ("antenna", "d_m", "d"),
    ("antenna", "alpha_rad_per_m", "alpha"),
    ("antenna", "xi", ""),
    ("channel", "eta_los", ""),
    ("channel", "D_m", "D"),
    ("channel", "a1_m", "a1"),
    ("channel", "a2_m", "a2"),
    ("network", "lambda_per_m2", "lambda"),
    ("network", "qt_dbm_per_hz", "qt"),
    ("network", "noise_dbm_per_hz", "noise"),
    ("network", "fo_ghz", "fo"),
    ("network", "bo_ghz", "bo"),
    ("network", "ro_m", "ro"),
    ("network", "theta_o_deg", "theta_o"),
    ("network", "rsim_m", "rsim"),
    ("network", "mode", ""),
    ("allocation", "btotal_ghz", "btotal"),
    ("allocation", "band_lo_ghz", "band_lo"),
    ("allocation", "band_hi_ghz", "band_hi"),
    ("allocation", "gamma_th_db", "gamma_th"),
    ("allocation", "epsilon_db", "epsilon"),
    ("allocation", "rmax_m", "rmax"),
    ("allocation", "draws", ""),
    ("allocation", "theta_deg", "theta"),
    ("allocation", "r_m", "r"),
    ("power", "qmax_dbm_per_hz", "qmax"),
    ("power", "qc_dbm_per_hz", "qc"),
    ("experiment", "kind", ""),
    ("experiment", "trials", ""),
    ("experiment", "seed", ""),
    ("experiment", "sweep_param", ""),
    ("experiment", "sweep_values", ""),
    ("experiment", "out", ""),
];

const SECTIONS: [&str; 6] = [
    "antenna",
    "channel",
    "network",
    "allocation",
    "power",
    "experiment",
];

type RawConfig = BTreeMap<Spanned<String>, BTreeMap<Spanned<String>, Spanned<Value>>>;

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

struct Section<'a> {
    path: &'a str,
    name: &'static str,
    line: usize,
    entries: BTreeMap<String, (usize, Value)>,
    seen: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn raw(&mut self, key: &str) -> Option<(usize, Value)> {
        self.seen.insert(key.to_string());
        self.entries.get(key).cloned()
    }

    fn invalid(&self, line: usize, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            path: self.path.to_string(),
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn missing(&self, key: &str) -> ConfigError {
        let stem = KEYS
            .iter()
            .find(|(sec, known, stem)| *sec == self.name && *known == key && !stem.is_empty())
            .map(|(_, _, stem)| format!("{stem}_"));
        if let Some(stem) = stem {
            if let Some((other, (line, _))) = self
                .entries
                .iter()
                .find(|(k, _)| k.starts_with(&stem) && !self.seen.contains(*k))
            {
                return ConfigError::UnitSuffix {
                    path: self.path.to_string(),
                    line: *line,
                    key: other.clone(),
                    expected: key.to_string(),
                };
            }
        }
        ConfigError::MissingKey {
            path: self.path.to_string(),
            line: self.line,
            section: self.name.to_string(),
            key: key.to_string(),
        }
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Float(x))) if x.is_finite() => Ok(Some(x)),
            Some((_, Value::Integer(i))) => Ok(Some(i as f64)),
            Some((line, _)) => Err(self.invalid(line, key, "expected a finite number")),
        }
    }

    fn f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.opt_f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn opt_u64(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Integer(i))) if i >= 0 => Ok(Some(i as u64)),
            Some((line, _)) => Err(self.invalid(line, key, "expected a non-negative integer")),
        }
    }

    fn opt_str(&mut self, key: &str) -> Result<Option<(usize, String)>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, Value::String(s))) => Ok(Some((line, s))),
            Some((line, _)) => Err(self.invalid(line, key, "expected a string")),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (key, (line, _)) in &self.entries {
            if self.seen.contains(key) {
                continue;
            }
            let suffix_match = KEYS.iter().find(|(sec, known, stem)| {
                *sec == self.name
                    && !stem.is_empty()
                    && key.starts_with(&format!("{stem}_"))
                    && key != known
            });
            return Err(match suffix_match {
                Some((_, known, _)) => ConfigError::UnitSuffix {
                    path: self.path.to_string(),
                    line: *line,
                    key: key.clone(),
                    expected: known.to_string(),
                },
                None => ConfigError::UnknownKey {
                    path: self.path.to_string(),
                    line: *line,
                    section: self.name.to_string(),
                    key: key.clone(),
                },
            });
        }
        Ok(())
    }
}

/// Parse config text; `path` only labels error messages.
pub fn parse_config(src: &str, path: &str) -> Result<ExperimentSpec, ConfigError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError::Parse {
        path: path.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    for (name, table) in raw {
        let line = line_of(src, name.span().start);
        let Some(&known) = SECTIONS.iter().find(|s| **s == name.get_ref().as_str()) else {
            return Err(ConfigError::UnknownSection {
                path: path.to_string(),
                line,
                section: name.into_inner(),
            });
        };
        let entries = table
            .into_iter()
            .map(|(k, v)| {
                let line = line_of(src, k.span().start);
                (k.into_inner(), (line, v.into_inner()))
            })
            .collect();
        sections.insert(
            known,
            Section {
                path,
                name: known,
                line,
                entries,
                seen: BTreeSet::new(),
            },
        );
    }
    let mut take = |name: &'static str| {
        sections
            .remove(name)
            .ok_or_else(|| ConfigError::MissingSection {
                path: path.to_string(),
                section: name.to_string(),
            })
    };

    let mut s = take("antenna")?;
    let antenna = AntennaSection {
        l_m: s.f64("L_m")?,
        d_m: s.f64("d_m")?,
        alpha_rad_per_m: s.f64("alpha_rad_per_m")?,
        xi: s.f64("xi")?,
    };
    s.finish()?;

    let mut s = take("channel")?;
    let channel = ChannelSection {
        eta_los: s.f64("eta_los")?,
        d_ref_m: s.f64("D_m")?,
        a1_m: s.f64("a1_m")?,
        a2_m: s.f64("a2_m")?,
    };
    s.finish()?;

    let mut s = take("network")?;
    let mode = match s.opt_str("mode")? {
        None => InterferenceMode::default(),
        Some((line, m)) => m
            .parse()
            .map_err(|e: Error| s.invalid(line, "mode", e.to_string()))?,
    };
    let network = NetworkSection {
        lambda_per_m2: s.f64("lambda_per_m2")?,
        qt_dbm_per_hz: s.f64("qt_dbm_per_hz")?,
        noise_dbm_per_hz: s.f64("noise_dbm_per_hz")?,
        fo_ghz: s.f64("fo_ghz")?,
        bo_ghz: s.f64("bo_ghz")?,
        ro_m: s.f64("ro_m")?,
        theta_o_deg: s.f64("theta_o_deg")?,
        rsim_m: s.opt_f64("rsim_m")?.unwrap_or(DEFAULT_RSIM_M),
        mode,
    };
    s.finish()?;

    let mut s = take("allocation")?;
    let allocation = AllocationSection {
        btotal_ghz: s.f64("btotal_ghz")?,
        band_lo_ghz: s.f64("band_lo_ghz")?,
        band_hi_ghz: s.f64("band_hi_ghz")?,
        gamma_th_db: s.f64("gamma_th_db")?,
        epsilon_db: s.f64("epsilon_db")?,
        rmax_m: s.f64("rmax_m")?,
        draws: s.opt_u64("draws")?.map_or(DEFAULT_DRAWS, |d| d as usize),
        theta_deg: s.opt_f64("theta_deg")?,
        r_m: s.opt_f64("r_m")?,
    };
    s.finish()?;

    let mut s = take("power")?;
    let power = PowerSection {
        qmax_dbm_per_hz: s.f64("qmax_dbm_per_hz")?,
        qc_dbm_per_hz: s.f64("qc_dbm_per_hz")?,
    };
    s.finish()?;

    let mut s = take("experiment")?;
    let kind = match s.opt_str("kind")? {
        None => None,
        Some((line, k)) => Some(
            ExperimentKind::parse(&k)
                .ok_or_else(|| s.invalid(line, "kind", format!("unknown experiment kind `{k}`")))?,
        ),
    };
    let trials = s.opt_u64("trials")?.ok_or_else(|| s.missing("trials"))? as usize;
    let seed = s.opt_u64("seed")?.ok_or_else(|| s.missing("seed"))?;
    let sweep_param = match s.opt_str("sweep_param")? {
        None => None,
        Some((line, p)) => {
            if !SWEEPABLE.iter().any(|(_, k)| *k == p) {
                return Err(s.invalid(
                    line,
                    "sweep_param",
                    format!("`{p}` is not a sweepable parameter"),
                ));
            }
            Some(p)
        }
    };
    let sweep_values = match s.raw("sweep_values") {
        None => Vec::new(),
        Some((line, Value::Array(items))) => {
            let values: Option<Vec<f64>> = items
                .iter()
                .map(|v| match v {
                    Value::Float(x) if x.is_finite() => Some(*x),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                })
                .collect();
            match values {
                Some(v) if !v.is_empty() => v,
                _ => {
                    return Err(s.invalid(
                        line,
                        "sweep_values",
                        "expected a non-empty array of finite numbers",
                    ))
                }
            }
        }
        Some((line, _)) => return Err(s.invalid(line, "sweep_values", "expected an array")),
    };
    if sweep_param.is_some() && sweep_values.is_empty() {
        return Err(s.missing("sweep_values"));
    }
    let out = s.opt_str("out")?.map(|(_, o)| o);
    s.finish()?;

    Ok(ExperimentSpec {
        antenna,
        channel,
        network,
        allocation,
        power,
        experiment: ExperimentSection {
            kind,
            trials,
            seed,
            sweep_param,
            sweep_values,
            out,
        },
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_config(&src, &path.display().to_string())?)
}

fn fmt_value(v: impl Into<Value>) -> String {
    v.into().to_string()
}

/// Serialize a spec so that [`parse_config`] gives it back unchanged.
pub fn write_config(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    let mut section = |name: &str, entries: Vec<(&str, String)>| {
        let _ = writeln!(out, "[{name}]");
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push('\n');
    };
    let a = &spec.antenna;
    section(
        "antenna",
        vec![
            ("L_m", fmt_value(a.l_m)),
            ("d_m", fmt_value(a.d_m)),
            ("alpha_rad_per_m", fmt_value(a.alpha_rad_per_m)),
            ("xi", fmt_value(a.xi)),
        ],
    );
    let c = &spec.channel;
    section(
        "channel",
        vec![
            ("eta_los", fmt_value(c.eta_los)),
            ("D_m", fmt_value(c.d_ref_m)),
            ("a1_m", fmt_value(c.a1_m)),
            ("a2_m", fmt_value(c.a2_m)),
        ],
    );
    let n = &spec.network;
    section(
        "network",
        vec![
            ("lambda_per_m2", fmt_value(n.lambda_per_m2)),
            ("qt_dbm_per_hz", fmt_value(n.qt_dbm_per_hz)),
            ("noise_dbm_per_hz", fmt_value(n.noise_dbm_per_hz)),
            ("fo_ghz", fmt_value(n.fo_ghz)),
            ("bo_ghz", fmt_value(n.bo_ghz)),
            ("ro_m", fmt_value(n.ro_m)),
            ("theta_o_deg", fmt_value(n.theta_o_deg)),
            ("rsim_m", fmt_value(n.rsim_m)),
            ("mode", fmt_value(n.mode.to_string())),
        ],
    );
    let al = &spec.allocation;
    let mut entries = vec![
        ("btotal_ghz", fmt_value(al.btotal_ghz)),
        ("band_lo_ghz", fmt_value(al.band_lo_ghz)),
        ("band_hi_ghz", fmt_value(al.band_hi_ghz)),
        ("gamma_th_db", fmt_value(al.gamma_th_db)),
        ("epsilon_db", fmt_value(al.epsilon_db)),
        ("rmax_m", fmt_value(al.rmax_m)),
        ("draws", fmt_value(al.draws as i64)),
    ];
    if let Some(t) = al.theta_deg {
        entries.push(("theta_deg", fmt_value(t)));
    }
    if let Some(r) = al.r_m {
        entries.push(("r_m", fmt_value(r)));
    }
    section("allocation", entries);
    let p = &spec.power;
    section(
        "power",
        vec![
            ("qmax_dbm_per_hz", fmt_value(p.qmax_dbm_per_hz)),
            ("qc_dbm_per_hz", fmt_value(p.qc_dbm_per_hz)),
        ],
    );
    let e = &spec.experiment;
    let mut entries = Vec::new();
    if let Some(k) = e.kind {
        entries.push(("kind", fmt_value(k.name())));
    }
    entries.push(("trials", fmt_value(e.trials as i64)));
    // toml integers are signed; larger seeds are not representable in a config.
    entries.push(("seed", fmt_value(e.seed as i64)));
    if let Some(p) = &e.sweep_param {
        entries.push(("sweep_param", fmt_value(p.as_str())));
    }
    if !e.sweep_values.is_empty() {
        entries.push((
            "sweep_values",
            fmt_value(
                e.sweep_values
                    .iter()
                    .map(|&v| Value::Float(v))
                    .collect::<Vec<_>>(),
            ),
        ));
    }
    if let Some(o) = &e.out {
        entries.push(("out", fmt_value(o.as_str())));
    }
    section("experiment", entries);
    out.truncate(out.trim_end().len());
    out.push('\n');
    out
}

impl ExperimentSpec {
    fn param_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "L_m" => &mut self.antenna.l_m,
            "d_m" => &mut self.antenna.d_m,
            "alpha_rad_per_m" => &mut self.antenna.alpha_rad_per_m,
            "xi" => &mut self.antenna.xi,
            "eta_los" => &mut self.channel.eta_los,
            "D_m" => &mut self.channel.d_ref_m,
            "a1_m" => &mut self.channel.a1_m,
            "a2_m" => &mut self.channel.a2_m,
            "lambda_per_m2" => &mut self.network.lambda_per_m2,
            "qt_dbm_per_hz" => &mut self.network.qt_dbm_per_hz,
            "noise_dbm_per_hz" => &mut self.network.noise_dbm_per_hz,
            "fo_ghz" => &mut self.network.fo_ghz,
            "bo_ghz" => &mut self.network.bo_ghz,
            "ro_m" => &mut self.network.ro_m,
            "theta_o_deg" => &mut self.network.theta_o_deg,
            "rsim_m" => &mut self.network.rsim_m,
            "btotal_ghz" => &mut self.allocation.btotal_ghz,
            "band_lo_ghz" => &mut self.allocation.band_lo_ghz,
            "band_hi_ghz" => &mut self.allocation.band_hi_ghz,
            "gamma_th_db" => &mut self.allocation.gamma_th_db,
            "epsilon_db" => &mut self.allocation.epsilon_db,
            "rmax_m" => &mut self.allocation.rmax_m,
            "qmax_dbm_per_hz" => &mut self.power.qmax_dbm_per_hz,
            "qc_dbm_per_hz" => &mut self.power.qc_dbm_per_hz,
            "theta_deg" => self.allocation.theta_deg.get_or_insert(0.0),
            _ => return None,
        })
    }

    /// Copy of this experiment with one parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        *out.param_mut(name)
            .ok_or_else(|| Error::invalid(format!("unknown sweep parameter `{name}`")))? = value;
        Ok(out)
    }

    fn param(&self, name: &str) -> Option<f64> {
        self.clone().param_mut(name).map(|v| *v)
    }

    /// Sweep axis and its values; a single point at the current value when
    /// the config has no sweep.
    pub fn sweep_axis(&self, kind: ExperimentKind) -> (String, Vec<f64>) {
        match &self.experiment.sweep_param {
            Some(p) => (p.clone(), self.experiment.sweep_values.clone()),
            None => {
                let p = kind.default_axis();
                (p.to_string(), vec![self.param(p).unwrap_or(f64::NAN)])
            }
        }
    }

    pub fn antenna_config(&self) -> Result<AntennaConfig> {
        let a = &self.antenna;
        AntennaConfig::new(a.l_m, a.d_m, a.alpha_rad_per_m, a.xi)
    }

    pub fn channel_config(&self) -> Result<ChannelConfig> {
        let c = &self.channel;
        let ch = ChannelConfig {
            pathloss_exponent: c.eta_los,
            reference_distance: c.d_ref_m,
            blockage_a1: c.a1_m,
            blockage_a2: c.a2_m,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn network_scenario(&self) -> NetworkScenario {
        let n = &self.network;
        NetworkScenario {
            density: n.lambda_per_m2,
            transmit_psd: dbm_to_watts(n.qt_dbm_per_hz),
            noise_psd: dbm_to_watts(n.noise_dbm_per_hz),
            frequency: n.fo_ghz * 1e9,
            bandwidth: n.bo_ghz * 1e9,
            distance: n.ro_m,
            angle: n.theta_o_deg.to_radians(),
            sim_radius: n.rsim_m,
            trials: self.experiment.trials,
            interference_mode: n.mode,
        }
    }

    /// Allocation settings for a link at `(theta, r)`.
    pub fn allocation_config(&self, theta: f64, r: f64) -> AllocationConfig {
        let a = &self.allocation;
        AllocationConfig {
            total_bandwidth: a.btotal_ghz * 1e9,
            band: (a.band_lo_ghz * 1e9, a.band_hi_ghz * 1e9),
            qos_threshold: db_to_linear(a.gamma_th_db),
            ripple_db: a.epsilon_db,
            angle: theta,
            distance: r,
            transmit_psd: dbm_to_watts(self.network.qt_dbm_per_hz),
            noise_psd: dbm_to_watts(self.network.noise_dbm_per_hz),
        }
    }

    fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec::default().with_tolerances(1e-8, 0.0)
    }
}

/// Random link `i` of a run: `theta ~ U(0, pi/2)`, `r ~ U(0, r_max)`.
///
/// Draw `i` uses stream `i`, so every sweep point sees the same links.
pub fn random_link(seed: u64, i: usize, r_max: f64) -> (f64, f64) {
    let mut rng = RngStream::new(seed, i as u64);
    let theta = FRAC_PI_2 * rng.uniform_open();
    let r = r_max * rng.uniform();
    (theta, r)
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    fn row(&mut self, values: &[String]) {
        self.text.push_str(&values.join(","));
        self.text.push('\n');
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn sweep_header(param: &str) -> String {
    format!("sweep_value_{param}")
}

#[derive(Debug, Clone, Copy)]
struct RatePoint {
    analytic: f64,
    lower_bound: f64,
    mc_mean: f64,
    mc_stderr: f64,
}

fn rate_point(spec: &ExperimentSpec, analytic: bool, mc: bool) -> Result<RatePoint> {
    let antenna = spec.antenna_config()?;
    let channel = spec.channel_config()?;
    let scenario = spec.network_scenario();
    let (mut a, mut lb) = (f64::NAN, f64::NAN);
    if analytic {
        let ctx = RateIntegrandContext::new(&scenario, &antenna, &channel, &spec.quadrature())?;
        a = ctx.average_rate(XiModel::Corrected)?;
        lb = ctx.average_rate(XiModel::LowerBound)?;
    }
    let (mut m, mut se) = (f64::NAN, f64::NAN);
    if mc {
        let r = netsim::mean_rate(&scenario, &antenna, &channel, spec.experiment.seed)?;
        m = r.mean;
        se = r.std_error;
    }
    Ok(RatePoint {
        analytic: a,
        lower_bound: lb,
        mc_mean: m,
        mc_stderr: se,
    })
}

/// Mean plan rates and subchannel counts over the random links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationSummary {
    pub proposed_rate: f64,
    pub equal_rate: f64,
    pub proposed_n: f64,
    pub equal_n: f64,
}

pub fn allocation_summary(spec: &ExperimentSpec) -> Result<AllocationSummary> {
    let antenna = spec.antenna_config()?;
    let lossless = antenna.with_attenuation(0.0);
    let channel = spec.channel_config()?;
    let alpha = spec.antenna.alpha_rad_per_m;
    let draws = spec.allocation.draws;
    if draws == 0 {
        return Err(Error::invalid("allocation.draws must be >= 1"));
    }
    let seed = spec.experiment.seed;
    let r_max = spec.allocation.rmax_m;
    let rows = netsim::run_trials(draws, seed, |rng| {
        let (theta, r) = random_link(rng.seed(), rng.stream_id() as usize, r_max);
        let cfg = spec.allocation_config(theta, r);
        let plan = allocation::allocate(&cfg, &lossless, &channel)?;
        let equal = allocation::equal_allocation(&cfg, &lossless, &channel, plan.len())?;
        let link = Link::from(&cfg);
        Ok([
            allocation::plan_rate(&plan, &antenna, &channel, &link, alpha)?,
            allocation::plan_rate(&equal, &antenna, &channel, &link, alpha)?,
            plan.len() as f64,
            equal.len() as f64,
        ])
    })?;
    let mean = |j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / draws as f64;
    Ok(AllocationSummary {
        proposed_rate: mean(0),
        equal_rate: mean(1),
        proposed_n: mean(2),
        equal_n: mean(3),
    })
}

/// Mean EE over random links whose plan has at least one feasible subchannel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySummary {
    pub proposed_ee: f64,
    pub equal_ee: f64,
    pub links_used: usize,
}

pub fn energy_summary(spec: &ExperimentSpec) -> Result<EnergySummary> {
    let antenna = spec.antenna_config()?;
    let lossless = antenna.with_attenuation(0.0);
    let channel = spec.channel_config()?;
    let draws = spec.allocation.draws;
    let seed = spec.experiment.seed;
    let r_max = spec.allocation.rmax_m;
    let q_max = dbm_to_watts(spec.power.qmax_dbm_per_hz);
    let q_c = dbm_to_watts(spec.power.qc_dbm_per_hz);
    let rows = netsim::run_trials(draws, seed, |rng| {
        let (theta, r) = random_link(rng.seed(), rng.stream_id() as usize, r_max);
        let cfg = spec.allocation_config(theta, r);
        let plan = allocation::allocate(&cfg, &lossless, &channel)?;
        let gains = plan
            .entries
            .iter()
            .map(|e| {
                Ok(
                    antenna.effective_gain(e.center, theta)? * channel.path_loss(e.center, r)
                        / cfg.noise_psd,
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        if gains.is_empty() {
            return Ok(None);
        }
        let pc = PowerConfig {
            max_psd: q_max,
            circuit_psd: q_c,
            qos_threshold: cfg.qos_threshold,
            channel_gains: gains,
        };
        match power_ee::allocate_power(&pc) {
            Ok(p) => Ok(Some((p.average_ee, power_ee::equal_power_ee(&pc)?))),
            Err(Error::AllSubchannelsInfeasible) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let used: Vec<(f64, f64)> = rows.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::AllSubchannelsInfeasible);
    }
    let n = used.len() as f64;
    Ok(EnergySummary {
        proposed_ee: used.iter().map(|u| u.0).sum::<f64>() / n,
        equal_ee: used.iter().map(|u| u.1).sum::<f64>() / n,
        links_used: used.len(),
    })
}

fn experiment_csv(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<String> {
    let (param, values) = spec.sweep_axis(kind);
    let sweep_col = sweep_header(&param);
    let points = values
        .iter()
        .map(|&v| {
            if spec.experiment.sweep_param.is_some() {
                spec.with_param(&param, v)
            } else {
                Ok(spec.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let csv = match kind {
        ExperimentKind::RateAnalytic | ExperimentKind::RateMc | ExperimentKind::RateCompare => {
            let (analytic, mc) = match kind {
                ExperimentKind::RateAnalytic => (true, false),
                ExperimentKind::RateMc => (false, true),
                _ => (true, true),
            };
            let mut header = vec![sweep_col.as_str()];
            if analytic {
                header.push("analytic_rate_bps");
            }
            if mc {
                header.extend(["mc_rate_bps", "mc_stderr_bps"]);
            }
            if analytic {
                header.push("lower_bound_bps");
            }
            let mut csv = Csv::new(&header);
            for (v, p) in values.iter().zip(&points) {
                let r = rate_point(p, analytic, mc)?;
                let mut row = vec![num(*v)];
                if analytic {
                    row.push(num(r.analytic));
                }
                if mc {
                    row.extend([num(r.mc_mean), num(r.mc_stderr)]);
                }
                if analytic {
                    row.push(num(r.lower_bound));
                }
                csv.row(&row);
            }
            csv
        }
        ExperimentKind::Allocate => {
            let mut csv = Csv::new(&[
                &sweep_col,
                "index",
                "center_hz",
                "bandwidth_hz",
                "center_snr_db",
                "exact_rate_bps",
            ]);
            for (v, p) in values.iter().zip(&points) {
                let (Some(theta_deg), Some(r)) = (p.allocation.theta_deg, p.allocation.r_m) else {
                    return Err(Error::invalid(
                        "allocate needs allocation.theta_deg and allocation.r_m",
                    ));
                };
                let antenna = p.antenna_config()?;
                let channel = p.channel_config()?;
                let cfg = p.allocation_config(theta_deg.to_radians(), r);
                let plan = allocation::allocate(&cfg, &antenna.with_attenuation(0.0), &channel)?;
                for (i, e) in plan.entries.iter().enumerate() {
                    let single = allocation::SubchannelPlan { entries: vec![*e] };
                    let rate = allocation::plan_rate(
                        &single,
                        &antenna,
                        &channel,
                        &Link::from(&cfg),
                        antenna.attenuation,
                    )?;
                    csv.row(&[
                        num(*v),
                        (i + 1).to_string(),
                        num(e.center),
                        num(e.bandwidth),
                        num(10.0 * e.center_snr.log10()),
                        num(rate),
                    ]);
                }
            }
            csv
        }
        ExperimentKind::AllocateCompare => {
            let mut csv = Csv::new(&[
                &sweep_col,
                "proposed_rate_bps",
                "equal_rate_bps",
                "proposed_N",
                "equal_N",
            ]);
            for (v, p) in values.iter().zip(&points) {
                let s = allocation_summary(p)?;
                csv.row(&[
                    num(*v),
                    num(s.proposed_rate),
                    num(s.equal_rate),
                    num(s.proposed_n),
                    num(s.equal_n),
                ]);
            }
            csv
        }
        ExperimentKind::PowerEe => {
            let mut csv = Csv::new(&[&sweep_col, "proposed_ee", "equal_ee", "links_used"]);
            for (v, p) in values.iter().zip(&points) {
                let s = energy_summary(p)?;
                csv.row(&[
                    num(*v),
                    num(s.proposed_ee),
                    num(s.equal_ee),
                    s.links_used.to_string(),
                ]);
            }
            csv
        }
        ExperimentKind::Sweep => unreachable!("sweep is expanded by run"),
    };
    Ok(csv.text)
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("csv.partial");
    let result = fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Run the experiment and write its CSV file(s); returns the paths written.
///
/// `sweep` runs `rate-compare`, `allocate-compare` and `power-ee` on the
/// same axis and writes `<stem>_rate.csv`, `<stem>_allocate.csv` and
/// `<stem>_power.csv`. Nothing is written unless every part succeeds.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let kind = spec
        .experiment
        .kind
        .ok_or_else(|| Error::invalid("no experiment kind given"))?;
    let out = PathBuf::from(
        spec.experiment
            .out
            .clone()
            .unwrap_or_else(|| format!("{}.csv", kind.name())),
    );
    let outputs: Vec<(PathBuf, String)> = if kind == ExperimentKind::Sweep {
        [
            (ExperimentKind::RateCompare, "rate"),
            (ExperimentKind::AllocateCompare, "allocate"),
            (ExperimentKind::PowerEe, "power"),
        ]
        .into_iter()
        .map(|(k, suffix)| Ok((with_suffix(&out, suffix), experiment_csv(spec, k)?)))
        .collect::<Result<_>>()?
    } else {
        vec![(out, experiment_csv(spec, kind)?)]
    };
    let mut written = Vec::new();
    for (path, text) in &outputs {
        if let Err(e) = write_atomic(path, text) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path.clone());
    }
    Ok(written)
}
