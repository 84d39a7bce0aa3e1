//! TOML configuration and the parameter presets used throughout.
//!
//! Every field is optional; omitted fields take the default-table values
//! (R = 300 m, d = 20 m, 16 × 8 elements at 60 GHz, θ = −5 dB, α = 2.1,
//! P0 = 20 mW).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{AntennaConfig, ExclusionSpec};
use crate::pointprocess::{NetworkConfig, Thinning};
use crate::{Error, Result};

/// Per-antenna power of the reference configuration, W.
pub const REFERENCE_POWER_W: f64 = 0.02;
/// Carrier of the lower band carrying control frames in the cross-link case, Hz.
pub const SUB7_CARRIER_HZ: f64 = 6e9;
/// Reference RTS and CTS ranges as multiples of the link distance.
pub const REFERENCE_RTS_FACTOR: f64 = 4.8;
pub const REFERENCE_CTS_FACTOR: f64 = 4.0;

pub const DEFAULT_CARRIER_HZ: f64 = 60e9;
pub const DEFAULT_LAMBDA_P: f64 = 4e-4;

/// Friis range ratio `R1/R2 = sqrt(P1/P2 · G1/G2) · f2/f1`.
pub fn range_scale(p1: f64, p2: f64, g1: f64, g2: f64, f1: f64, f2: f64) -> Result<f64> {
    for (name, v) in [("p1", p1), ("p2", p2), ("g1", g1), ("g2", g2), ("f1", f1), ("f2", f2)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain("range_scale", format!("{name} = {v} must be positive")));
        }
    }
    Ok((p1 / p2 * g1 / g2).sqrt() * f2 / f1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Control frames beamformed on the mm-wave band.
    Directional,
    /// Control frames sent omnidirectionally on the lower band.
    CrossLink,
}

fn base(exclusion: ExclusionSpec, data_antenna: AntennaConfig, d: f64) -> NetworkConfig {
    NetworkConfig {
        lambda_p: DEFAULT_LAMBDA_P,
        link_distance: d,
        los_radius: 300.0,
        exclusion,
        data_antenna,
        alpha: 2.1,
        nakagami_m: 1,
        p0: REFERENCE_POWER_W,
        sir_threshold: 10f64.powf(-0.5),
        thinning: Thinning::TypeI,
    }
}

/// Directional RTS/CTS: the reference ranges scaled by array gain and carrier.
pub fn directional_preset(carrier_hz: f64, n_t: u32, n_r: u32, d: f64) -> NetworkConfig {
    let antenna = AntennaConfig::half_wavelength(n_t, n_r, carrier_hz);
    let scale = |n: u32| {
        range_scale(REFERENCE_POWER_W, REFERENCE_POWER_W, n as f64, 1.0, carrier_hz, SUB7_CARRIER_HZ)
            .expect("preset inputs are positive")
    };
    let exclusion = ExclusionSpec {
        r_t: REFERENCE_RTS_FACTOR * d * scale(n_t),
        r_r: REFERENCE_CTS_FACTOR * d * scale(n_r),
        antenna,
    };
    base(exclusion, antenna, d)
}

/// Cross-link RTS/CTS with lower-band power `p_sub7` and default data array.
pub fn cross_link_preset(p_sub7: f64) -> NetworkConfig {
    cross_link_preset_with(p_sub7, DEFAULT_CARRIER_HZ, 16, 8, 20.0)
}

pub fn cross_link_preset_with(p_sub7: f64, carrier_hz: f64, n_t: u32, n_r: u32, d: f64) -> NetworkConfig {
    let s = range_scale(p_sub7, REFERENCE_POWER_W, 1.0, 1.0, SUB7_CARRIER_HZ, SUB7_CARRIER_HZ)
        .expect("positive power");
    let exclusion = ExclusionSpec {
        r_t: REFERENCE_RTS_FACTOR * d * s,
        r_r: REFERENCE_CTS_FACTOR * d * s,
        antenna: AntennaConfig::omni(1, 1, SUB7_CARRIER_HZ),
    };
    base(exclusion, AntennaConfig::half_wavelength(n_t, n_r, carrier_hz), d)
}

/// The `[network]` table. Explicit ranges or spacing override the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub mechanism: Option<Mechanism>,
    pub lambda_p: Option<f64>,
    pub link_distance: Option<f64>,
    pub los_radius: Option<f64>,
    pub alpha: Option<f64>,
    pub nakagami_m: Option<u32>,
    pub p0: Option<f64>,
    pub sir_threshold_db: Option<f64>,
    pub thinning: Option<Thinning>,
    pub carrier_hz: Option<f64>,
    pub n_t: Option<u32>,
    pub n_r: Option<u32>,
    pub p_sub7: Option<f64>,
    pub r_t: Option<f64>,
    pub r_r: Option<f64>,
    pub d0: Option<f64>,
}

impl NetworkSection {
    pub fn build(&self) -> Result<NetworkConfig> {
        let d = self.link_distance.unwrap_or(20.0);
        let carrier = self.carrier_hz.unwrap_or(DEFAULT_CARRIER_HZ);
        let n_t = self.n_t.unwrap_or(16);
        let n_r = self.n_r.unwrap_or(8);
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid("network.link_distance", "must be positive"));
        }
        if !(carrier.is_finite() && carrier > 0.0) {
            return Err(Error::invalid("network.carrier_hz", "must be positive"));
        }
        if n_t == 0 || n_r == 0 {
            return Err(Error::invalid("network.n_t", "element counts must be at least 1"));
        }
        let mut cfg = match self.mechanism.unwrap_or(Mechanism::Directional) {
            Mechanism::Directional => directional_preset(carrier, n_t, n_r, d),
            Mechanism::CrossLink => {
                let p = self.p_sub7.unwrap_or(REFERENCE_POWER_W);
                if !(p.is_finite() && p > 0.0) {
                    return Err(Error::invalid("network.p_sub7", "must be positive"));
                }
                cross_link_preset_with(p, carrier, n_t, n_r, d)
            }
        };
        if let Some(v) = self.lambda_p {
            cfg.lambda_p = v;
        }
        if let Some(v) = self.los_radius {
            cfg.los_radius = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.nakagami_m {
            cfg.nakagami_m = v;
        }
        if let Some(v) = self.p0 {
            cfg.p0 = v;
        }
        if let Some(v) = self.sir_threshold_db {
            cfg.sir_threshold = 10f64.powf(v / 10.0);
        }
        if let Some(v) = self.thinning {
            cfg.thinning = v;
        }
        if let Some(v) = self.r_t {
            cfg.exclusion.r_t = v;
        }
        if let Some(v) = self.r_r {
            cfg.exclusion.r_r = v;
        }
        if let Some(v) = self.d0 {
            cfg.exclusion.antenna.d0 = v;
        }
        cfg.validate().map_err(|e| match e {
            Error::InvalidConfig { field, reason } => Error::InvalidConfig {
                field: format!("network.{field}"),
                reason,
            },
            other => other,
        })?;
        Ok(cfg)
    }
}

/// Whole configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub network: NetworkSection,
    pub experiment: Option<crate::cli::experiment::ExperimentSection>,
}

pub fn parse_config_file(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))
}

/// Parse and validate the network part of a configuration text.
pub fn parse_config(text: &str) -> Result<NetworkConfig> {
    parse_config_file(text)?.network.build()
}

pub fn load_config(path: &Path) -> Result<NetworkConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Short stable digest of a resolved configuration.
pub fn config_hash(cfg: &NetworkConfig) -> String {
    let text = toml::to_string(cfg).expect("configuration serializes");
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}
