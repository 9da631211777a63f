//! Experiment configuration: a TOML file whose keys mirror the model symbols.
//!
//! Every key is optional; missing keys take the reference values. Unknown keys
//! are rejected. Errors carry the 1-based line they refer to.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thzsim_core::channel::{ChannelParams, BOLTZMANN, SPEED_OF_LIGHT};
use thzsim_core::topology::NodeCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random draw derives from it.
    pub seed: u64,
    pub topology: TopologyConfig,
    pub channel: ChannelConfig,
    pub traffic: TrafficConfig,
    #[serde(rename = "static")]
    pub sweep: SweepConfig,
    pub dynamic: DynamicConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub bs_count: usize,
    pub ris_count: usize,
    pub vr_count: usize,
    pub range_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub bandwidth_hz: f64,
    pub freq_hz: f64,
    pub k_abs_per_m: f64,
    pub temp_k: f64,
    pub p_bs_w: f64,
    pub p_ris_w: f64,
    pub n_elements: usize,
    pub boltzmann_j_per_k: f64,
    pub light_speed_m_per_s: f64,
    pub optimal_phase: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Chunk size t per demand, Gbit.
    pub chunk_gbit: f64,
    /// RIS queue length L, Gbit.
    pub queue_l_gbit: f64,
    /// Queue observation window τ, seconds.
    pub tau_s: f64,
    /// Candidate paths per demand for parallel distribution.
    pub k_pddt: usize,
    /// Candidate paths per demand for serial distribution.
    pub k_sddt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub d_counts: Vec<usize>,
    pub replications: usize,
    pub ci_level: f64,
    /// Draw fresh node positions for every replication.
    pub redraw_topology: bool,
    /// Take each sweep point's demands as a prefix of one larger draw.
    pub nested_demands: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicConfig {
    pub epoch_minutes: u32,
    pub horizon_hours: f64,
    pub d_fixed: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            topology: TopologyConfig::default(),
            channel: ChannelConfig::default(),
            traffic: TrafficConfig::default(),
            sweep: SweepConfig::default(),
            dynamic: DynamicConfig::default(),
        }
    }
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig { bs_count: 7, ris_count: 7, vr_count: 7, range_m: 20.0 }
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let p = ChannelParams::default();
        ChannelConfig {
            bandwidth_hz: p.bandwidth_hz,
            freq_hz: p.freq_hz,
            k_abs_per_m: p.k_abs_per_m,
            temp_k: p.temp_k,
            p_bs_w: p.p_bs_w,
            p_ris_w: p.p_ris_w,
            n_elements: p.n_elements,
            boltzmann_j_per_k: BOLTZMANN,
            light_speed_m_per_s: SPEED_OF_LIGHT,
            optimal_phase: true,
        }
    }
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig { chunk_gbit: 0.5, queue_l_gbit: 10.0, tau_s: 0.5, k_pddt: 5, k_sddt: 1 }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            d_counts: vec![20, 50, 100, 200, 300, 500],
            replications: 10,
            ci_level: 0.95,
            redraw_topology: true,
            nested_demands: false,
        }
    }
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig { epoch_minutes: 30, horizon_hours: 4.0, d_fixed: 300 }
    }
}

impl ExperimentConfig {
    pub fn counts(&self) -> NodeCounts {
        NodeCounts {
            bs: self.topology.bs_count,
            ris: self.topology.ris_count,
            vr: self.topology.vr_count,
        }
    }

    pub fn channel_params(&self) -> ChannelParams {
        let c = &self.channel;
        ChannelParams {
            bandwidth_hz: c.bandwidth_hz,
            freq_hz: c.freq_hz,
            k_abs_per_m: c.k_abs_per_m,
            temp_k: c.temp_k,
            p_bs_w: c.p_bs_w,
            p_ris_w: c.p_ris_w,
            n_elements: c.n_elements,
            boltzmann: c.boltzmann_j_per_k,
            light_speed: c.light_speed_m_per_s,
            optimal_phase: c.optimal_phase,
        }
    }

    /// Number of reconfiguration epochs in the dynamic horizon.
    pub fn epoch_count(&self) -> usize {
        let minutes = self.dynamic.horizon_hours * 60.0;
        (minutes / f64::from(self.dynamic.epoch_minutes) + 1e-9).floor() as usize
    }

    /// Checks value ranges. Returned errors name the offending key.
    pub fn validate(&self) -> Result<(), RangeError> {
        fn positive(section: &'static str, key: &'static str, v: f64) -> Result<(), RangeError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(RangeError { section, key, message: format!("must be positive, got {v}") })
            }
        }
        fn at_least_one(section: &'static str, key: &'static str, v: usize) -> Result<(), RangeError> {
            if v >= 1 {
                Ok(())
            } else {
                Err(RangeError { section, key, message: "must be at least 1".into() })
            }
        }
        let t = &self.topology;
        at_least_one("topology", "bs_count", t.bs_count)?;
        at_least_one("topology", "ris_count", t.ris_count)?;
        at_least_one("topology", "vr_count", t.vr_count)?;
        positive("topology", "range_m", t.range_m)?;

        let c = &self.channel;
        positive("channel", "bandwidth_hz", c.bandwidth_hz)?;
        positive("channel", "freq_hz", c.freq_hz)?;
        if !(c.k_abs_per_m >= 0.0 && c.k_abs_per_m.is_finite()) {
            return Err(RangeError {
                section: "channel",
                key: "k_abs_per_m",
                message: format!("must be non-negative, got {}", c.k_abs_per_m),
            });
        }
        positive("channel", "temp_k", c.temp_k)?;
        positive("channel", "p_bs_w", c.p_bs_w)?;
        positive("channel", "p_ris_w", c.p_ris_w)?;
        at_least_one("channel", "n_elements", c.n_elements)?;
        positive("channel", "boltzmann_j_per_k", c.boltzmann_j_per_k)?;
        positive("channel", "light_speed_m_per_s", c.light_speed_m_per_s)?;
        if !c.optimal_phase {
            return Err(RangeError {
                section: "channel",
                key: "optimal_phase",
                message: "only the optimal-phase configuration is supported".into(),
            });
        }

        let tr = &self.traffic;
        positive("traffic", "chunk_gbit", tr.chunk_gbit)?;
        positive("traffic", "queue_l_gbit", tr.queue_l_gbit)?;
        positive("traffic", "tau_s", tr.tau_s)?;
        at_least_one("traffic", "k_pddt", tr.k_pddt)?;
        at_least_one("traffic", "k_sddt", tr.k_sddt)?;

        let s = &self.sweep;
        if s.d_counts.is_empty() || s.d_counts.contains(&0) {
            return Err(RangeError {
                section: "static",
                key: "d_counts",
                message: "must be a non-empty list of positive counts".into(),
            });
        }
        at_least_one("static", "replications", s.replications)?;
        if !(s.ci_level > 0.0 && s.ci_level < 1.0) {
            return Err(RangeError {
                section: "static",
                key: "ci_level",
                message: format!("must lie in (0, 1), got {}", s.ci_level),
            });
        }

        let d = &self.dynamic;
        at_least_one("dynamic", "epoch_minutes", d.epoch_minutes as usize)?;
        if !(d.horizon_hours >= 0.0 && d.horizon_hours.is_finite()) {
            return Err(RangeError {
                section: "dynamic",
                key: "horizon_hours",
                message: format!("must be non-negative, got {}", d.horizon_hours),
            });
        }
        at_least_one("dynamic", "d_fixed", d.d_fixed)?;
        Ok(())
    }

    /// Fully-resolved configuration as TOML; parsing it back yields `self`.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeError {
    pub section: &'static str,
    pub key: &'static str,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}:{line}: {message}")]
    Syntax { origin: String, line: usize, message: String },
    #[error("{origin}:{}: [{section}] {key} {message}", line.map_or_else(|| "?".to_string(), |l| l.to_string()))]
    Range {
        origin: String,
        line: Option<usize>,
        section: &'static str,
        key: &'static str,
        message: String,
    },
}

impl fmt::Display for RangeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} {}", self.section, self.key, self.message)
    }
}

/// 1-based line of `key = …` inside `[section]` (or at top level if absent).
fn locate_key(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        if k.trim() == key && (current == section || current.is_empty() && key == "seed") {
            return Some(i + 1);
        }
    }
    None
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Parses and validates configuration text. `origin` labels error messages.
pub fn parse_config_str(source: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(source).map_err(|e| ConfigError::Syntax {
        origin: origin.to_string(),
        line: e.span().map_or(1, |s| line_of_offset(source, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate().map_err(|e| ConfigError::Range {
        origin: origin.to_string(),
        line: locate_key(source, e.section, e.key),
        section: e.section,
        key: e.key,
        message: e.message,
    })?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let source = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&source, &path.display().to_string())
}
