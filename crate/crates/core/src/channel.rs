//! THz physical layer: molecular absorption, spreading gain, noise and the
//! capacity of RIS outgoing links.
//!
//! Everything here is SI (m, Hz, W, bit/s). The RIS phase configuration is
//! taken as optimal, so the phase sum over the occupied reflecting elements
//! collapses to their count and only `|Z|` is tracked.

use alloc::collections::{BTreeMap, BTreeSet};
use core::f64::consts::PI;

use thiserror::Error;

use crate::routing::Path;
use crate::topology::{LinkId, NodeId, NodeKind, Topology};

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const SPEED_OF_LIGHT: f64 = 3e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Bandwidth W in Hz.
    pub bandwidth_hz: f64,
    /// Carrier frequency f in Hz.
    pub freq_hz: f64,
    /// Molecular absorption coefficient k(f) in 1/m.
    pub k_abs_per_m: f64,
    /// Temperature T0 in Kelvin.
    pub temp_k: f64,
    /// Transmit power of a base station in W.
    pub p_bs_w: f64,
    /// Transmit power of a RIS in W.
    pub p_ris_w: f64,
    /// Reflecting elements |N| per RIS.
    pub n_elements: usize,
    pub boltzmann: f64,
    pub light_speed: f64,
    /// Phases aligned with the channel. Only `true` is modeled.
    pub optimal_phase: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            bandwidth_hz: 3e9,
            freq_hz: 1e12,
            k_abs_per_m: 0.0016,
            temp_k: 300.0,
            p_bs_w: 10.0,
            p_ris_w: 1.0,
            n_elements: 16,
            boltzmann: BOLTZMANN,
            light_speed: SPEED_OF_LIGHT,
            optimal_phase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("parameter `{name}` must be positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("link {from}->{to} does not originate at a RIS")]
    NotRisLink { from: NodeId, to: NodeId },
    #[error("only the optimal-phase configuration is modeled")]
    NonOptimalPhase,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("freq_hz", self.freq_hz),
            ("temp_k", self.temp_k),
            ("p_bs_w", self.p_bs_w),
            ("p_ris_w", self.p_ris_w),
            ("boltzmann", self.boltzmann),
            ("light_speed", self.light_speed),
            ("n_elements", self.n_elements as f64),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ChannelError::InvalidParameter { name, value });
            }
        }
        // k(f) = 0 is a meaningful limit (no absorption), so only negatives fail.
        if !(self.k_abs_per_m >= 0.0 && self.k_abs_per_m.is_finite()) {
            return Err(ChannelError::InvalidParameter {
                name: "k_abs_per_m",
                value: self.k_abs_per_m,
            });
        }
        if !self.optimal_phase {
            return Err(ChannelError::NonOptimalPhase);
        }
        Ok(())
    }

    /// Free-space spreading factor c²/(16π²f²d²) shared by A and H.
    fn spreading(&self, d: f64) -> f64 {
        let c = self.light_speed;
        let f = self.freq_hz;
        (c * c) / (16.0 * PI * PI * f * f * d * d)
    }
}

fn check_distance(d: f64) -> Result<(), ChannelError> {
    if d > 0.0 {
        Ok(())
    } else {
        Err(ChannelError::NonPositiveDistance(d))
    }
}

/// Molecular-absorption noise factor A(d) = c²/(16π²f²d²)·(1 − e^{−k d}).
pub fn absorption_gain(d: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    check_distance(d)?;
    Ok(params.spreading(d) * -libm::expm1(-params.k_abs_per_m * d))
}

/// Channel gain H(d) = (c/(4πdf))²·e^{−d k}.
pub fn channel_gain(d: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    check_distance(d)?;
    Ok(params.spreading(d) * libm::exp(-params.k_abs_per_m * d))
}

/// Johnson-Nyquist term W·c²/(4πf²)·k_B·T0.
///
/// The prefactor is kept in this exact form (rather than the textbook
/// k_B·T0·W) so capacities line up with the published model.
pub fn thermal_noise(params: &ChannelParams) -> f64 {
    let c = params.light_speed;
    let f = params.freq_hz;
    params.bandwidth_hz * c * c / (4.0 * PI * f * f) * params.boltzmann * params.temp_k
}

/// Offline usage sets derived from the full candidate-path collection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UsageSets {
    /// Per RIS: outgoing links used by at least one candidate path.
    pub x_links: BTreeMap<NodeId, BTreeSet<LinkId>>,
    /// Per RIS outgoing link: incoming links that feed it on some path.
    pub y_links: BTreeMap<LinkId, BTreeSet<LinkId>>,
    /// Per RIS outgoing link: occupied reflecting elements, min(|Y|, |N|).
    pub z_count: BTreeMap<LinkId, usize>,
    /// RISs on any candidate path.
    pub i_ris: BTreeSet<NodeId>,
    /// BSs on any candidate path.
    pub j_bs: BTreeSet<NodeId>,
}

impl UsageSets {
    pub fn z_of(&self, link: LinkId) -> usize {
        self.z_count.get(&link).copied().unwrap_or(0)
    }

    pub fn used_out_links(&self, ris: NodeId) -> impl Iterator<Item = LinkId> + '_ {
        self.x_links.get(&ris).into_iter().flatten().copied()
    }
}

pub fn derive_usage_sets<'a, I>(paths: I, topology: &Topology, params: &ChannelParams) -> UsageSets
where
    I: IntoIterator<Item = &'a Path>,
{
    let mut usage = UsageSets::default();
    for path in paths {
        for (hop, &link) in path.links.iter().enumerate() {
            let from = topology.link(link).from;
            match topology.node(from).kind {
                NodeKind::Ris => {
                    usage.i_ris.insert(from);
                    usage.x_links.entry(from).or_default().insert(link);
                    let feeding = usage.y_links.entry(link).or_default();
                    if hop > 0 {
                        feeding.insert(path.links[hop - 1]);
                    }
                }
                NodeKind::BaseStation => {
                    usage.j_bs.insert(from);
                }
                NodeKind::VrUser => {}
            }
        }
    }
    usage.z_count = usage
        .y_links
        .iter()
        .map(|(&l, y)| (l, y.len().min(params.n_elements)))
        .collect();
    usage
}

fn interference(
    receiver: NodeId,
    skip: Option<NodeId>,
    usage: &UsageSets,
    topology: &Topology,
    params: &ChannelParams,
) -> f64 {
    let sum = |set: &BTreeSet<NodeId>| -> f64 {
        set.iter()
            .filter(|&&i| i != receiver && Some(i) != skip)
            .filter_map(|&i| absorption_gain(topology.distance(i, receiver), params).ok())
            .sum()
    };
    params.p_ris_w * sum(&usage.i_ris) + params.p_bs_w * sum(&usage.j_bs)
}

/// Total noise at `receiver`: thermal plus absorption noise re-radiated from
/// every path-participating RIS and BS. A node coinciding with the receiver
/// contributes nothing.
pub fn noise_power(
    receiver: NodeId,
    usage: &UsageSets,
    topology: &Topology,
    params: &ChannelParams,
) -> f64 {
    thermal_noise(params) + interference(receiver, None, usage, topology, params)
}

/// Capacity in bit/s of a RIS outgoing link given the occupied elements.
/// The transmitting RIS is not counted as its own interferer.
pub fn link_capacity(
    link: LinkId,
    usage: &UsageSets,
    topology: &Topology,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let l = topology.link(link);
    if topology.node(l.from).kind != NodeKind::Ris {
        return Err(ChannelError::NotRisLink { from: l.from, to: l.to });
    }
    let z = usage.z_of(link);
    if z == 0 {
        return Ok(0.0);
    }
    let h = channel_gain(l.distance, params)?;
    let noise = thermal_noise(params) + interference(l.to, Some(l.from), usage, topology, params);
    let snr = params.p_ris_w * h * z as f64 / noise;
    Ok(params.bandwidth_hz * libm::log2(1.0 + snr))
}

/// Average serving speed S_r in bit/s: mean capacity over the used outgoing
/// links, or 0 for an unused RIS.
pub fn ris_speed(
    ris: NodeId,
    usage: &UsageSets,
    topology: &Topology,
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for link in usage.used_out_links(ris) {
        total += link_capacity(link, usage, topology, params)?;
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}
