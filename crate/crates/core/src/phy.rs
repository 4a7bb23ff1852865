//! Physical-layer model: SINR under co-channel interference, the validity
//! indicator, the three capacity definitions and the network utilities
//! built from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Topology;

/// One link's choice: silent, or a (channel, power level) pair.
///
/// `power` indexes [`Topology::levels`], so level 0 is `p_max / Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Off,
    On { channel: usize, power: usize },
}

impl Strategy {
    pub fn is_on(self) -> bool {
        matches!(self, Strategy::On { .. })
    }

    pub fn channel(self) -> Option<usize> {
        match self {
            Strategy::Off => None,
            Strategy::On { channel, .. } => Some(channel),
        }
    }

    /// Transmit power in mW.
    #[inline]
    pub fn power_mw(self, topo: &Topology) -> f64 {
        match self {
            Strategy::Off => 0.0,
            Strategy::On { power, .. } => topo.levels()[power],
        }
    }

    pub fn is_legal_for(self, link: usize, topo: &Topology) -> bool {
        match self {
            Strategy::Off => true,
            Strategy::On { channel, power } => {
                power < topo.levels().len() && topo.availability(link).binary_search(&channel).is_ok()
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Off => write!(f, "off"),
            Strategy::On { channel, power } => write!(f, "ch{channel}:p{power}"),
        }
    }
}

/// Joint assignment, one strategy per link.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyProfile(Vec<Strategy>);

impl StrategyProfile {
    pub fn new(strategies: Vec<Strategy>) -> Self {
        Self(strategies)
    }

    pub fn all_off(links: usize) -> Self {
        Self(vec![Strategy::Off; links])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn strategies(&self) -> &[Strategy] {
        &self.0
    }

    pub fn set(&mut self, link: usize, s: Strategy) {
        self.0[link] = s;
    }

    /// Copy with one link's strategy replaced.
    pub fn with(&self, link: usize, s: Strategy) -> Self {
        let mut out = self.clone();
        out.0[link] = s;
        out
    }

    pub fn validate(&self, topo: &Topology) -> Result<()> {
        if self.len() != topo.link_count() {
            return Err(Error::Validation(format!(
                "profile has {} entries for {} links",
                self.len(),
                topo.link_count()
            )));
        }
        match self.0.iter().enumerate().find(|(i, s)| !s.is_legal_for(*i, topo)) {
            Some((i, s)) => Err(Error::Validation(format!("strategy {s} is not legal for link {i}"))),
            None => Ok(()),
        }
    }
}

impl std::ops::Index<usize> for StrategyProfile {
    type Output = Strategy;
    fn index(&self, i: usize) -> &Strategy {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityKind {
    /// Shannon: `w * log2(1 + SINR)`.
    Continuous,
    /// Hartley with power-of-two modulation orders: `2 * w * log2(M)`.
    Discrete,
    /// One unit per valid link.
    Binary,
}

/// Capacity definition plus whether the SINR threshold gates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CapacityMode {
    kind: CapacityKind,
    enforce_threshold: bool,
}

impl CapacityMode {
    pub fn new(kind: CapacityKind, enforce_threshold: bool) -> Result<Self> {
        if !enforce_threshold && kind != CapacityKind::Continuous {
            return Err(Error::Config(format!("{kind:?} capacity always enforces the SINR threshold")));
        }
        Ok(Self { kind, enforce_threshold })
    }

    /// Shannon capacity with every ON link counted regardless of SINR.
    pub const fn continuous_unconstrained() -> Self {
        Self { kind: CapacityKind::Continuous, enforce_threshold: false }
    }

    pub const fn continuous() -> Self {
        Self { kind: CapacityKind::Continuous, enforce_threshold: true }
    }

    pub const fn discrete() -> Self {
        Self { kind: CapacityKind::Discrete, enforce_threshold: true }
    }

    pub const fn binary() -> Self {
        Self { kind: CapacityKind::Binary, enforce_threshold: true }
    }

    pub fn kind(self) -> CapacityKind {
        self.kind
    }

    pub fn enforces_threshold(self) -> bool {
        self.enforce_threshold
    }
}

/// Largest power-of-two modulation order supported by `sinr`, capped at
/// `m_max`. `None` when not even binary modulation fits.
pub fn modulation_level(sinr: f64, m_max: u32) -> Option<u32> {
    let levels = (1.0 + sinr.max(0.0)).sqrt().floor();
    if levels < 2.0 {
        return None;
    }
    if levels >= m_max as f64 {
        return Some(m_max);
    }
    let levels = levels as u32;
    Some(1 << (31 - levels.leading_zeros()))
}

/// Capacity of an ON link with the given SINR, before any threshold gating
/// (except for BINARY, which is the threshold indicator itself).
#[inline]
pub fn capacity_at(kind: CapacityKind, sinr: f64, bandwidth: f64, m_max: u32, alpha: f64) -> f64 {
    match kind {
        CapacityKind::Continuous => bandwidth * (1.0 + sinr).log2(),
        CapacityKind::Discrete => match modulation_level(sinr, m_max) {
            Some(m) => 2.0 * bandwidth * m.trailing_zeros() as f64,
            None => 0.0,
        },
        CapacityKind::Binary => {
            if sinr >= alpha {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// `λ_i · C_i` for an ON link: the capacity, zeroed below threshold when the
/// mode enforces it.
#[inline]
pub fn gated_capacity(mode: CapacityMode, sinr: f64, bandwidth: f64, m_max: u32, alpha: f64) -> f64 {
    if mode.enforce_threshold && sinr < alpha {
        0.0
    } else {
        capacity_at(mode.kind, sinr, bandwidth, m_max, alpha)
    }
}

/// SINR of `link` under `profile`; 0 for an OFF link.
pub fn sinr(link: usize, profile: &StrategyProfile, topo: &Topology) -> f64 {
    let Strategy::On { channel, .. } = profile[link] else {
        return 0.0;
    };
    let mut interference = 0.0;
    for (j, s) in profile.strategies().iter().enumerate() {
        if j != link && s.channel() == Some(channel) {
            interference += s.power_mw(topo) * topo.gain(j, link);
        }
    }
    profile[link].power_mw(topo) * topo.gain(link, link) / (topo.noise() + interference)
}

/// SINR of every link at once, sharing the per-channel grouping.
pub fn sinr_all(profile: &StrategyProfile, topo: &Topology) -> Vec<f64> {
    let mut by_channel: Vec<Vec<usize>> = vec![Vec::new(); topo.config().channel_count];
    for (i, s) in profile.strategies().iter().enumerate() {
        if let Some(c) = s.channel() {
            by_channel[c].push(i);
        }
    }
    let mut out = vec![0.0; profile.len()];
    for members in &by_channel {
        for &i in members {
            let interference: f64 = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| profile[j].power_mw(topo) * topo.gain(j, i))
                .sum();
            out[i] = profile[i].power_mw(topo) * topo.gain(i, i) / (topo.noise() + interference);
        }
    }
    out
}

/// λ_i: ON and SINR at or above `alpha`.
pub fn is_valid(link: usize, profile: &StrategyProfile, topo: &Topology, alpha: f64) -> bool {
    profile[link].is_on() && sinr(link, profile, topo) >= alpha
}

/// Raw capacity of one link under `mode`'s capacity definition (no λ gating
/// for CONTINUOUS/DISCRETE). OFF links have zero capacity.
pub fn link_capacity(link: usize, profile: &StrategyProfile, topo: &Topology, mode: CapacityMode, alpha: f64) -> f64 {
    match profile[link] {
        Strategy::Off => 0.0,
        Strategy::On { channel, .. } => capacity_at(
            mode.kind,
            sinr(link, profile, topo),
            topo.bandwidth(channel),
            topo.config().max_modulation,
            alpha,
        ),
    }
}

/// NU: sum of `λ_i · C_i`. With an unconstrained continuous mode every ON
/// link counts.
pub fn network_utility(profile: &StrategyProfile, topo: &Topology, mode: CapacityMode, alpha: f64) -> f64 {
    let sinrs = sinr_all(profile, topo);
    let m_max = topo.config().max_modulation;
    profile
        .strategies()
        .iter()
        .zip(&sinrs)
        .filter_map(|(s, &x)| s.channel().map(|c| gated_capacity(mode, x, topo.bandwidth(c), m_max, alpha)))
        .sum()
}

/// NU_val: capacity summed over links with SINR at or above `alpha` only.
pub fn network_utility_valid(profile: &StrategyProfile, topo: &Topology, mode: CapacityMode, alpha: f64) -> f64 {
    let gated = CapacityMode { kind: mode.kind, enforce_threshold: true };
    network_utility(profile, topo, gated, alpha)
}

pub fn valid_links(profile: &StrategyProfile, topo: &Topology, alpha: f64) -> usize {
    sinr_all(profile, topo)
        .iter()
        .zip(profile.strategies())
        .filter(|(&x, s)| s.is_on() && x >= alpha)
        .count()
}

/// The three per-profile metrics reported everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetrics {
    pub nu: f64,
    pub nu_valid: f64,
    pub valid_links: usize,
}

pub fn profile_metrics(profile: &StrategyProfile, topo: &Topology, mode: CapacityMode, alpha: f64) -> ProfileMetrics {
    let sinrs = sinr_all(profile, topo);
    let m_max = topo.config().max_modulation;
    let mut nu = 0.0;
    let mut nu_valid = 0.0;
    let mut valid = 0;
    for (s, &x) in profile.strategies().iter().zip(&sinrs) {
        if let Some(c) = s.channel() {
            let w = topo.bandwidth(c);
            nu += gated_capacity(mode, x, w, m_max, alpha);
            if x >= alpha {
                nu_valid += capacity_at(mode.kind, x, w, m_max, alpha);
                valid += 1;
            }
        }
    }
    ProfileMetrics { nu, nu_valid, valid_links: valid }
}
