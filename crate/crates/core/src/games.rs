//! Per-link utilities for the local and potential games, best and better
//! responses, and equilibrium checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{capacity_at, gated_capacity, network_utility, CapacityMode, Strategy, StrategyProfile};
use crate::scenario::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoModel {
    /// Utility from the link's own SINR only.
    Local,
    /// Every link's utility is the network utility.
    PotentialIdentical,
    /// Own capacity minus the capacity the link takes away from others.
    PotentialMarginal,
}

impl InfoModel {
    pub fn is_potential(self) -> bool {
        !matches!(self, InfoModel::Local)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    capacity: CapacityMode,
    info: InfoModel,
    power_correction: bool,
    alpha: f64,
}

impl GameSpec {
    pub fn new(capacity: CapacityMode, info: InfoModel, power_correction: bool, alpha: f64) -> Result<Self> {
        if power_correction && info != InfoModel::Local {
            return Err(Error::Config("power correction only applies to the local game".into()));
        }
        if power_correction && !capacity.enforces_threshold() {
            return Err(Error::Config("power correction needs the SINR threshold".into()));
        }
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { capacity, info, power_correction, alpha })
    }

    pub fn local(capacity: CapacityMode, alpha: f64) -> Self {
        Self { capacity, info: InfoModel::Local, power_correction: false, alpha }
    }

    pub fn potential(capacity: CapacityMode, alpha: f64) -> Self {
        Self { capacity, info: InfoModel::PotentialMarginal, power_correction: false, alpha }
    }

    pub fn capacity(&self) -> CapacityMode {
        self.capacity
    }

    pub fn info(&self) -> InfoModel {
        self.info
    }

    pub fn power_correction(&self) -> bool {
        self.power_correction
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A utility plus the link's own `λ_i C_i`, used as the potential game's
/// secondary tie-break key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityValue {
    pub value: f64,
    pub self_capacity: f64,
}

/// `[OFF, then for each available channel ascending, each level ascending]`.
pub fn enumerate_strategies(link: usize, topo: &Topology) -> Vec<Strategy> {
    let q = topo.levels().len();
    let mut out = Vec::with_capacity(1 + topo.availability(link).len() * q);
    out.push(Strategy::Off);
    for &channel in topo.availability(link) {
        out.extend((0..q).map(|power| Strategy::On { channel, power }));
    }
    out
}

pub fn strategy_count(link: usize, topo: &Topology) -> usize {
    1 + topo.availability(link).len() * topo.levels().len()
}

/// Uniform draw over [`enumerate_strategies`], OFF included.
pub fn random_strategy<R: Rng + ?Sized>(link: usize, topo: &Topology, rng: &mut R) -> Strategy {
    let q = topo.levels().len();
    match rng.gen_range(0..strategy_count(link, topo)) {
        0 => Strategy::Off,
        k => Strategy::On { channel: topo.availability(link)[(k - 1) / q], power: (k - 1) % q },
    }
}

pub fn random_profile<R: Rng + ?Sized>(topo: &Topology, rng: &mut R) -> StrategyProfile {
    StrategyProfile::new((0..topo.link_count()).map(|i| random_strategy(i, topo, rng)).collect())
}

struct CoChannel {
    link: usize,
    signal: f64,
    /// Interference at this link from everyone except the responding link.
    interference: f64,
    bandwidth: f64,
    /// `λ_j C_j` with the responding link silent.
    value_without: f64,
}

/// Everything needed to score any candidate of one link against a frozen
/// profile of the others. Built in O(N); each candidate then costs O(1) for
/// the local game and O(co-channel links) for the marginal potential game.
pub struct ResponseContext<'a> {
    link: usize,
    topo: &'a Topology,
    spec: GameSpec,
    profile: &'a StrategyProfile,
    /// Interference at the link's receiver on each channel.
    own_interference: Vec<f64>,
    /// Other ON links grouped by channel (marginal potential game only).
    co_channel: Vec<Vec<CoChannel>>,
}

impl<'a> ResponseContext<'a> {
    pub fn new(link: usize, profile: &'a StrategyProfile, topo: &'a Topology, spec: GameSpec) -> Self {
        let channels = topo.config().channel_count;
        let mut own_interference = vec![0.0; channels];
        for (j, s) in profile.strategies().iter().enumerate() {
            if let (true, Some(c)) = (j != link, s.channel()) {
                own_interference[c] += s.power_mw(topo) * topo.gain(j, link);
            }
        }
        let mut co_channel: Vec<Vec<CoChannel>> = (0..channels).map(|_| Vec::new()).collect();
        if spec.info == InfoModel::PotentialMarginal {
            let m_max = topo.config().max_modulation;
            for (j, s) in profile.strategies().iter().enumerate() {
                let Some(c) = s.channel().filter(|_| j != link) else { continue };
                let interference: f64 = profile
                    .strategies()
                    .iter()
                    .enumerate()
                    .filter(|&(k, o)| k != j && k != link && o.channel() == Some(c))
                    .map(|(k, o)| o.power_mw(topo) * topo.gain(k, j))
                    .sum();
                let signal = s.power_mw(topo) * topo.gain(j, j);
                let bandwidth = topo.bandwidth(c);
                let sinr = signal / (topo.noise() + interference);
                co_channel[c].push(CoChannel {
                    link: j,
                    signal,
                    interference,
                    bandwidth,
                    value_without: gated_capacity(spec.capacity, sinr, bandwidth, m_max, spec.alpha),
                });
            }
        }
        Self { link, topo, spec, profile, own_interference, co_channel }
    }

    pub fn own_sinr(&self, candidate: Strategy) -> f64 {
        match candidate {
            Strategy::Off => 0.0,
            Strategy::On { channel, .. } => {
                candidate.power_mw(self.topo) * self.topo.gain(self.link, self.link)
                    / (self.topo.noise() + self.own_interference[channel])
            }
        }
    }

    fn own_value(&self, candidate: Strategy, sinr: f64) -> f64 {
        match candidate.channel() {
            None => 0.0,
            Some(c) => gated_capacity(
                self.spec.capacity,
                sinr,
                self.topo.bandwidth(c),
                self.topo.config().max_modulation,
                self.spec.alpha,
            ),
        }
    }

    /// Local utility: -1 when transmitting below threshold, otherwise the
    /// capacity (plus the low-power bonus when power correction is on).
    pub fn local(&self, candidate: Strategy) -> UtilityValue {
        let Strategy::On { channel, .. } = candidate else {
            return UtilityValue { value: 0.0, self_capacity: 0.0 };
        };
        let sinr = self.own_sinr(candidate);
        let self_capacity = self.own_value(candidate, sinr);
        if self.spec.capacity.enforces_threshold() && sinr > 0.0 && sinr < self.spec.alpha {
            return UtilityValue { value: -1.0, self_capacity };
        }
        let w = self.topo.bandwidth(channel);
        let mut value = capacity_at(
            self.spec.capacity.kind(),
            sinr,
            w,
            self.topo.config().max_modulation,
            self.spec.alpha,
        );
        if self.spec.power_correction {
            value += w * (1.0 - candidate.power_mw(self.topo) / self.topo.config().p_max);
        }
        UtilityValue { value, self_capacity }
    }

    /// Capacity other links lose while this link plays `candidate`.
    fn inflicted_loss(&self, candidate: Strategy) -> f64 {
        let Some(c) = candidate.channel() else { return 0.0 };
        let p = candidate.power_mw(self.topo);
        let m_max = self.topo.config().max_modulation;
        self.co_channel[c]
            .iter()
            .map(|o| {
                let sinr = o.signal / (self.topo.noise() + o.interference + p * self.topo.gain(self.link, o.link));
                o.value_without - gated_capacity(self.spec.capacity, sinr, o.bandwidth, m_max, self.spec.alpha)
            })
            .sum()
    }

    pub fn potential_marginal(&self, candidate: Strategy) -> UtilityValue {
        let own = self.own_value(candidate, self.own_sinr(candidate));
        UtilityValue { value: own - self.inflicted_loss(candidate), self_capacity: own }
    }

    /// Full network utility with the candidate substituted.
    pub fn potential_identical(&self, candidate: Strategy) -> UtilityValue {
        let own = self.own_value(candidate, self.own_sinr(candidate));
        let value = network_utility(&self.profile.with(self.link, candidate), self.topo, self.spec.capacity, self.spec.alpha);
        UtilityValue { value, self_capacity: own }
    }

    pub fn utility(&self, candidate: Strategy) -> UtilityValue {
        match self.spec.info {
            InfoModel::Local => self.local(candidate),
            InfoModel::PotentialIdentical => self.potential_identical(candidate),
            InfoModel::PotentialMarginal => self.potential_marginal(candidate),
        }
    }
}

/// Local utility without power correction, whatever `spec` says.
pub fn utility_local(link: usize, candidate: Strategy, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> UtilityValue {
    let spec = GameSpec { info: InfoModel::Local, power_correction: false, ..*spec };
    ResponseContext::new(link, profile, topo, spec).local(candidate)
}

/// Local utility with the `w (1 - p / p_max)` bonus on transmitting strategies.
pub fn utility_local_power(link: usize, candidate: Strategy, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> UtilityValue {
    let spec = GameSpec { info: InfoModel::Local, power_correction: true, ..*spec };
    ResponseContext::new(link, profile, topo, spec).local(candidate)
}

pub fn utility_potential_identical(link: usize, candidate: Strategy, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> f64 {
    let spec = GameSpec { info: InfoModel::PotentialIdentical, power_correction: false, ..*spec };
    ResponseContext::new(link, profile, topo, spec).potential_identical(candidate).value
}

pub fn utility_potential_marginal(link: usize, candidate: Strategy, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> f64 {
    let spec = GameSpec { info: InfoModel::PotentialMarginal, power_correction: false, ..*spec };
    ResponseContext::new(link, profile, topo, spec).potential_marginal(candidate).value
}

/// Utility under the model named by `spec`.
pub fn utility(link: usize, candidate: Strategy, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> UtilityValue {
    ResponseContext::new(link, profile, topo, *spec).utility(candidate)
}

/// Best response with the tie rules:
/// 1. the current strategy is kept whenever it attains the maximum utility;
/// 2. potential games prefer higher own capacity among equal utilities;
/// 3. otherwise the earliest strategy in enumeration order wins.
pub fn best_response(link: usize, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> Strategy {
    let ctx = ResponseContext::new(link, profile, topo, *spec);
    let current = profile[link];
    let current_value = ctx.utility(current).value;
    let by_self_capacity = spec.info.is_potential();

    let mut best = Strategy::Off;
    let mut best_u = UtilityValue { value: f64::NEG_INFINITY, self_capacity: f64::NEG_INFINITY };
    for s in enumerate_strategies(link, topo) {
        let u = ctx.utility(s);
        let better = u.value > best_u.value
            || (by_self_capacity && u.value == best_u.value && u.self_capacity > best_u.self_capacity);
        if better {
            best = s;
            best_u = u;
        }
    }
    if current_value >= best_u.value {
        current
    } else {
        best
    }
}

/// A uniformly random strictly improving strategy, or the current one.
pub fn better_response<R: Rng + ?Sized>(
    link: usize,
    profile: &StrategyProfile,
    topo: &Topology,
    spec: &GameSpec,
    rng: &mut R,
) -> Strategy {
    let ctx = ResponseContext::new(link, profile, topo, *spec);
    let current = ctx.utility(profile[link]).value;
    let improving: Vec<Strategy> =
        enumerate_strategies(link, topo).into_iter().filter(|&s| ctx.utility(s).value > current).collect();
    if improving.is_empty() {
        profile[link]
    } else {
        improving[rng.gen_range(0..improving.len())]
    }
}

/// True when no link can strictly improve by a unilateral deviation.
pub fn is_pure_nash(profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> bool {
    (0..topo.link_count()).all(|i| is_best_for(i, profile, topo, spec))
}

pub(crate) fn is_best_for(link: usize, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> bool {
    let ctx = ResponseContext::new(link, profile, topo, *spec);
    let current = ctx.utility(profile[link]).value;
    enumerate_strategies(link, topo).into_iter().all(|s| ctx.utility(s).value <= current)
}

/// Largest `|Δu - ΔNU|` over random unilateral deviations, relative to
/// `max(1, |NU|, |NU'|)`.
pub fn check_potential_identity<R: Rng + ?Sized>(
    topo: &Topology,
    spec: &GameSpec,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if !spec.info.is_potential() {
        return Err(Error::Precondition("potential identity needs a potential-game utility".into()));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let profile = random_profile(topo, rng);
        let link = rng.gen_range(0..topo.link_count());
        let alt = random_strategy(link, topo, rng);
        let ctx = ResponseContext::new(link, &profile, topo, *spec);
        let du = ctx.utility(alt).value - ctx.utility(profile[link]).value;
        let before = network_utility(&profile, topo, spec.capacity, spec.alpha);
        let after = network_utility(&profile.with(link, alt), topo, spec.capacity, spec.alpha);
        let scale = 1f64.max(before.abs()).max(after.abs());
        worst = worst.max((du - (after - before)).abs() / scale);
    }
    Ok(worst)
}
