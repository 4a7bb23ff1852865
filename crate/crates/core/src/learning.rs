//! No-external-regret learning on the local game: exponential weights (FS)
//! and regret matching (HM) with informed players, plus regret and
//! coarse-correlated-equilibrium audits of the resulting play.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{enumerate_strategies, GameSpec, InfoModel, ResponseContext};
use crate::phy::{capacity_at, profile_metrics, sinr, Strategy, StrategyProfile};
use crate::scenario::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Exponential weights, `q ∝ (1 + β)^U`.
    Fs,
    /// Regret matching, `q ∝ [R]+`.
    Hm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningSchedule {
    /// Every player redraws its action every step.
    Synchronous,
    /// Each player redraws with probability 1/N and otherwise repeats its
    /// previous action; all players still update every step.
    Asynchronous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    pub algorithm: Algorithm,
    pub beta: f64,
    pub total_steps: usize,
    /// Fraction of the final steps used for reported means and joint-play
    /// counts.
    pub averaging_window: f64,
    pub rng_seed: u64,
    pub schedule: LearningSchedule,
    pub record_trajectory: bool,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Fs,
            beta: 0.1,
            total_steps: 200_000,
            averaging_window: 0.1,
            rng_seed: 0,
            schedule: LearningSchedule::Synchronous,
            record_trajectory: true,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithm == Algorithm::Fs && !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.averaging_window > 0.0 && self.averaging_window <= 1.0) {
            return Err(Error::Config(format!("averaging_window must be in (0, 1], got {}", self.averaging_window)));
        }
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be positive".into()));
        }
        Ok(())
    }

    /// First step inside the averaging window.
    pub fn window_start(&self) -> usize {
        let len = ((self.total_steps as f64 * self.averaging_window).ceil() as usize).clamp(1, self.total_steps);
        self.total_steps - len
    }
}

/// One link's mixed strategy and the running sums that drive it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub strategies: Vec<Strategy>,
    pub q: Vec<f64>,
    /// Cumulative utilities (FS) or cumulative regrets (HM).
    pub cumulative: Vec<f64>,
}

impl LearnerState {
    pub fn new(strategies: Vec<Strategy>) -> Self {
        let n = strategies.len();
        Self { strategies, q: vec![1.0 / n as f64; n], cumulative: vec![0.0; n] }
    }

    pub fn update(&mut self, algorithm: Algorithm, beta: f64, utilities: &[f64], realized: usize) -> Result<()> {
        self.q = match algorithm {
            Algorithm::Fs => fs_update(&mut self.cumulative, utilities, beta)?,
            Algorithm::Hm => hm_update(&mut self.cumulative, utilities, realized)?,
        };
        Ok(())
    }
}

fn check_finite(utilities: &[f64]) -> Result<()> {
    match utilities.iter().position(|u| !u.is_finite()) {
        Some(k) => Err(Error::NonFinite(format!("utility[{k}] = {}", utilities[k]))),
        None => Ok(()),
    }
}

fn normalise(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `(1 + β)^U` normalised, computed with exponents shifted by `max U` so
/// large cumulative utilities cannot overflow.
pub fn fs_probabilities(cumulative: &[f64], beta: f64) -> Vec<f64> {
    let top = cumulative.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rate = beta.ln_1p();
    normalise(cumulative.iter().map(|&u| ((u - top) * rate).exp()).collect())
}

/// Adds this step's utilities to `cumulative` and returns the new mixed
/// strategy.
pub fn fs_update(cumulative: &mut [f64], utilities: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    if cumulative.len() != utilities.len() {
        return Err(Error::Validation("utility vector length differs from strategy count".into()));
    }
    check_finite(utilities)?;
    for (c, u) in cumulative.iter_mut().zip(utilities) {
        *c += u;
    }
    Ok(fs_probabilities(cumulative, beta))
}

/// Positive parts of the cumulative regrets, normalised; uniform when none
/// is positive.
pub fn hm_probabilities(cumulative: &[f64]) -> Vec<f64> {
    let positive: Vec<f64> = cumulative.iter().map(|r| r.max(0.0)).collect();
    if positive.iter().all(|&r| r == 0.0) {
        let n = cumulative.len() as f64;
        return vec![1.0 / n; cumulative.len()];
    }
    normalise(positive)
}

/// Accumulates `u(s) - u(realized)` into the regrets and returns the new
/// mixed strategy.
pub fn hm_update(cumulative: &mut [f64], utilities: &[f64], realized: usize) -> Result<Vec<f64>> {
    if cumulative.len() != utilities.len() || realized >= utilities.len() {
        return Err(Error::Validation("utility vector or realized index out of range".into()));
    }
    check_finite(utilities)?;
    let baseline = utilities[realized];
    for (c, u) in cumulative.iter_mut().zip(utilities) {
        *c += u - baseline;
    }
    Ok(hm_probabilities(cumulative))
}

fn require_local(spec: &GameSpec) -> Result<()> {
    if spec.info() != InfoModel::Local {
        return Err(Error::Precondition("learning runs on the local game utilities".into()));
    }
    Ok(())
}

/// Utility of every own strategy (in enumeration order) against the
/// opponents' realized play.
pub fn informed_utility_vector(link: usize, realized: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> Result<Vec<f64>> {
    require_local(spec)?;
    let ctx = ResponseContext::new(link, realized, topo, *spec);
    Ok(enumerate_strategies(link, topo).into_iter().map(|s| ctx.local(s).value).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningStep {
    pub step: usize,
    pub nu: f64,
    pub nu_valid: f64,
    pub valid_links: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMeans {
    pub nu: f64,
    pub nu_valid: f64,
    pub valid_links: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningTrace {
    pub algorithm: Algorithm,
    pub total_steps: usize,
    pub window_start: usize,
    /// Per-step metrics of the realized profile (when recorded).
    pub steps: Vec<LearningStep>,
    pub learners: Vec<LearnerState>,
    /// `Σ_t u_i(s, s_-i^t)` for every own strategy `s`.
    pub cumulative_strategy_utility: Vec<Vec<f64>>,
    /// `Σ_t u_i(s_i^t, s_-i^t)`.
    pub cumulative_realized_utility: Vec<f64>,
    /// Largest utility any player could have obtained in any step.
    pub max_step_utility: f64,
    /// Joint plays observed inside the averaging window.
    #[serde(with = "joint_plays_serde")]
    pub joint_plays: BTreeMap<StrategyProfile, usize>,
    pub window_means: WindowMeans,
    pub last_profile: StrategyProfile,
}

impl LearningTrace {
    /// CSV: `step,nu,nu_valid,valid_links`.
    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "nu", "nu_valid", "valid_links"])?;
        for s in &self.steps {
            w.write_record([s.step.to_string(), s.nu.to_string(), s.nu_valid.to_string(), s.valid_links.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV: `link,strategy,probability` for every final mixed strategy.
    pub fn write_mixed_strategies_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["link", "strategy", "probability"])?;
        for (i, l) in self.learners.iter().enumerate() {
            for (s, q) in l.strategies.iter().zip(&l.q) {
                w.write_record([i.to_string(), s.to_string(), q.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// CSV: `link,average_external_regret`.
    pub fn write_regret_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["link", "average_external_regret"])?;
        for i in 0..self.learners.len() {
            w.write_record([i.to_string(), average_external_regret(i, self).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

mod joint_plays_serde {
    use super::{BTreeMap, StrategyProfile};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<StrategyProfile, usize>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<StrategyProfile, usize>, D::Error> {
        Ok(Vec::<(StrategyProfile, usize)>::deserialize(d)?.into_iter().collect())
    }
}

/// Plays the learning dynamics for `config.total_steps` steps.
pub fn run_learning(topo: &Topology, spec: &GameSpec, config: &LearningConfig) -> Result<LearningTrace> {
    require_local(spec)?;
    config.validate()?;
    let n = topo.link_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut learners: Vec<LearnerState> = (0..n).map(|i| LearnerState::new(enumerate_strategies(i, topo))).collect();
    let mut cum_strategy: Vec<Vec<f64>> = learners.iter().map(|l| vec![0.0; l.strategies.len()]).collect();
    let mut cum_realized = vec![0.0; n];
    let mut realized = vec![0usize; n];
    let mut max_step_utility = f64::NEG_INFINITY;
    let window_start = config.window_start();
    let mut joint_plays = BTreeMap::new();
    let mut sums = (0.0, 0.0, 0.0);
    let mut steps = Vec::new();
    let mut profile = StrategyProfile::all_off(n);
    let redraw_p = 1.0 / n as f64;

    for t in 0..config.total_steps {
        for (i, l) in learners.iter().enumerate() {
            let redraw = match config.schedule {
                LearningSchedule::Synchronous => true,
                LearningSchedule::Asynchronous => t == 0 || rng.gen_bool(redraw_p),
            };
            if redraw {
                let dist = WeightedIndex::new(&l.q).map_err(|e| Error::NonFinite(format!("mixed strategy of link {i}: {e}")))?;
                realized[i] = dist.sample(&mut rng);
            }
        }
        profile = StrategyProfile::new(learners.iter().zip(&realized).map(|(l, &k)| l.strategies[k]).collect());

        for i in 0..n {
            let utilities = informed_utility_vector(i, &profile, topo, spec)?;
            for (c, u) in cum_strategy[i].iter_mut().zip(&utilities) {
                *c += u;
            }
            cum_realized[i] += utilities[realized[i]];
            max_step_utility = utilities.iter().copied().fold(max_step_utility, f64::max);
            learners[i].update(config.algorithm, config.beta, &utilities, realized[i])?;
        }

        let m = profile_metrics(&profile, topo, spec.capacity(), spec.alpha());
        if t >= window_start {
            sums.0 += m.nu;
            sums.1 += m.nu_valid;
            sums.2 += m.valid_links as f64;
            *joint_plays.entry(profile.clone()).or_insert(0) += 1;
        }
        if config.record_trajectory {
            steps.push(LearningStep { step: t, nu: m.nu, nu_valid: m.nu_valid, valid_links: m.valid_links });
        }
    }

    let window_len = (config.total_steps - window_start) as f64;
    Ok(LearningTrace {
        algorithm: config.algorithm,
        total_steps: config.total_steps,
        window_start,
        steps,
        learners,
        cumulative_strategy_utility: cum_strategy,
        cumulative_realized_utility: cum_realized,
        max_step_utility,
        joint_plays,
        window_means: WindowMeans { nu: sums.0 / window_len, nu_valid: sums.1 / window_len, valid_links: sums.2 / window_len },
        last_profile: profile,
    })
}

/// `(1/T) max_s Σ_t [u(s, s_-i^t) - u(s_i^t, s_-i^t)]`.
pub fn average_external_regret(link: usize, trace: &LearningTrace) -> f64 {
    let best = trace.cumulative_strategy_utility[link].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (best - trace.cumulative_realized_utility[link]) / trace.total_steps as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CceGap {
    /// Largest gain any player gets from committing to a fixed strategy
    /// instead of following the empirical joint distribution.
    pub gap: f64,
    pub profiles_evaluated: usize,
    pub samples: usize,
    /// Set when the joint support was truncated to the sample budget or the
    /// window held too few plays.
    pub low_confidence: bool,
}

/// Minimum plays in the window for a confident audit.
pub const MIN_AUDIT_SAMPLES: usize = 100;

/// Local utility recomputed from a full SINR evaluation of the substituted
/// profile, independent of the learners' incremental bookkeeping.
fn audit_utility(link: usize, s: Strategy, profile: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> f64 {
    let Strategy::On { channel, .. } = s else { return 0.0 };
    let x = sinr(link, &profile.with(link, s), topo);
    if spec.capacity().enforces_threshold() && x < spec.alpha() {
        return -1.0;
    }
    let w = topo.bandwidth(channel);
    let mut u = capacity_at(spec.capacity().kind(), x, w, topo.config().max_modulation, spec.alpha());
    if spec.power_correction() {
        u += w * (1.0 - s.power_mw(topo) / topo.config().p_max);
    }
    u
}

/// Coarse-correlated-equilibrium violation of the empirical joint play in
/// the averaging window. At most `sample_budget` distinct profiles (the most
/// frequent ones) are audited.
pub fn empirical_cce_gap(trace: &LearningTrace, topo: &Topology, spec: &GameSpec, sample_budget: usize) -> Result<CceGap> {
    require_local(spec)?;
    if sample_budget == 0 {
        return Err(Error::Config("sample budget must be positive".into()));
    }
    let mut support: Vec<(&StrategyProfile, usize)> = trace.joint_plays.iter().map(|(p, &c)| (p, c)).collect();
    let truncated = support.len() > sample_budget;
    if truncated {
        // Stable sort keeps the BTreeMap order among equal counts.
        support.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
        support.truncate(sample_budget);
    }
    let samples: usize = support.iter().map(|(_, c)| c).sum();
    let mut gap = f64::NEG_INFINITY;
    for i in 0..topo.link_count() {
        let strategies = enumerate_strategies(i, topo);
        let mut deviation = vec![0.0; strategies.len()];
        let mut follow = 0.0;
        for &(profile, count) in &support {
            let weight = count as f64 / samples as f64;
            follow += weight * audit_utility(i, profile[i], profile, topo, spec);
            for (d, &s) in deviation.iter_mut().zip(&strategies) {
                *d += weight * audit_utility(i, s, profile, topo, spec);
            }
        }
        let best = deviation.into_iter().fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(best - follow);
    }
    Ok(CceGap {
        gap,
        profiles_evaluated: support.len(),
        samples,
        low_confidence: truncated || samples < MIN_AUDIT_SAMPLES,
    })
}
