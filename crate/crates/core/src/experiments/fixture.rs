//! Three-link, two-channel topology on which the local binary game has no
//! pure Nash equilibrium: B drowns A, C drowns B and A drowns C whenever
//! they share a channel, while the reverse interference is negligible.

use serde::{Deserialize, Serialize};

use super::oracle::{compare_oracle, for_each_profile, ORACLE_BUDGET};
use crate::error::{Error, Result};
use crate::games::{is_pure_nash, GameSpec};
use crate::phy::{is_valid, CapacityMode, StrategyProfile};
use crate::scenario::{synthetic_topology, ScenarioConfig, Topology};

/// Direct gain of every link (100 m at path-loss exponent 4).
pub const FIG1_DIRECT_GAIN: f64 = 1e-8;
/// Cross gain of the dominating interferer (B on A, C on B, A on C).
pub const FIG1_STRONG_GAIN: f64 = 1e-7;
/// Cross gain in the reverse direction.
pub const FIG1_WEAK_GAIN: f64 = 1e-11;

/// `(victim, aggressor)` pairs: A is valid only while B is elsewhere, etc.
pub const FIG1_DOMINATION: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

fn fig1_config() -> ScenarioConfig {
    ScenarioConfig {
        channel_count: 2,
        avail_min: 2,
        avail_max: 2,
        power_levels: 4,
        channel_bandwidths: vec![1.0, 1.0],
        ..ScenarioConfig::default()
    }
}

/// The raw fixture topology, without the self-check.
pub fn fig1_topology() -> Topology {
    let mut gains = vec![vec![FIG1_WEAK_GAIN; 3]; 3];
    for (i, row) in gains.iter_mut().enumerate() {
        row[i] = FIG1_DIRECT_GAIN;
    }
    for &(victim, aggressor) in &FIG1_DOMINATION {
        gains[aggressor][victim] = FIG1_STRONG_GAIN;
    }
    synthetic_topology(&gains, vec![vec![0, 1]; 3], &fig1_config()).expect("fixture gains are valid")
}

/// Outcome of the exhaustive self-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Check {
    pub profiles_scanned: usize,
    /// Per domination pair: the victim is valid exactly when it is ON and
    /// its aggressor is not on the same channel.
    pub domination_holds: [bool; 3],
    /// No channel ever carries two valid links.
    pub one_valid_per_channel: bool,
    /// Pure equilibria of the local binary game (must be zero).
    pub local_pure_equilibria: usize,
    /// A network-utility maximizer is an equilibrium of the potential game.
    pub potential_argmax_is_equilibrium: bool,
}

impl Fig1Check {
    pub fn passed(&self) -> bool {
        self.domination_holds.iter().all(|&b| b)
            && self.one_valid_per_channel
            && self.local_pure_equilibria == 0
            && self.potential_argmax_is_equilibrium
    }
}

/// Scans every joint profile of `topo` (three links expected).
pub fn check_fig1(topo: &Topology) -> Result<Fig1Check> {
    if topo.link_count() != 3 {
        return Err(Error::Fixture(format!("expected 3 links, got {}", topo.link_count())));
    }
    let alpha = topo.config().sinr_threshold;
    let local = GameSpec::local(CapacityMode::binary(), alpha);
    let mut check = Fig1Check {
        profiles_scanned: 0,
        domination_holds: [true; 3],
        one_valid_per_channel: true,
        local_pure_equilibria: 0,
        potential_argmax_is_equilibrium: false,
    };
    for_each_profile(topo, ORACLE_BUDGET, |p: &StrategyProfile| {
        check.profiles_scanned += 1;
        let valid: Vec<bool> = (0..3).map(|i| p[i].is_on() && is_valid(i, p, topo, alpha)).collect();
        for (k, &(victim, aggressor)) in FIG1_DOMINATION.iter().enumerate() {
            if p[victim].is_on() {
                let shared = p[aggressor].is_on() && p[aggressor].channel() == p[victim].channel();
                if valid[victim] == shared {
                    check.domination_holds[k] = false;
                }
            }
        }
        for ch in 0..2 {
            if (0..3).filter(|&i| valid[i] && p[i].channel() == Some(ch)).count() > 1 {
                check.one_valid_per_channel = false;
            }
        }
        if is_pure_nash(p, topo, &local) {
            check.local_pure_equilibria += 1;
        }
    })?;
    let best = compare_oracle(topo, CapacityMode::binary(), alpha, ORACLE_BUDGET)?;
    check.potential_argmax_is_equilibrium = is_pure_nash(&best.argmax, topo, &GameSpec::potential(CapacityMode::binary(), alpha));
    Ok(check)
}

/// The fixture topology, verified by exhaustive scan.
pub fn build_fig1_fixture() -> Result<Topology> {
    let topo = fig1_topology();
    let check = check_fig1(&topo)?;
    if !check.passed() {
        return Err(Error::Fixture(format!("counterexample self-check failed: {check:?}")));
    }
    Ok(topo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_repeated_game, EngineConfig, ResponseRule, Scheduler};
    use crate::phy::{network_utility, Strategy};

    #[test]
    fn fixture_passes_self_check() {
        let topo = build_fig1_fixture().unwrap();
        let check = check_fig1(&topo).unwrap();
        assert_eq!(check.profiles_scanned, 9 * 9 * 9);
        assert!(check.passed());
    }

    #[test]
    fn all_on_one_channel_is_worthless() {
        let topo = fig1_topology();
        let on = Strategy::On { channel: 0, power: 3 };
        let p = StrategyProfile::new(vec![on; 3]);
        assert_eq!(network_utility(&p, &topo, CapacityMode::binary(), 10.0), 0.0);
    }

    #[test]
    fn perturbed_gains_fail_the_check() {
        let mut gains = vec![vec![FIG1_WEAK_GAIN; 3]; 3];
        for (i, row) in gains.iter_mut().enumerate() {
            row[i] = FIG1_DIRECT_GAIN;
        }
        let topo = synthetic_topology(&gains, vec![vec![0, 1]; 3], &fig1_config()).unwrap();
        assert!(!check_fig1(&topo).unwrap().passed());
    }

    #[test]
    fn local_best_response_cycles() {
        let topo = build_fig1_fixture().unwrap();
        let spec = GameSpec::local(CapacityMode::binary(), 10.0);
        for phase_offset in 0..3 {
            for seed in 0..10 {
                let cfg = EngineConfig {
                    scheduler: Scheduler::RoundRobin,
                    response_rule: ResponseRule::Best,
                    max_steps: 10_000,
                    rng_seed: seed,
                    phase_offset,
                    record_trajectory: false,
                    ..EngineConfig::default()
                };
                let trace = run_repeated_game(&topo, &spec, &cfg).unwrap();
                assert!(!trace.converged && trace.cycle_detected);
            }
        }
    }
}
