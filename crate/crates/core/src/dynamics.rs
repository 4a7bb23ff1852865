//! Myopic repeated-game engine: who plays each step, how they respond, and
//! when the run stops (verified equilibrium, detected cycle or step budget).

use std::collections::{HashSet, VecDeque};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{best_response, better_response, is_pure_nash, random_profile, GameSpec};
use crate::phy::{profile_metrics, StrategyProfile};
use crate::scenario::Topology;

/// Distinct (profile, phase) states remembered for cycle detection.
pub const CYCLE_MEMORY: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    /// One player per step, in index order.
    RoundRobin,
    /// Every player independently acts with probability 1/N.
    Asynchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseRule {
    Best,
    Better,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub scheduler: Scheduler,
    pub response_rule: ResponseRule,
    pub max_steps: usize,
    /// Quiet steps before an equilibrium check; `None` means `3 N`.
    pub quiescence_window: Option<usize>,
    pub rng_seed: u64,
    pub record_trajectory: bool,
    /// Round-robin starts with player `phase_offset mod N`.
    pub phase_offset: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            scheduler: Scheduler::Asynchronous,
            response_rule: ResponseRule::Best,
            max_steps: 20_000,
            quiescence_window: None,
            rng_seed: 0,
            record_trajectory: true,
            phase_offset: 0,
        }
    }
}

impl EngineConfig {
    fn window(&self, players: usize) -> Result<usize> {
        let window = self.quiescence_window.unwrap_or(3 * players);
        if window < players {
            return Err(Error::Config(format!("quiescence window {window} is shorter than N = {players}")));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub acting: Vec<usize>,
    pub changed: bool,
    pub nu: f64,
    pub nu_valid: f64,
    pub valid_links: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub converged: bool,
    pub cycle_detected: bool,
    pub steps_used: usize,
    /// Individual response evaluations (one per acting player per step).
    pub player_actions: usize,
    pub strategy_changes: usize,
    pub initial_profile: StrategyProfile,
    pub final_profile: StrategyProfile,
    /// Per-step metrics; empty unless the trajectory was recorded.
    pub steps: Vec<StepRecord>,
}

impl RunTrace {
    pub fn nu_history(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.nu).collect()
    }

    pub fn nu_valid_history(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.nu_valid).collect()
    }

    pub fn valid_links_history(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.valid_links).collect()
    }

    /// CSV: `step,acting,nu,nu_valid,valid_links,changed`; acting players are
    /// `;`-separated.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "acting", "nu", "nu_valid", "valid_links", "changed"])?;
        for s in &self.steps {
            let acting = s.acting.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";");
            w.write_record([
                s.step.to_string(),
                acting,
                s.nu.to_string(),
                s.nu_valid.to_string(),
                s.valid_links.to_string(),
                (s.changed as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn schedule_round_robin(step: usize, players: usize) -> usize {
    step % players
}

pub fn schedule_asynchronous<R: Rng + ?Sized>(players: usize, rng: &mut R) -> Vec<usize> {
    let p = 1.0 / players as f64;
    (0..players).filter(|_| rng.gen_bool(p)).collect()
}

/// After `window` quiet steps, confirms (or refutes) the equilibrium.
pub fn detect_convergence(
    quiet_steps: usize,
    window: usize,
    profile: &StrategyProfile,
    topo: &Topology,
    spec: &GameSpec,
) -> bool {
    quiet_steps >= window && is_pure_nash(profile, topo, spec)
}

/// Bounded memory of visited (profile, next-player) states.
struct CycleDetector {
    seen: HashSet<(StrategyProfile, usize)>,
    order: VecDeque<(StrategyProfile, usize)>,
}

impl CycleDetector {
    fn new() -> Self {
        Self { seen: HashSet::new(), order: VecDeque::new() }
    }

    /// Returns true if the state was already visited.
    fn visit(&mut self, profile: &StrategyProfile, phase: usize) -> bool {
        let key = (profile.clone(), phase);
        if self.seen.contains(&key) {
            return true;
        }
        if self.order.len() == CYCLE_MEMORY {
            if let Some(old) = self.order.pop_front() {
                self.seen.remove(&old);
            }
        }
        self.seen.insert(key.clone());
        self.order.push_back(key);
        false
    }
}

/// Runs the repeated game from a random initial profile drawn from the
/// engine seed.
pub fn run_repeated_game(topo: &Topology, spec: &GameSpec, config: &EngineConfig) -> Result<RunTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let initial = random_profile(topo, &mut rng);
    run_from(topo, spec, config, initial, &mut rng)
}

/// Runs the repeated game from an explicit starting profile.
pub fn run_repeated_game_from(
    topo: &Topology,
    spec: &GameSpec,
    config: &EngineConfig,
    initial: StrategyProfile,
) -> Result<RunTrace> {
    initial.validate(topo)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    run_from(topo, spec, config, initial, &mut rng)
}

fn run_from(
    topo: &Topology,
    spec: &GameSpec,
    config: &EngineConfig,
    initial: StrategyProfile,
    rng: &mut ChaCha8Rng,
) -> Result<RunTrace> {
    let n = topo.link_count();
    let window = config.window(n)?;
    // Only deterministic dynamics repeat forever once a state recurs.
    let track_cycles = config.scheduler == Scheduler::RoundRobin && config.response_rule == ResponseRule::Best;
    let mut cycles = CycleDetector::new();

    let mut profile = initial.clone();
    let mut trace = RunTrace {
        converged: false,
        cycle_detected: false,
        steps_used: 0,
        player_actions: 0,
        strategy_changes: 0,
        initial_profile: initial,
        final_profile: profile.clone(),
        steps: Vec::new(),
    };
    let mut quiet = 0usize;

    for step in 0..config.max_steps {
        let acting = match config.scheduler {
            Scheduler::RoundRobin => vec![schedule_round_robin(step + config.phase_offset, n)],
            Scheduler::Asynchronous => schedule_asynchronous(n, rng),
        };
        // All movers respond to the same pre-step snapshot.
        let responses: Vec<_> = acting
            .iter()
            .map(|&i| match config.response_rule {
                ResponseRule::Best => best_response(i, &profile, topo, spec),
                ResponseRule::Better => better_response(i, &profile, topo, spec, rng),
            })
            .collect();
        let mut changed = false;
        for (&i, s) in acting.iter().zip(responses) {
            if profile[i] != s {
                profile.set(i, s);
                changed = true;
                trace.strategy_changes += 1;
            }
        }
        trace.player_actions += acting.len();
        trace.steps_used = step + 1;

        if config.record_trajectory {
            let m = profile_metrics(&profile, topo, spec.capacity(), spec.alpha());
            trace.steps.push(StepRecord {
                step,
                acting,
                changed,
                nu: m.nu,
                nu_valid: m.nu_valid,
                valid_links: m.valid_links,
            });
        }

        if changed {
            quiet = 0;
            if track_cycles && cycles.visit(&profile, (step + 1 + config.phase_offset) % n) {
                trace.cycle_detected = true;
                break;
            }
        } else {
            quiet += 1;
            if quiet >= window {
                if detect_convergence(quiet, window, &profile, topo, spec) {
                    trace.converged = true;
                    break;
                }
                quiet = 0;
            }
        }
    }
    trace.final_profile = profile;
    Ok(trace)
}
