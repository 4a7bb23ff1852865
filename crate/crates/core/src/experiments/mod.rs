//! Seeded Monte-Carlo batches over strategy labels and link counts, with
//! aggregation, CSV/JSON output, the no-equilibrium fixture and the
//! exhaustive optimality oracle.

pub mod fixture;
pub mod label;
pub mod oracle;
pub mod output;
pub mod stats;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{run_repeated_game, EngineConfig, ResponseRule, Scheduler};
use crate::error::{Error, Result};
use crate::ga::{ga_optimize, GaConfig};
use crate::learning::{run_learning, LearningConfig, LearningSchedule};
use crate::phy::profile_metrics;
use crate::scenario::io::ScenarioFile;
use crate::scenario::{generate_topology, ScenarioConfig, Topology};

pub use fixture::{build_fig1_fixture, check_fig1, fig1_topology, Fig1Check};
pub use label::{GameCapacity, GridCapacity, LearnAlgorithm, StrategyLabel};
pub use oracle::{compare_oracle, for_each_profile, OracleResult, ORACLE_BUDGET};
pub use stats::{one_sided_bounds, summarize, OneSidedBounds, Summary};

/// Repeated-game settings shared by every game label of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSettings {
    pub scheduler: Scheduler,
    pub response_rule: ResponseRule,
    pub max_steps: usize,
    pub quiescence_window: Option<usize>,
}

impl Default for DynamicsSettings {
    fn default() -> Self {
        let e = EngineConfig::default();
        Self { scheduler: e.scheduler, response_rule: e.response_rule, max_steps: e.max_steps, quiescence_window: None }
    }
}

impl DynamicsSettings {
    pub fn engine(&self, rng_seed: u64, record_trajectory: bool) -> EngineConfig {
        EngineConfig {
            scheduler: self.scheduler,
            response_rule: self.response_rule,
            max_steps: self.max_steps,
            quiescence_window: self.quiescence_window,
            rng_seed,
            record_trajectory,
            phase_offset: 0,
        }
    }
}

/// Learner settings shared by every learning label of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSettings {
    pub beta: f64,
    pub total_steps: usize,
    pub averaging_window: f64,
    pub schedule: LearningSchedule,
}

impl Default for LearningSettings {
    fn default() -> Self {
        Self { beta: 0.1, total_steps: 20_000, averaging_window: 0.1, schedule: LearningSchedule::Synchronous }
    }
}

impl LearningSettings {
    pub fn config(&self, label: StrategyLabel, rng_seed: u64, record_trajectory: bool) -> Result<LearningConfig> {
        let StrategyLabel::Learn { algorithm, .. } = label else {
            return Err(Error::Config(format!("{label} is not a learning label")));
        };
        Ok(LearningConfig {
            algorithm: algorithm.into(),
            beta: self.beta,
            total_steps: self.total_steps,
            averaging_window: self.averaging_window,
            rng_seed,
            schedule: self.schedule,
            record_trajectory,
        })
    }
}

/// A sweep of labels × link counts × seeded instances.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// `link_count` is replaced by each sweep point.
    pub scenario: ScenarioConfig,
    pub labels: Vec<StrategyLabel>,
    pub link_counts: Vec<usize>,
    pub instances: usize,
    pub base_seed: u64,
    pub dynamics: DynamicsSettings,
    pub learning: LearningSettings,
    pub ga: GaConfig,
}

/// Scenario of the default plan: 40 nodes, 5 channels, density-preserving
/// area.
pub fn desk_scenario() -> ScenarioConfig {
    ScenarioConfig::desk(40, 20, 5)
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            scenario: desk_scenario(),
            labels: StrategyLabel::all(),
            link_counts: vec![10, 20, 30],
            instances: 50,
            base_seed: 1,
            dynamics: DynamicsSettings::default(),
            learning: LearningSettings::default(),
            ga: GaConfig::desk(),
        }
    }
}

/// On-disk (TOML) form of [`ExperimentPlan`]. Scenario keys not given take
/// the values of [`desk_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default = "StrategyLabel::all")]
    pub labels: Vec<StrategyLabel>,
    #[serde(default = "default_link_counts")]
    pub link_counts: Vec<usize>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub scenario: toml::Table,
    #[serde(default)]
    pub dynamics: DynamicsSettings,
    #[serde(default)]
    pub learning: LearningSettings,
    #[serde(default)]
    pub ga: GaConfig,
}

fn default_link_counts() -> Vec<usize> {
    ExperimentPlan::default().link_counts
}

fn default_instances() -> usize {
    ExperimentPlan::default().instances
}

fn default_base_seed() -> u64 {
    ExperimentPlan::default().base_seed
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::Config("instances must be at least 1".into()));
        }
        if self.labels.is_empty() || self.link_counts.is_empty() {
            return Err(Error::Config("plan needs at least one label and one link count".into()));
        }
        for &n in &self.link_counts {
            self.scenario.clone().with_links(n).validate()?;
        }
        let alpha = self.scenario.sinr_threshold;
        for l in &self.labels {
            l.game_spec(alpha)?;
            if let StrategyLabel::Learn { .. } = l {
                self.learning.config(*l, 0, false)?.validate()?;
            }
        }
        self.ga.validate()
    }

    pub fn from_file(file: PlanFile) -> Result<Self> {
        let mut table = toml::Table::try_from(ScenarioFile::from_config(&desk_scenario()))
            .map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in file.scenario {
            table.insert(k, v);
        }
        let scenario: ScenarioFile = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let plan = Self {
            scenario: scenario.to_config()?,
            labels: file.labels,
            link_counts: file.link_counts,
            instances: file.instances,
            base_seed: file.base_seed,
            dynamics: file.dynamics,
            learning: file.learning,
            ga: file.ga,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_file(&self) -> Result<PlanFile> {
        Ok(PlanFile {
            labels: self.labels.clone(),
            link_counts: self.link_counts.clone(),
            instances: self.instances,
            base_seed: self.base_seed,
            scenario: toml::Table::try_from(ScenarioFile::from_config(&self.scenario))
                .map_err(|e| Error::Config(e.to_string()))?,
            dynamics: self.dynamics.clone(),
            learning: self.learning.clone(),
            ga: self.ga.clone(),
        })
    }

    pub fn parse_toml(text: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_file()?).map_err(|e| Error::Config(e.to_string()))
    }

    /// Scenario for one sweep point.
    pub fn scenario_for(&self, link_count: usize) -> ScenarioConfig {
        self.scenario.clone().with_links(link_count)
    }
}

/// `base_seed` XOR the first 8 bytes of SHA-256 over `key`.
pub fn derive_seed(base_seed: u64, key: &str) -> u64 {
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    base_seed ^ u64::from_le_bytes(bytes)
}

/// Topology seed of instance `k` at a sweep point. Independent of the label,
/// so every label of a plan sees the same topologies.
pub fn topology_seed(base_seed: u64, link_count: usize, instance: usize) -> u64 {
    derive_seed(base_seed, &format!("topology/{link_count}/{instance}"))
}

/// Seed of the label's own randomness (initial profile, schedule, learner
/// draws, GA) for one instance.
pub fn run_seed(base_seed: u64, label: StrategyLabel, link_count: usize, instance: usize) -> u64 {
    derive_seed(base_seed, &format!("{label}/{link_count}/{instance}"))
}

/// Metrics of one finished run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub nu: f64,
    pub nu_valid: f64,
    pub valid_links: f64,
    pub iterations: f64,
    /// `None` for the learners and the GA, which have no equilibrium notion
    /// of convergence.
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub label: StrategyLabel,
    pub link_count: usize,
    pub instance: usize,
    pub topology_seed: u64,
    pub run_seed: u64,
    pub outcome: std::result::Result<InstanceOutcome, String>,
}

/// Runs one label on a prepared topology.
pub fn run_label(topo: &Topology, label: StrategyLabel, plan: &ExperimentPlan, seed: u64) -> Result<InstanceOutcome> {
    let alpha = plan.scenario.sinr_threshold;
    let mode = label.capacity_mode();
    match label {
        StrategyLabel::Game { .. } => {
            let spec = label.game_spec(alpha)?.expect("game labels have a spec");
            let trace = run_repeated_game(topo, &spec, &plan.dynamics.engine(seed, false))?;
            let m = profile_metrics(&trace.final_profile, topo, mode, alpha);
            Ok(InstanceOutcome {
                nu: m.nu,
                nu_valid: m.nu_valid,
                valid_links: m.valid_links as f64,
                iterations: trace.steps_used as f64,
                converged: Some(trace.converged),
            })
        }
        StrategyLabel::Learn { .. } => {
            let spec = label.game_spec(alpha)?.expect("learning labels have a spec");
            let trace = run_learning(topo, &spec, &plan.learning.config(label, seed, false)?)?;
            Ok(InstanceOutcome {
                nu: trace.window_means.nu,
                nu_valid: trace.window_means.nu_valid,
                valid_links: trace.window_means.valid_links,
                iterations: trace.total_steps as f64,
                converged: None,
            })
        }
        StrategyLabel::Ga { .. } => {
            let cfg = GaConfig { rng_seed: seed, ..plan.ga.clone() };
            let r = ga_optimize(topo, mode, alpha, &cfg)?;
            let m = profile_metrics(&r.best_profile, topo, mode, alpha);
            Ok(InstanceOutcome {
                nu: m.nu,
                nu_valid: m.nu_valid,
                valid_links: m.valid_links as f64,
                iterations: r.generations as f64,
                converged: None,
            })
        }
    }
}

/// One cell of the sweep: a label at a link count, for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Task {
    pub label: StrategyLabel,
    pub link_count: usize,
    pub instance: usize,
}

impl ExperimentPlan {
    /// Tasks in report order: label, then link count, then instance.
    pub fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::new();
        for &label in &self.labels {
            for &link_count in &self.link_counts {
                for instance in 0..self.instances {
                    out.push(Task { label, link_count, instance });
                }
            }
        }
        out
    }

    /// Runs one task from scratch; the result depends only on the plan and
    /// the task.
    pub fn run_task(&self, task: Task) -> InstanceRecord {
        let topology_seed = topology_seed(self.base_seed, task.link_count, task.instance);
        let run_seed = run_seed(self.base_seed, task.label, task.link_count, task.instance);
        let outcome = generate_topology(&self.scenario_for(task.link_count), topology_seed)
            .and_then(|topo| run_label(&topo, task.label, self, run_seed))
            .map_err(|e| e.to_string());
        InstanceRecord {
            label: task.label,
            link_count: task.link_count,
            instance: task.instance,
            topology_seed,
            run_seed,
            outcome,
        }
    }
}

/// Mean/σ/CI of each metric over the successful instances of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub label: StrategyLabel,
    pub link_count: usize,
    pub runs: usize,
    pub failures: usize,
    pub nu: Summary,
    pub nu_valid: Summary,
    pub valid_links: Summary,
    pub iterations: Summary,
    /// Fraction of runs that reached a verified equilibrium (game labels).
    pub convergence_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub records: Vec<InstanceRecord>,
    pub aggregates: Vec<AggregateRow>,
    /// One line per failed instance.
    pub warnings: Vec<String>,
}

/// Groups records by (label, link count) in first-seen order.
pub fn aggregate(records: &[InstanceRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(StrategyLabel, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.label, r.link_count)) {
            keys.push((r.label, r.link_count));
        }
    }
    keys.into_iter()
        .map(|(label, link_count)| {
            let cell: Vec<&InstanceRecord> = records.iter().filter(|r| r.label == label && r.link_count == link_count).collect();
            let ok: Vec<&InstanceOutcome> = cell.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let metric = |f: fn(&InstanceOutcome) -> f64| summarize(&ok.iter().map(|o| f(o)).collect::<Vec<_>>());
            let flags: Vec<bool> = ok.iter().filter_map(|o| o.converged).collect();
            AggregateRow {
                label,
                link_count,
                runs: ok.len(),
                failures: cell.len() - ok.len(),
                nu: metric(|o| o.nu),
                nu_valid: metric(|o| o.nu_valid),
                valid_links: metric(|o| o.valid_links),
                iterations: metric(|o| o.iterations),
                convergence_rate: (!flags.is_empty())
                    .then(|| flags.iter().filter(|&&c| c).count() as f64 / flags.len() as f64),
            }
        })
        .collect()
}

/// Runs every task in parallel; records come back in task order.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutput> {
    plan.validate()?;
    let records: Vec<InstanceRecord> = plan.tasks().into_par_iter().map(|t| plan.run_task(t)).collect();
    let warnings = records
        .iter()
        .filter_map(|r| {
            r.outcome.as_ref().err().map(|e| {
                format!("{} links={} instance={} excluded: {e}", r.label, r.link_count, r.instance)
            })
        })
        .collect();
    let aggregates = aggregate(&records);
    Ok(PlanOutput { records, aggregates, warnings })
}
