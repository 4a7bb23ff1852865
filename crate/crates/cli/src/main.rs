use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crn_core::dynamics::{run_repeated_game, ResponseRule, Scheduler};
use crn_core::experiments::output::{columns_help, write_plan_outputs, write_profile_csv, Manifest};
use crn_core::experiments::{
    build_fig1_fixture, check_fig1, compare_oracle, derive_seed, fig1_topology, run_plan, ExperimentPlan, StrategyLabel,
    ORACLE_BUDGET,
};
use crn_core::ga::{ga_optimize, GaConfig};
use crn_core::games::GameSpec;
use crn_core::learning::{average_external_regret, empirical_cce_gap, run_learning};
use crn_core::phy::{profile_metrics, CapacityMode};
use crn_core::scenario::io::{topology_from_json, topology_to_json};
use crn_core::scenario::{generate_topology, Topology};

/// Joint channel and power allocation simulator for cognitive radio networks.
#[derive(Parser)]
#[command(name = "crn", version, after_long_help = file_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn file_help() -> String {
    format!(
        "Every command writes manifest.json (config echo, seed, file list with columns) into --out.\n\
         Config files are TOML plans: top-level labels, link_counts, instances, base_seed and optional\n\
         [scenario], [dynamics], [learning] and [ga] tables.\n\nCSV columns:\n{}",
        columns_help()
    )
}

#[derive(Args)]
struct Common {
    /// TOML plan/scenario file; workstation defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for topology generation and the run's own randomness (default 0);
    /// for `batch`, overrides the plan's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Args)]
struct Instance {
    #[command(flatten)]
    common: Common,
    /// Number of links of the generated topology.
    #[arg(long)]
    links: Option<usize>,
    /// Use this topology dump (JSON, as written by `gen`) instead of generating one.
    #[arg(long)]
    topology: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology and write topology.json.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        links: Option<usize>,
    },
    /// Play one repeated game; writes trajectory.csv and profile.csv.
    Play {
        #[command(flatten)]
        instance: Instance,
        /// Game label, e.g. dc-a-local or bc-a-potential.
        #[arg(long, default_value = "dc-a-potential")]
        label: String,
        /// Step budget.
        #[arg(long)]
        steps: Option<usize>,
        /// Round-robin start player (round-robin scheduler only).
        #[arg(long, default_value_t = 0)]
        phase_offset: usize,
    },
    /// Run one learning process; writes learning_trajectory.csv, mixed_strategies.csv, regret.csv.
    Learn {
        #[command(flatten)]
        instance: Instance,
        /// Learning label, e.g. dcp-a-fs or bcp-a-hm.
        #[arg(long, default_value = "dcp-a-fs")]
        label: String,
        /// Learning steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the genetic algorithm; writes ga_progress.csv and profile.csv.
    Ga {
        #[command(flatten)]
        instance: Instance,
        /// ga-dc or ga-bc.
        #[arg(long, default_value = "ga-dc")]
        label: String,
        /// Generation cap.
        #[arg(long)]
        steps: Option<usize>,
        /// Use the full-scale GA settings (population 1000, 20000 generations).
        #[arg(long)]
        full_scale: bool,
    },
    /// Run a plan; writes instances.csv, one CSV per metric family and the manifest.
    Batch {
        #[command(flatten)]
        common: Common,
        /// Restrict the plan to one label.
        #[arg(long)]
        label: Option<String>,
        /// Restrict the sweep to one link count.
        #[arg(long)]
        links: Option<usize>,
        /// Caps game steps, learning steps and GA generations.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Emit a built-in fixture.
    Fixture {
        #[command(subcommand)]
        which: FixtureKind,
    },
    /// Exhaustive network-utility optimum of a small instance; writes profile.csv.
    Oracle {
        #[command(flatten)]
        instance: Instance,
        /// Label whose capacity mode is optimized.
        #[arg(long, default_value = "ga-dc")]
        label: String,
    },
}

#[derive(Subcommand)]
enum FixtureKind {
    /// Three links on two channels with no pure equilibrium of the local binary game.
    Fig1 {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Steps of the round-robin demonstration run.
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
    },
}

fn load_plan(path: Option<&Path>) -> Result<ExperimentPlan> {
    match path {
        Some(p) => ExperimentPlan::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ExperimentPlan::default()),
    }
}

fn parse_label(text: &str) -> Result<StrategyLabel> {
    Ok(text.parse()?)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn topology_for(plan: &ExperimentPlan, instance: &Instance) -> Result<Topology> {
    if let Some(path) = &instance.topology {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(topology_from_json(&text)?);
    }
    let links = instance.links.unwrap_or(plan.scenario.link_count);
    Ok(generate_topology(&plan.scenario_for(links), instance.common.seed())?)
}

fn plan_echo(plan: &ExperimentPlan) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(plan.to_file()?)?)
}

fn write_topology(dir: &Path, topo: &Topology) -> Result<()> {
    let mut text = topology_to_json(topo)?;
    text.push('\n');
    fs::write(dir.join("topology.json"), text)?;
    Ok(())
}

fn write_profile(dir: &Path, profile: &crn_core::StrategyProfile, topo: &Topology, alpha: f64) -> Result<()> {
    write_profile_csv(fs::File::create(dir.join("profile.csv"))?, profile, topo, alpha)?;
    Ok(())
}

fn cmd_gen(common: &Common, links: Option<usize>) -> Result<()> {
    let plan = load_plan(common.config.as_deref())?;
    let links = links.unwrap_or(plan.scenario.link_count);
    let topo = generate_topology(&plan.scenario_for(links), common.seed())?;
    prepare_out(&common.out)?;
    write_topology(&common.out, &topo)?;
    let mut m = Manifest::new("gen", Some(common.seed()), plan_echo(&plan)?);
    m.add_file("topology.json");
    m.summary = json!({ "links": topo.link_count() });
    m.write(&common.out)?;
    Ok(())
}

fn cmd_play(instance: &Instance, label: &str, steps: Option<usize>, phase_offset: usize) -> Result<()> {
    let common = &instance.common;
    let plan = load_plan(common.config.as_deref())?;
    let label = parse_label(label)?;
    let topo = topology_for(&plan, instance)?;
    let alpha = topo.config().sinr_threshold;
    let Some(spec) = label.game_spec(alpha)?.filter(|_| matches!(label, StrategyLabel::Game { .. })) else {
        bail!("`play` needs a game label (e.g. dc-a-local), got {label}");
    };
    let mut engine = plan.dynamics.engine(derive_seed(common.seed(), &format!("run/{label}")), true);
    engine.phase_offset = phase_offset;
    if let Some(s) = steps {
        engine.max_steps = s;
    }
    let trace = run_repeated_game(&topo, &spec, &engine)?;
    prepare_out(&common.out)?;
    trace.write_csv(fs::File::create(common.out.join("trajectory.csv"))?)?;
    write_profile(&common.out, &trace.final_profile, &topo, alpha)?;
    let m_final = profile_metrics(&trace.final_profile, &topo, label.capacity_mode(), alpha);
    let mut m = Manifest::new("play", Some(common.seed()), plan_echo(&plan)?);
    m.add_file("trajectory.csv");
    m.add_file("profile.csv");
    m.summary = json!({
        "label": label.to_string(),
        "links": topo.link_count(),
        "scheduler": engine.scheduler,
        "response_rule": engine.response_rule,
        "max_steps": engine.max_steps,
        "converged": trace.converged,
        "cycle_detected": trace.cycle_detected,
        "steps_used": trace.steps_used,
        "strategy_changes": trace.strategy_changes,
        "nu": m_final.nu,
        "nu_valid": m_final.nu_valid,
        "valid_links": m_final.valid_links,
    });
    m.write(&common.out)?;
    println!(
        "{label}: converged={} cycle={} steps={} nu={} valid_links={}",
        trace.converged, trace.cycle_detected, trace.steps_used, m_final.nu, m_final.valid_links
    );
    Ok(())
}

/// Joint profiles audited for the CCE gap.
const CCE_AUDIT_BUDGET: usize = 2000;

fn cmd_learn(instance: &Instance, label: &str, steps: Option<usize>) -> Result<()> {
    let common = &instance.common;
    let mut plan = load_plan(common.config.as_deref())?;
    let label = parse_label(label)?;
    if !matches!(label, StrategyLabel::Learn { .. }) {
        bail!("`learn` needs a learning label (e.g. dcp-a-fs), got {label}");
    }
    if let Some(s) = steps {
        plan.learning.total_steps = s;
    }
    let topo = topology_for(&plan, instance)?;
    let alpha = topo.config().sinr_threshold;
    let spec = label.game_spec(alpha)?.expect("learning labels have a spec");
    let cfg = plan.learning.config(label, derive_seed(common.seed(), &format!("run/{label}")), true)?;
    let trace = run_learning(&topo, &spec, &cfg)?;
    prepare_out(&common.out)?;
    trace.write_steps_csv(fs::File::create(common.out.join("learning_trajectory.csv"))?)?;
    trace.write_mixed_strategies_csv(fs::File::create(common.out.join("mixed_strategies.csv"))?)?;
    trace.write_regret_csv(fs::File::create(common.out.join("regret.csv"))?)?;
    let max_regret = (0..topo.link_count()).map(|i| average_external_regret(i, &trace)).fold(f64::NEG_INFINITY, f64::max);
    let gap = empirical_cce_gap(&trace, &topo, &spec, CCE_AUDIT_BUDGET)?;
    let mut m = Manifest::new("learn", Some(common.seed()), plan_echo(&plan)?);
    for f in ["learning_trajectory.csv", "mixed_strategies.csv", "regret.csv"] {
        m.add_file(f);
    }
    m.summary = json!({
        "label": label.to_string(),
        "links": topo.link_count(),
        "total_steps": trace.total_steps,
        "window_start": trace.window_start,
        "window_means": trace.window_means,
        "max_average_external_regret": max_regret,
        "max_step_utility": trace.max_step_utility,
        "cce_gap": gap,
    });
    m.write(&common.out)?;
    println!(
        "{label}: window nu={} valid_links={} max regret={max_regret} (max utility {}) cce gap={}{}",
        trace.window_means.nu,
        trace.window_means.valid_links,
        trace.max_step_utility,
        gap.gap,
        if gap.low_confidence { " (low confidence)" } else { "" }
    );
    Ok(())
}

fn cmd_ga(instance: &Instance, label: &str, steps: Option<usize>, full_scale: bool) -> Result<()> {
    let common = &instance.common;
    let plan = load_plan(common.config.as_deref())?;
    let label = parse_label(label)?;
    if !matches!(label, StrategyLabel::Ga { .. }) {
        bail!("`ga` needs ga-dc or ga-bc, got {label}");
    }
    let topo = topology_for(&plan, instance)?;
    let alpha = topo.config().sinr_threshold;
    let base = if full_scale { GaConfig::full_scale() } else { plan.ga.clone() };
    let mut cfg = GaConfig { rng_seed: derive_seed(common.seed(), &format!("run/{label}")), ..base };
    if let Some(s) = steps {
        cfg.max_generations = s;
    }
    let r = ga_optimize(&topo, label.capacity_mode(), alpha, &cfg)?;
    prepare_out(&common.out)?;
    r.write_log_csv(fs::File::create(common.out.join("ga_progress.csv"))?)?;
    write_profile(&common.out, &r.best_profile, &topo, alpha)?;
    let metrics = profile_metrics(&r.best_profile, &topo, label.capacity_mode(), alpha);
    let mut m = Manifest::new("ga", Some(common.seed()), json!({ "plan": plan_echo(&plan)?, "ga": cfg }));
    m.add_file("ga_progress.csv");
    m.add_file("profile.csv");
    m.summary = json!({
        "label": label.to_string(),
        "links": topo.link_count(),
        "best_nu": r.best_nu,
        "valid_links": metrics.valid_links,
        "generations": r.generations,
        "evaluations": r.evaluations,
    });
    m.write(&common.out)?;
    println!("{label}: best nu={} valid_links={} generations={}", r.best_nu, metrics.valid_links, r.generations);
    Ok(())
}

fn cmd_batch(common: &Common, label: Option<&str>, links: Option<usize>, steps: Option<usize>) -> Result<()> {
    let mut plan = load_plan(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        plan.base_seed = seed;
    }
    if let Some(l) = label {
        plan.labels = vec![parse_label(l)?];
    }
    if let Some(n) = links {
        plan.link_counts = vec![n];
    }
    if let Some(s) = steps {
        plan.dynamics.max_steps = s;
        plan.learning.total_steps = s;
        plan.ga.max_generations = s;
    }
    let output = run_plan(&plan)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    write_plan_outputs(&common.out, &plan, &output)?;
    for row in &output.aggregates {
        println!(
            "{:<18} N={:<4} runs={:<4} nu={:.3}±{:.3} valid={:.2} conv={}",
            row.label.to_string(),
            row.link_count,
            row.runs,
            row.nu.mean,
            row.nu.std,
            row.valid_links.mean,
            row.convergence_rate.map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}

fn cmd_fig1(out: &Path, steps: usize) -> Result<()> {
    prepare_out(out)?;
    let check = check_fig1(&fig1_topology())?;
    let mut text = serde_json::to_string_pretty(&check)?;
    text.push('\n');
    fs::write(out.join("fig1_check.json"), text)?;
    let topo = build_fig1_fixture()?;
    write_topology(out, &topo)?;
    let alpha = topo.config().sinr_threshold;
    let spec = GameSpec::local(CapacityMode::binary(), alpha);
    let mut runs = Vec::new();
    for phase_offset in 0..topo.link_count() {
        let engine = crn_core::EngineConfig {
            scheduler: Scheduler::RoundRobin,
            response_rule: ResponseRule::Best,
            max_steps: steps,
            rng_seed: 0,
            record_trajectory: false,
            phase_offset,
            ..Default::default()
        };
        let trace = run_repeated_game(&topo, &spec, &engine)?;
        runs.push(json!({
            "phase_offset": phase_offset,
            "converged": trace.converged,
            "cycle_detected": trace.cycle_detected,
            "steps_used": trace.steps_used,
        }));
    }
    let mut m = Manifest::new("fixture fig1", None, json!({ "steps": steps }));
    m.add_file("topology.json");
    m.add_file("fig1_check.json");
    m.summary = json!({ "check_passed": check.passed(), "round_robin_best_response": runs });
    m.write(out)?;
    println!("fig1 fixture: self-check passed, {} profiles scanned, no pure equilibrium", check.profiles_scanned);
    Ok(())
}

fn cmd_oracle(instance: &Instance, label: &str) -> Result<()> {
    let common = &instance.common;
    let plan = load_plan(common.config.as_deref())?;
    let label = parse_label(label)?;
    let topo = topology_for(&plan, instance)?;
    let alpha = topo.config().sinr_threshold;
    let r = compare_oracle(&topo, label.capacity_mode(), alpha, ORACLE_BUDGET)?;
    prepare_out(&common.out)?;
    write_profile(&common.out, &r.argmax, &topo, alpha)?;
    let mut m = Manifest::new("oracle", Some(common.seed()), plan_echo(&plan)?);
    m.add_file("profile.csv");
    m.summary = json!({
        "label": label.to_string(),
        "capacity_mode": format!("{:?}", label.capacity_mode().kind()),
        "links": topo.link_count(),
        "optimum_nu": r.optimum_nu,
        "profiles": r.profiles,
    });
    m.write(&common.out)?;
    println!("optimum nu={} over {} profiles", r.optimum_nu, r.profiles);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen { common, links } => cmd_gen(common, *links),
        Command::Play { instance, label, steps, phase_offset } => cmd_play(instance, label, *steps, *phase_offset),
        Command::Learn { instance, label, steps } => cmd_learn(instance, label, *steps),
        Command::Ga { instance, label, steps, full_scale } => cmd_ga(instance, label, *steps, *full_scale),
        Command::Batch { common, label, links, steps } => cmd_batch(common, label.as_deref(), *links, *steps),
        Command::Fixture { which: FixtureKind::Fig1 { out, steps } } => cmd_fig1(out, *steps),
        Command::Oracle { instance, label } => cmd_oracle(instance, label),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
