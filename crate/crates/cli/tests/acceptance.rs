//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure. Runs as a plain binary (`harness = false`); pass a substring to
//! run only the criteria whose name contains it.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crn_core::dynamics::{run_repeated_game, EngineConfig, ResponseRule, Scheduler};
use crn_core::experiments::{
    build_fig1_fixture, check_fig1, compare_oracle, run_plan, ExperimentPlan, InstanceRecord, LearningSettings,
    StrategyLabel, ORACLE_BUDGET,
};
use crn_core::ga::{ga_optimize, GaConfig};
use crn_core::games::{best_response, enumerate_strategies, is_pure_nash, random_profile, random_strategy, GameSpec, InfoModel};
use crn_core::learning::{
    average_external_regret, empirical_cce_gap, fs_probabilities, fs_update, hm_update, run_learning, Algorithm,
    LearningConfig,
};
use crn_core::phy::{sinr, CapacityKind, CapacityMode, Strategy, StrategyProfile};
use crn_core::scenario::{channel_gain, generate_topology, synthetic_topology, ScenarioConfig, Topology};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn label(text: &str) -> StrategyLabel {
    text.parse().expect("known label")
}

fn desk_topology(nodes: usize, links: usize, channels: usize, seed: u64) -> Topology {
    generate_topology(&ScenarioConfig::desk(nodes, links, channels), seed).expect("desk topology")
}

fn tiny_scenario() -> ScenarioConfig {
    ScenarioConfig { power_levels: 4, ..ScenarioConfig::desk(20, 4, 2) }
}

// ---------------------------------------------------------------------------
// Independent reference model: everything recomputed from raw gains.

fn ref_sinr(link: usize, p: &StrategyProfile, topo: &Topology) -> f64 {
    let Strategy::On { channel, power } = p[link] else { return 0.0 };
    let mut interference = 0.0;
    for j in 0..p.len() {
        if let Strategy::On { channel: c, power: q } = p[j] {
            if j != link && c == channel {
                interference += topo.levels()[q] * topo.gain(j, link);
            }
        }
    }
    topo.levels()[power] * topo.gain(link, link) / (topo.noise() + interference)
}

fn ref_capacity(kind: CapacityKind, x: f64, w: f64, m_max: u32, alpha: f64) -> f64 {
    match kind {
        CapacityKind::Continuous => w * (1.0 + x).log2(),
        CapacityKind::Discrete => {
            let levels = ((1.0 + x).sqrt().floor() as u64).min(m_max as u64);
            let mut m = 1u64;
            while m * 2 <= levels {
                m *= 2;
            }
            if m < 2 {
                0.0
            } else {
                2.0 * w * (m as f64).log2()
            }
        }
        CapacityKind::Binary => f64::from(u8::from(x >= alpha)),
    }
}

/// `λ C` of one link.
fn ref_gated(link: usize, p: &StrategyProfile, topo: &Topology, mode: CapacityMode, alpha: f64) -> f64 {
    let Strategy::On { channel, .. } = p[link] else { return 0.0 };
    let x = ref_sinr(link, p, topo);
    if mode.enforces_threshold() && x < alpha {
        return 0.0;
    }
    ref_capacity(mode.kind(), x, topo.bandwidth(channel), topo.config().max_modulation, alpha)
}

fn ref_nu(p: &StrategyProfile, topo: &Topology, mode: CapacityMode, alpha: f64) -> f64 {
    (0..p.len()).map(|i| ref_gated(i, p, topo, mode, alpha)).sum()
}

/// `(utility, own gated capacity)` of `link` playing `s`.
fn ref_utility(link: usize, s: Strategy, p: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> (f64, f64) {
    let mode = spec.capacity();
    let alpha = spec.alpha();
    let q = p.with(link, s);
    let own = ref_gated(link, &q, topo, mode, alpha);
    match spec.info() {
        InfoModel::Local => {
            let Strategy::On { channel, power } = s else { return (0.0, 0.0) };
            let x = ref_sinr(link, &q, topo);
            if mode.enforces_threshold() && x < alpha {
                return (-1.0, own);
            }
            let w = topo.bandwidth(channel);
            let mut u = ref_capacity(mode.kind(), x, w, topo.config().max_modulation, alpha);
            if spec.power_correction() {
                u += w * (1.0 - topo.levels()[power] / topo.config().p_max);
            }
            (u, own)
        }
        InfoModel::PotentialIdentical => (ref_nu(&q, topo, mode, alpha), own),
        InfoModel::PotentialMarginal => {
            let silent = p.with(link, Strategy::Off);
            let loss: f64 = (0..p.len())
                .filter(|&j| j != link && s.is_on() && p[j].channel() == s.channel())
                .map(|j| ref_gated(j, &silent, topo, mode, alpha) - ref_gated(j, &q, topo, mode, alpha))
                .sum();
            (own - loss, own)
        }
    }
}

/// Exhaustive argmax with the documented tie keys: keep the current
/// strategy if it is optimal, then (potential games) the highest own
/// capacity, then enumeration order.
fn ref_best_response(link: usize, p: &StrategyProfile, topo: &Topology, spec: &GameSpec) -> Strategy {
    let options = enumerate_strategies(link, topo);
    let scored: Vec<(Strategy, f64, f64)> = options
        .iter()
        .map(|&s| {
            let (u, own) = ref_utility(link, s, p, topo, spec);
            (s, u, own)
        })
        .collect();
    let top = scored.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let current = ref_utility(link, p[link], p, topo, spec).0;
    if current >= top {
        return p[link];
    }
    let tied: Vec<&(Strategy, f64, f64)> = scored.iter().filter(|t| t.1 == top).collect();
    if spec.info() == InfoModel::Local {
        return tied[0].0;
    }
    let best_own = tied.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
    tied.iter().find(|t| t.2 == best_own).expect("non-empty").0
}

// ---------------------------------------------------------------------------

fn c1_calibration() -> Outcome {
    let config = ScenarioConfig {
        channel_count: 1,
        avail_min: 1,
        avail_max: 1,
        channel_bandwidths: vec![1.0],
        ..ScenarioConfig::default()
    };
    let g = channel_gain(250.0, 4.0).map_err(|e| e.to_string())?;
    let topo = synthetic_topology(&[vec![g]], vec![vec![0]], &config).map_err(|e| e.to_string())?;
    let top = topo.levels().len() - 1;
    let p = StrategyProfile::new(vec![Strategy::On { channel: 0, power: top }]);
    let db = 10.0 * sinr(0, &p, &topo).log10();
    // 20 dBm - 40 log10(250 m) + 85.9 dBm.
    let expected = 20.0 - 40.0 * 250f64.log10() + 85.9;
    let detail = format!("SINR at 250 m = {db:.4} dB (closed form {expected:.4} dB)");
    if (db - 10.0).abs() <= 0.1 && (db - expected).abs() < 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c2_potential_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut deviations = 0usize;
    for t in 0..20u64 {
        let topo = desk_topology(40, 20, 5, 1000 + t);
        for info in [InfoModel::PotentialIdentical, InfoModel::PotentialMarginal] {
            for mode in [CapacityMode::discrete(), CapacityMode::binary()] {
                let spec = GameSpec::new(mode, info, false, 10.0).map_err(|e| e.to_string())?;
                for _ in 0..150 {
                    let p = random_profile(&topo, &mut rng);
                    let i = rng.gen_range(0..topo.link_count());
                    let s = random_strategy(i, &topo, &mut rng);
                    let du = crn_core::games::utility(i, s, &p, &topo, &spec).value
                        - crn_core::games::utility(i, p[i], &p, &topo, &spec).value;
                    let before = ref_nu(&p, &topo, mode, 10.0);
                    let after = ref_nu(&p.with(i, s), &topo, mode, 10.0);
                    let scale = 1f64.max(before.abs()).max(after.abs());
                    worst = worst.max((du - (after - before)).abs() / scale);
                    deviations += 1;
                }
            }
        }
    }
    let detail = format!("{deviations} deviations on 20 topologies, max relative |du - dNU| = {worst:.3e}");
    if deviations >= 10_000 && worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c3_potential_convergence() -> Outcome {
    let labels = ["cc-noa-potential", "cc-a-potential", "dc-a-potential", "bc-a-potential"];
    let mut runs = 0;
    let mut good = 0;
    let mut worst_drop: f64 = 0.0;
    let mut max_steps = 0;
    for (k, text) in labels.iter().enumerate() {
        let spec = label(text).game_spec(10.0).map_err(|e| e.to_string())?.expect("game label");
        for r in 0..50u64 {
            let topo = desk_topology(40, 20, 5, 3000 + r);
            let cfg = EngineConfig {
                scheduler: Scheduler::RoundRobin,
                response_rule: ResponseRule::Best,
                max_steps: 20_000,
                rng_seed: 100 * k as u64 + r,
                record_trajectory: true,
                ..EngineConfig::default()
            };
            let trace = run_repeated_game(&topo, &spec, &cfg).map_err(|e| e.to_string())?;
            runs += 1;
            let mut prev = ref_nu(&trace.initial_profile, &topo, spec.capacity(), 10.0);
            let mut monotone = true;
            for step in &trace.steps {
                let drop = (prev - step.nu) / 1f64.max(prev.abs());
                worst_drop = worst_drop.max(drop);
                if drop > 1e-9 {
                    monotone = false;
                }
                prev = step.nu;
            }
            max_steps = max_steps.max(trace.steps_used);
            if trace.converged && is_pure_nash(&trace.final_profile, &topo, &spec) && monotone {
                good += 1;
            }
        }
    }
    let detail = format!(
        "{good}/{runs} round-robin runs reached a verified NE (max {max_steps} steps), worst relative NU drop {worst_drop:.2e}"
    );
    if runs >= 200 && good == runs {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c4_counterexample() -> Outcome {
    let topo = build_fig1_fixture().map_err(|e| e.to_string())?;
    let check = check_fig1(&topo).map_err(|e| e.to_string())?;
    let spec = GameSpec::local(CapacityMode::binary(), topo.config().sinr_threshold);
    let mut runs = 0;
    let mut cycling = 0;
    for phase_offset in 0..topo.link_count() {
        for seed in 0..20 {
            let cfg = EngineConfig {
                scheduler: Scheduler::RoundRobin,
                response_rule: ResponseRule::Best,
                max_steps: 10_000,
                rng_seed: seed,
                record_trajectory: false,
                phase_offset,
                ..EngineConfig::default()
            };
            let trace = run_repeated_game(&topo, &spec, &cfg).map_err(|e| e.to_string())?;
            runs += 1;
            if !trace.converged && trace.cycle_detected {
                cycling += 1;
            }
        }
    }
    let detail = format!(
        "{} profiles scanned, {} pure NE; {cycling}/{runs} runs over all phase offsets cycle",
        check.profiles_scanned, check.local_pure_equilibria
    );
    if check.passed() && cycling == runs {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c5_oracle_optimality() -> Outcome {
    let instances = 30u64;
    let mut lines = Vec::new();
    let mut ok = true;
    for (mode, game) in [(CapacityMode::discrete(), "dc-a-potential"), (CapacityMode::binary(), "bc-a-potential")] {
        let spec = label(game).game_spec(10.0).map_err(|e| e.to_string())?.expect("game label");
        let mut ga_hits = 0;
        let mut ratio_sum = 0.0;
        for k in 0..instances {
            let topo = generate_topology(&tiny_scenario(), 5000 + k).map_err(|e| e.to_string())?;
            let best = compare_oracle(&topo, mode, 10.0, ORACLE_BUDGET).map_err(|e| e.to_string())?;
            let ga = ga_optimize(&topo, mode, 10.0, &GaConfig { rng_seed: k, ..GaConfig::desk() })
                .map_err(|e| e.to_string())?;
            let ga_nu = ref_nu(&ga.best_profile, &topo, mode, 10.0);
            let trace = run_repeated_game(&topo, &spec, &EngineConfig { rng_seed: k, ..EngineConfig::default() })
                .map_err(|e| e.to_string())?;
            let ne_nu = ref_nu(&trace.final_profile, &topo, mode, 10.0);
            if best.optimum_nu <= 0.0 {
                ga_hits += 1;
                ratio_sum += 1.0;
            } else {
                if ga_nu >= 0.95 * best.optimum_nu {
                    ga_hits += 1;
                }
                ratio_sum += ne_nu / best.optimum_nu;
            }
        }
        let hit_rate = ga_hits as f64 / instances as f64;
        let ne_ratio = ratio_sum / instances as f64;
        ok &= hit_rate >= 0.9 && ne_ratio >= 0.85;
        lines.push(format!(
            "{}: GA within 5% of optimum in {ga_hits}/{instances}, mean NE/optimum {ne_ratio:.3}",
            if mode.kind() == CapacityKind::Discrete { "DC" } else { "BC" }
        ));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c6_best_response() -> Outcome {
    let mut specs: Vec<(String, GameSpec)> = Vec::new();
    for text in [
        "cc-noa-local",
        "cc-noa-potential",
        "cc-a-local",
        "cc-a-potential",
        "dc-a-local",
        "dc-a-potential",
        "bc-a-local",
        "bc-a-potential",
        "dcp-a-fs",
        "bcp-a-hm",
    ] {
        specs.push((text.into(), label(text).game_spec(10.0).map_err(|e| e.to_string())?.expect("spec")));
    }
    for mode in [CapacityMode::discrete(), CapacityMode::binary()] {
        let spec = GameSpec::new(mode, InfoModel::PotentialIdentical, false, 10.0).map_err(|e| e.to_string())?;
        specs.push((format!("{:?}-identical", mode.kind()), spec));
    }
    let topologies: Vec<Topology> =
        (0..40u64).map(|k| desk_topology(40, [8, 12, 16][k as usize % 3], 5, 7000 + k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let triples = 100_000;
    let mut mismatches = 0usize;
    let mut first: Option<String> = None;
    for t in 0..triples {
        let topo = &topologies[rng.gen_range(0..topologies.len())];
        let (name, spec) = &specs[t % specs.len()];
        // Half of the profiles start from a best response of someone, so the
        // "keep current" tie rule is exercised too.
        let mut p = random_profile(topo, &mut rng);
        let i = rng.gen_range(0..topo.link_count());
        if rng.gen_bool(0.5) {
            p.set(i, ref_best_response(i, &p, topo, spec));
        }
        let got = best_response(i, &p, topo, spec);
        let want = ref_best_response(i, &p, topo, spec);
        if got != want {
            mismatches += 1;
            first.get_or_insert_with(|| format!(" first: {name} link {i}: got {got}, expected {want}"));
        }
    }
    let detail = format!(
        "{triples} triples over {} specs and {} topologies, {mismatches} mismatches{}",
        specs.len(),
        topologies.len(),
        first.unwrap_or_default()
    );
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c7_local_convergence() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for text in ["dc-a-local", "bc-a-local"] {
        let spec = label(text).game_spec(10.0).map_err(|e| e.to_string())?.expect("game label");
        let runs = 200u64;
        let mut good = 0;
        for r in 0..runs {
            let topo = desk_topology(40, [10, 20, 30][r as usize % 3], 5, 9000 + r);
            let cfg = EngineConfig { rng_seed: r, record_trajectory: false, ..EngineConfig::default() };
            let trace = run_repeated_game(&topo, &spec, &cfg).map_err(|e| e.to_string())?;
            if trace.converged && is_pure_nash(&trace.final_profile, &topo, &spec) {
                good += 1;
            }
        }
        let rate = good as f64 / runs as f64;
        ok &= rate >= 0.95;
        lines.push(format!("{text}: {good}/{runs} converged ({:.1}%)", 100.0 * rate));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// One-sided 95% bounds of the mean of paired differences, via the
/// Student-t quantile.
fn t_bounds(diffs: &[f64]) -> (f64, f64, f64) {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("dof > 0").inverse_cdf(0.95);
    let half = t * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

fn c8_orderings() -> Outcome {
    let names = [
        "cc-noa-local",
        "cc-noa-potential",
        "bc-a-local",
        "bcp-a-fs",
        "bcp-a-hm",
        "dc-a-local",
        "dcp-a-fs",
        "dcp-a-hm",
    ];
    let plan = ExperimentPlan {
        labels: names.iter().map(|t| label(t)).collect(),
        link_counts: vec![10, 20, 30],
        instances: 50,
        base_seed: 8,
        learning: LearningSettings { total_steps: 10_000, ..LearningSettings::default() },
        ..ExperimentPlan::default()
    };
    let out = run_plan(&plan).map_err(|e| e.to_string())?;
    let mut by_key: BTreeMap<(String, usize), Vec<&InstanceRecord>> = BTreeMap::new();
    for r in &out.records {
        by_key.entry((r.label.to_string(), r.link_count)).or_default().push(r);
    }
    let metric = |name: &str, n: usize, pick: fn(&crn_core::experiments::InstanceOutcome) -> f64| -> Result<Vec<f64>, String> {
        let mut rows = by_key.get(&(name.to_string(), n)).cloned().unwrap_or_default();
        rows.sort_by_key(|r| r.instance);
        rows.iter().map(|r| r.outcome.as_ref().map(pick).map_err(|e| format!("{name} N={n}: {e}"))).collect()
    };
    let paired = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };

    let mut ok = true;
    let mut lines = Vec::new();
    for &n in &plan.link_counts {
        let pot = metric("cc-noa-potential", n, |o| o.nu_valid)?;
        let loc = metric("cc-noa-local", n, |o| o.nu_valid)?;
        let (m, lo, _) = t_bounds(&paired(&pot, &loc));
        let a = lo > 0.0;

        let bc = metric("bc-a-local", n, |o| o.valid_links)?;
        let fs_v = metric("bcp-a-fs", n, |o| o.valid_links)?;
        let hm_v = metric("bcp-a-hm", n, |o| o.valid_links)?;
        let (mb_fs, lb_fs, ub_fs) = t_bounds(&paired(&fs_v, &bc));
        let (mb_hm, lb_hm, ub_hm) = t_bounds(&paired(&hm_v, &bc));
        let b = ub_fs >= 0.0 && ub_hm >= 0.0;

        let dc = metric("dc-a-local", n, |o| o.nu)?;
        let fs_n = metric("dcp-a-fs", n, |o| o.nu)?;
        let hm_n = metric("dcp-a-hm", n, |o| o.nu)?;
        let (mc_fs, lc_fs, uc_fs) = t_bounds(&paired(&fs_n, &dc));
        let (mc_hm, lc_hm, uc_hm) = t_bounds(&paired(&hm_n, &dc));
        let c = uc_fs >= 0.0 && uc_hm >= 0.0;

        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let rel = |x: f64, y: f64| (x - y).abs() / (0.5 * (x + y)).max(f64::MIN_POSITIVE);
        let d_nu = rel(mean(&fs_n), mean(&hm_n));
        let d_valid = rel(mean(&fs_v), mean(&hm_v));
        let d = d_nu <= 0.05 && d_valid <= 0.05;

        ok &= a && b && c && d && pot.len() >= 50;
        lines.push(format!(
            "N={n} (a) {} dNUval={m:.2} lo={lo:.2} (b) {} fs {mb_fs:.2} [{lb_fs:.2},{ub_fs:.2}] hm {mb_hm:.2} [{lb_hm:.2},{ub_hm:.2}] \
             (c) {} fs {mc_fs:.2} [{lc_fs:.2},{uc_fs:.2}] hm {mc_hm:.2} [{lc_hm:.2},{uc_hm:.2}] (d) {} {:.1}%/{:.1}%",
            mark(a),
            mark(b),
            mark(c),
            mark(d),
            100.0 * d_nu,
            100.0 * d_valid
        ));
    }
    let detail = format!("{} instances per point\n      {}", plan.instances, lines.join("\n      "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mark(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn c9_no_regret() -> Outcome {
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut runs = 0;
    for (k, n) in [10, 10, 10, 10, 10, 20, 20, 20, 20, 20].into_iter().enumerate() {
        let topo = desk_topology(40, n, 5, 11_000 + k as u64);
        for (text, algorithm) in [("dcp-a-fs", Algorithm::Fs), ("dcp-a-hm", Algorithm::Hm)] {
            let spec = label(text).game_spec(10.0).map_err(|e| e.to_string())?.expect("spec");
            let cfg = LearningConfig {
                algorithm,
                total_steps: 20_000,
                rng_seed: k as u64,
                record_trajectory: false,
                ..LearningConfig::default()
            };
            let trace = run_learning(&topo, &spec, &cfg).map_err(|e| e.to_string())?;
            let bound = 0.05 * trace.max_step_utility;
            let regret = (0..n).map(|i| average_external_regret(i, &trace)).fold(f64::NEG_INFINITY, f64::max);
            worst_ratio = worst_ratio.max(regret / trace.max_step_utility);
            ok &= regret < bound;
            runs += 1;
        }
    }

    let mut worst_gap: f64 = f64::NEG_INFINITY;
    let mut audits = 0;
    for k in 0..10u64 {
        let topo = generate_topology(&tiny_scenario(), 12_000 + k).map_err(|e| e.to_string())?;
        for (text, algorithm) in [("dcp-a-fs", Algorithm::Fs), ("dcp-a-hm", Algorithm::Hm)] {
            let spec = label(text).game_spec(10.0).map_err(|e| e.to_string())?.expect("spec");
            let cfg = LearningConfig {
                algorithm,
                total_steps: 20_000,
                averaging_window: 1.0,
                rng_seed: k,
                record_trajectory: false,
                ..LearningConfig::default()
            };
            let trace = run_learning(&topo, &spec, &cfg).map_err(|e| e.to_string())?;
            let gap = empirical_cce_gap(&trace, &topo, &spec, 10_000).map_err(|e| e.to_string())?;
            worst_gap = worst_gap.max(gap.gap / trace.max_step_utility);
            ok &= !gap.low_confidence && gap.gap <= 0.05 * trace.max_step_utility;
            audits += 1;
        }
    }
    let detail = format!(
        "{runs} runs: max regret / max step utility = {worst_ratio:.4}; {audits} CCE audits: max gap / max step utility = {worst_gap:.4} (bound 0.05)"
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default()
}

const SMALL_PLAN: &str = r#"
labels = ["dc-a-local", "bc-a-potential", "dcp-a-fs", "bcp-a-hm", "ga-dc"]
link_counts = [4, 6]
instances = 3
base_seed = 5

[scenario]
node_count = 20
area_side_m = 760.0
channel_count = 2
channel_bandwidths = [1.0, 1.0]
avail_min = 1
avail_max = 2
power_levels = 4
link_count = 4

[learning]
total_steps = 500

[ga]
max_generations = 20
"#;

fn c10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_crn");
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = work.path().join("plan.toml");
    fs::write(&config, SMALL_PLAN).map_err(|e| e.to_string())?;
    let config = config.to_string_lossy().into_owned();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("gen", vec!["gen", "--config", &config, "--seed", "3"]),
        ("play", vec!["play", "--config", &config, "--seed", "3", "--label", "dc-a-local"]),
        ("learn", vec!["learn", "--config", &config, "--seed", "3", "--steps", "500"]),
        ("ga", vec!["ga", "--config", &config, "--seed", "3", "--steps", "20"]),
        ("batch", vec!["batch", "--config", &config, "--seed", "3"]),
        ("fixture", vec!["fixture", "fig1", "--steps", "2000"]),
        ("oracle", vec!["oracle", "--config", &config, "--seed", "3", "--links", "4", "--label", "ga-bc"]),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, args) in &commands {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = work.path().join(format!("{name}-{run}"));
            let status = Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| format!("{name}: {e}"))?;
            if !status.status.success() {
                return Err(format!("{name} exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push(read_dir_bytes(&out));
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
        ok &= same;
        lines.push(format!("{name} {} ({} files)", mark(same), outputs[0].len()));
    }
    let detail = lines.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn adversarial_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.gen_range(0..6) {
            0 => -1.0,
            1 => 0.0,
            2 => rng.gen_range(-1e6..1e6),
            3 => 1e9 * rng.gen::<f64>(),
            4 => f64::from(rng.gen_range(-4i32..64)),
            _ => rng.gen::<f64>() * 1e-12,
        })
        .collect()
}

fn c11_simplex() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut updates = 0usize;
    let mut worst_sum: f64 = 0.0;
    let mut negative = 0usize;
    let mut shift_failures = 0usize;
    while updates < 1_000_000 {
        let n = rng.gen_range(1..=65);
        let mut fs = vec![0.0; n];
        let mut hm = vec![0.0; n];
        for _ in 0..50 {
            let u = adversarial_vector(n, &mut rng);
            let realized = rng.gen_range(0..n);
            for (q, kind) in [(fs_update(&mut fs, &u, 0.1), 0), (hm_update(&mut hm, &u, realized), 1)] {
                let q = q.map_err(|e| format!("update {kind}: {e}"))?;
                negative += q.iter().filter(|&&x| x < 0.0 || x.is_nan()).count();
                worst_sum = worst_sum.max((q.iter().sum::<f64>() - 1.0).abs());
                updates += 1;
            }
        }
        // Dyadic cumulative values and shifts keep every subtraction exact.
        let cum: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-1000i32..1000)) / 8.0).collect();
        let shift = f64::from(rng.gen_range(-1_000_000i32..1_000_000)) / 4.0;
        let shifted: Vec<f64> = cum.iter().map(|c| c + shift).collect();
        if fs_probabilities(&cum, 0.1) != fs_probabilities(&shifted, 0.1) {
            shift_failures += 1;
        }
    }
    let detail = format!(
        "{updates} updates: {negative} negative entries, max |sum - 1| = {worst_sum:.2e}, {shift_failures} shift-invariance failures"
    );
    if negative == 0 && worst_sum <= 1e-12 && shift_failures == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 calibration", c1_calibration),
        ("2 potential-identity", c2_potential_identity),
        ("3 potential-convergence", c3_potential_convergence),
        ("4 counterexample", c4_counterexample),
        ("5 oracle-optimality", c5_oracle_optimality),
        ("6 best-response", c6_best_response),
        ("7 local-convergence", c7_local_convergence),
        ("8 orderings", c8_orderings),
        ("9 no-regret", c9_no_regret),
        ("10 determinism", c10_determinism),
        ("11 simplex", c11_simplex),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
