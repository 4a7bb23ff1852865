//! Centralized genetic-algorithm search for a high network-utility joint
//! assignment. Power genes are real-coded and quantized at decode; channel
//! genes are categorical.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{network_utility, sinr, CapacityKind, CapacityMode, Strategy, StrategyProfile};
use crate::scenario::Topology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Fraction of the population replaced by offspring each generation.
    pub replace_proportion: f64,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub genewise_swap_prob: f64,
    /// Distribution index of both SBX and polynomial mutation.
    pub sbx_polynomial_order: f64,
    pub mutation_prob: f64,
    /// Stop after this many generations without a strict improvement.
    pub stall_generations: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl GaConfig {
    /// Settings sized for a workstation batch.
    pub fn desk() -> Self {
        Self {
            population_size: 64,
            max_generations: 500,
            replace_proportion: 0.9,
            tournament_size: 8,
            crossover_prob: 0.9,
            genewise_swap_prob: 0.5,
            sbx_polynomial_order: 10.0,
            mutation_prob: 0.1,
            stall_generations: 100,
            rng_seed: 0,
        }
    }

    /// The original large-scale settings.
    pub fn full_scale() -> Self {
        Self {
            population_size: 1000,
            max_generations: 20_000,
            tournament_size: 500,
            stall_generations: 20_000,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {p}")))
            }
        };
        prob("crossover_prob", self.crossover_prob)?;
        prob("genewise_swap_prob", self.genewise_swap_prob)?;
        prob("mutation_prob", self.mutation_prob)?;
        if !(self.replace_proportion > 0.0 && self.replace_proportion <= 1.0) {
            return Err(Error::Config(format!("replace_proportion must be in (0, 1], got {}", self.replace_proportion)));
        }
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(Error::Config(format!(
                "tournament_size must be in 1..={}, got {}",
                self.population_size, self.tournament_size
            )));
        }
        if !(self.sbx_polynomial_order >= 0.0) {
            return Err(Error::Config("sbx_polynomial_order must be non-negative".into()));
        }
        Ok(())
    }

    /// Parents that survive unchanged into the next generation; at least
    /// one so the incumbent best is never lost.
    pub fn survivors(&self) -> usize {
        let keep = ((1.0 - self.replace_proportion) * self.population_size as f64).round() as usize;
        keep.clamp(1, self.population_size - 1)
    }
}

/// Per link: power in `[0, p_max]` mW and a channel from its availability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub power: Vec<f64>,
    pub channel: Vec<usize>,
}

impl Chromosome {
    pub fn random<R: Rng + ?Sized>(topo: &Topology, rng: &mut R) -> Self {
        let p_max = topo.config().p_max;
        let n = topo.link_count();
        let power = (0..n).map(|_| rng.gen_range(0.0..=p_max)).collect();
        let channel = (0..n).map(|i| *topo.availability(i).choose(rng).expect("availability is non-empty")).collect();
        Self { power, channel }
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Nearest level of `{0, p_max/Q, ..., p_max}`; zero decodes to OFF.
    pub fn decode_gene(&self, link: usize, topo: &Topology) -> Strategy {
        let q = topo.levels().len();
        let step = topo.config().p_max / q as f64;
        let k = (self.power[link] / step).round().clamp(0.0, q as f64) as usize;
        if k == 0 {
            Strategy::Off
        } else {
            Strategy::On { channel: self.channel[link], power: k - 1 }
        }
    }

    pub fn decode(&self, topo: &Topology) -> StrategyProfile {
        StrategyProfile::new((0..self.len()).map(|i| self.decode_gene(i, topo)).collect())
    }
}

/// One pass in link order: every link that decodes ON with SINR below
/// `alpha` (given the links already switched off) gets power 0.
pub fn repair_constraints(chromosome: &Chromosome, topo: &Topology, alpha: f64) -> Chromosome {
    let mut out = chromosome.clone();
    let mut profile = out.decode(topo);
    for i in 0..out.len() {
        if profile[i].is_on() && sinr(i, &profile, topo) < alpha {
            out.power[i] = 0.0;
            profile.set(i, Strategy::Off);
        }
    }
    out
}

fn sbx_beta<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    let e = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(e)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(e)
    }
}

/// Simulated binary crossover on power genes (clamped to `[0, p_max]`) with
/// genewise swapping, and genewise swapping of channel genes. With
/// probability `1 - crossover_prob` the parents are copied.
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    p_max: f64,
    config: &GaConfig,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    if !rng.gen_bool(config.crossover_prob) {
        return (c1, c2);
    }
    for k in 0..a.len() {
        let (x1, x2) = (a.power[k], b.power[k]);
        let beta = sbx_beta(config.sbx_polynomial_order, rng);
        let mid = 0.5 * (x1 + x2);
        let spread = 0.5 * beta * (x1 - x2);
        let mut y1 = (mid + spread).clamp(0.0, p_max);
        let mut y2 = (mid - spread).clamp(0.0, p_max);
        if rng.gen_bool(config.genewise_swap_prob) {
            std::mem::swap(&mut y1, &mut y2);
        }
        c1.power[k] = y1;
        c2.power[k] = y2;
        if rng.gen_bool(config.genewise_swap_prob) {
            c1.channel[k] = b.channel[k];
            c2.channel[k] = a.channel[k];
        }
    }
    (c1, c2)
}

/// Polynomial mutation of a value in `[0, upper]`.
pub fn polynomial_mutation<R: Rng + ?Sized>(x: f64, upper: f64, eta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    let e = 1.0 / (eta + 1.0);
    let delta = if u < 0.5 { (2.0 * u).powf(e) - 1.0 } else { 1.0 - (2.0 * (1.0 - u)).powf(e) };
    (x + delta * upper).clamp(0.0, upper)
}

/// With probability `mutation_prob`, mutates one uniformly chosen gene.
pub fn mutate<R: Rng + ?Sized>(c: &mut Chromosome, topo: &Topology, config: &GaConfig, rng: &mut R) {
    if !rng.gen_bool(config.mutation_prob) {
        return;
    }
    let gene = rng.gen_range(0..2 * c.len());
    let link = gene / 2;
    if gene % 2 == 0 {
        c.power[link] = polynomial_mutation(c.power[link], topo.config().p_max, config.sbx_polynomial_order, rng);
    } else {
        c.channel[link] = *topo.availability(link).choose(rng).expect("availability is non-empty");
    }
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let k = rng.gen_range(0..fitness.len());
        if fitness[k] > fitness[best] || (fitness[k] == fitness[best] && k < best) {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub best_nu: f64,
    pub mean_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_profile: StrategyProfile,
    pub best_nu: f64,
    pub generations: usize,
    pub evaluations: usize,
    pub log: Vec<GenerationLog>,
}

impl GaResult {
    /// CSV: `generation,best_nu,mean_nu`.
    pub fn write_log_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["generation", "best_nu", "mean_nu"])?;
        for g in &self.log {
            w.write_record([g.generation.to_string(), g.best_nu.to_string(), g.mean_nu.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Repairs each chromosome in place and returns its fitness. Runs in
/// parallel; results are collected in index order.
fn evaluate(pop: &mut [Chromosome], topo: &Topology, mode: CapacityMode, alpha: f64) -> Vec<f64> {
    pop.par_iter_mut()
        .map(|c| {
            *c = repair_constraints(c, topo, alpha);
            network_utility(&c.decode(topo), topo, mode, alpha)
        })
        .collect()
}

fn log_entry(generation: usize, fitness: &[f64]) -> GenerationLog {
    GenerationLog {
        generation,
        best_nu: fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_nu: fitness.iter().sum::<f64>() / fitness.len() as f64,
    }
}

/// Maximizes network utility under a discrete or binary capacity mode.
pub fn ga_optimize(topo: &Topology, mode: CapacityMode, alpha: f64, config: &GaConfig) -> Result<GaResult> {
    config.validate()?;
    if mode.kind() == CapacityKind::Continuous {
        return Err(Error::Precondition("the GA optimizes discrete or binary capacity".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let p_max = topo.config().p_max;
    let mut pop: Vec<Chromosome> = (0..config.population_size).map(|_| Chromosome::random(topo, &mut rng)).collect();
    let mut fitness = evaluate(&mut pop, topo, mode, alpha);
    let mut evaluations = pop.len();
    let mut log = vec![log_entry(0, &fitness)];
    let mut best = log[0].best_nu;
    let mut stall = 0;
    let survivors = config.survivors();
    let mut generation = 0;

    while generation < config.max_generations && stall < config.stall_generations {
        generation += 1;
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&x, &y| fitness[y].total_cmp(&fitness[x]));

        let mut offspring = Vec::with_capacity(pop.len() - survivors);
        while offspring.len() < pop.len() - survivors {
            let a = tournament(&fitness, config.tournament_size, &mut rng);
            let b = tournament(&fitness, config.tournament_size, &mut rng);
            let (mut c1, mut c2) = sbx_crossover(&pop[a], &pop[b], p_max, config, &mut rng);
            mutate(&mut c1, topo, config, &mut rng);
            mutate(&mut c2, topo, config, &mut rng);
            offspring.push(c1);
            if offspring.len() < pop.len() - survivors {
                offspring.push(c2);
            }
        }
        let child_fitness = evaluate(&mut offspring, topo, mode, alpha);
        evaluations += offspring.len();

        let mut next_pop: Vec<Chromosome> = order[..survivors].iter().map(|&k| pop[k].clone()).collect();
        let mut next_fit: Vec<f64> = order[..survivors].iter().map(|&k| fitness[k]).collect();
        next_pop.extend(offspring);
        next_fit.extend(child_fitness);
        pop = next_pop;
        fitness = next_fit;

        let entry = log_entry(generation, &fitness);
        if entry.best_nu > best {
            best = entry.best_nu;
            stall = 0;
        } else {
            stall += 1;
        }
        log.push(entry);
    }

    let winner = (0..pop.len()).fold(0, |acc, k| if fitness[k] > fitness[acc] { k } else { acc });
    Ok(GaResult {
        best_profile: pop[winner].decode(topo),
        best_nu: fitness[winner],
        generations: generation,
        evaluations,
        log,
    })
}
