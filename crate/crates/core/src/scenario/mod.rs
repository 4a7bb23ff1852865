//! Network instances: node placement, links, channel gains and the
//! per-region channel availability mask.
//!
//! All powers inside the library are linear milliwatts. Decibel units only
//! appear at the file boundary (see [`io`]).

pub mod io;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closest two nodes may be placed, and the floor applied to any
/// transmitter/receiver distance when building the gain matrix.
pub const MIN_NODE_SEPARATION: f64 = 1.0;

const MAX_NODE_TRIES: usize = 10_000;
const MAX_LINK_TRIES: usize = 10_000;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Physical parameters of a scenario, in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub area_side: f64,
    pub node_count: usize,
    pub link_count: usize,
    pub channel_count: usize,
    pub region_side: f64,
    pub avail_min: usize,
    pub avail_max: usize,
    /// Maximum transmit power (mW).
    pub p_max: f64,
    pub power_levels: usize,
    pub path_loss_exponent: f64,
    /// SINR threshold as a linear ratio.
    pub sinr_threshold: f64,
    /// Background noise power (mW).
    pub noise_power: f64,
    pub max_modulation: u32,
    pub channel_bandwidths: Vec<f64>,
    pub max_link_distance: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    /// The full-size scenario: 200 nodes on a 2.4 km square, 10 channels,
    /// 3 to 8 available per 100 m region, 20 dBm in 16 levels, 10 dB
    /// threshold and -85.9 dBm noise.
    fn default() -> Self {
        Self {
            area_side: 2400.0,
            node_count: 200,
            link_count: 200,
            channel_count: 10,
            region_side: 100.0,
            avail_min: 3,
            avail_max: 8,
            p_max: dbm_to_mw(20.0),
            power_levels: 16,
            path_loss_exponent: 4.0,
            sinr_threshold: db_to_linear(10.0),
            noise_power: dbm_to_mw(-85.9),
            max_modulation: 256,
            channel_bandwidths: vec![1.0; 10],
            max_link_distance: 250.0,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Scaled-down scenario keeping the node density of the full-size one:
    /// the square side shrinks as `2400 m * sqrt(nodes / 200)`.
    pub fn desk(node_count: usize, link_count: usize, channel_count: usize) -> Self {
        let area_side = 2400.0 * (node_count as f64 / 200.0).sqrt();
        // Keep roughly the 30%..80% availability ratio of the full scenario.
        let avail_min = ((channel_count as f64 * 0.3).round() as usize).max(1);
        let avail_max = ((channel_count as f64 * 0.8).round() as usize).clamp(avail_min, channel_count);
        Self {
            area_side,
            node_count,
            link_count,
            channel_count,
            avail_min,
            avail_max,
            channel_bandwidths: vec![1.0; channel_count],
            ..Self::default()
        }
    }

    pub fn with_links(mut self, link_count: usize) -> Self {
        self.link_count = link_count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.area_side > 0.0) {
            return fail(format!("area_side must be positive, got {}", self.area_side));
        }
        if !(self.region_side > 0.0) {
            return fail(format!("region_side must be positive, got {}", self.region_side));
        }
        if self.channel_count == 0 {
            return fail("channel_count must be at least 1".into());
        }
        if self.avail_min == 0 || self.avail_min > self.avail_max || self.avail_max > self.channel_count {
            return fail(format!(
                "need 0 < avail_min <= avail_max <= channel_count, got {} / {} / {}",
                self.avail_min, self.avail_max, self.channel_count
            ));
        }
        if self.power_levels < 2 {
            return fail(format!("power_levels must be >= 2, got {}", self.power_levels));
        }
        if !(self.p_max > 0.0) {
            return fail(format!("p_max must be positive, got {}", self.p_max));
        }
        if !(self.sinr_threshold > 1.0) {
            return fail(format!("sinr_threshold must exceed 1 (linear), got {}", self.sinr_threshold));
        }
        if !(self.noise_power > 0.0) {
            return fail(format!("noise_power must be positive, got {}", self.noise_power));
        }
        if !(self.path_loss_exponent > 0.0) {
            return fail(format!("path_loss_exponent must be positive, got {}", self.path_loss_exponent));
        }
        if self.max_modulation < 2 || !self.max_modulation.is_power_of_two() {
            return fail(format!("max_modulation must be a power of two >= 2, got {}", self.max_modulation));
        }
        if self.channel_bandwidths.len() != self.channel_count {
            return fail(format!(
                "expected {} channel bandwidths, got {}",
                self.channel_count,
                self.channel_bandwidths.len()
            ));
        }
        if self.channel_bandwidths.iter().any(|w| !(*w > 0.0)) {
            return fail("all channel bandwidths must be positive".into());
        }
        if self.link_count == 0 {
            return fail("link_count must be at least 1".into());
        }
        if !(self.max_link_distance >= MIN_NODE_SEPARATION) {
            return fail(format!("max_link_distance must be >= {MIN_NODE_SEPARATION} m"));
        }
        Ok(())
    }
}

/// Transmit levels `k * p_max / Q` for `k = 1..=Q`. OFF is not a level.
pub fn power_levels(config: &ScenarioConfig) -> Result<Vec<f64>> {
    if config.power_levels < 2 {
        return Err(Error::Config(format!("power_levels must be >= 2, got {}", config.power_levels)));
    }
    let q = config.power_levels as f64;
    Ok((1..=config.power_levels).map(|k| k as f64 * config.p_max / q).collect())
}

/// Path-loss gain `distance^(-gamma)`.
pub fn channel_gain(distance: f64, gamma: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("channel gain needs a positive distance, got {distance}")));
    }
    Ok(distance.powf(-gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyOrigin {
    Positional,
    Synthetic,
}

/// An immutable network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<(f64, f64)>,
    links: Vec<(usize, usize)>,
    /// Row-major: `gains[i * n + j]` is the gain from the transmitter of
    /// link `i` to the receiver of link `j`.
    gains: Vec<f64>,
    availability: Vec<Vec<usize>>,
    config: ScenarioConfig,
    origin: TopologyOrigin,
    levels: Vec<f64>,
}

impl Topology {
    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    #[inline]
    pub fn gain(&self, from_link: usize, to_link: usize) -> f64 {
        self.gains[from_link * self.links.len() + to_link]
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    /// Usable channels of a link, ascending.
    pub fn availability(&self, link: usize) -> &[usize] {
        &self.availability[link]
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn origin(&self) -> TopologyOrigin {
        self.origin
    }

    /// Transmit power levels in mW, ascending.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn bandwidth(&self, channel: usize) -> f64 {
        self.config.channel_bandwidths[channel]
    }

    pub fn noise(&self) -> f64 {
        self.config.noise_power
    }

    /// Euclidean length of a link (positional topologies only).
    pub fn link_length(&self, link: usize) -> Option<f64> {
        if self.positions.is_empty() {
            return None;
        }
        let (tx, rx) = self.links[link];
        Some(distance(self.positions[tx], self.positions[rx]))
    }

    fn gain_matrix_rows(&self) -> Vec<Vec<f64>> {
        self.gains.chunks(self.links.len()).map(|r| r.to_vec()).collect()
    }
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn positional_gains(positions: &[(f64, f64)], links: &[(usize, usize)], gamma: f64) -> Vec<f64> {
    let n = links.len();
    let mut gains = Vec::with_capacity(n * n);
    for &(tx, _) in links {
        for &(_, rx) in links {
            // A node that transmits on one link and receives on another sits at
            // distance 0 from itself; the separation floor keeps the gain finite.
            let d = distance(positions[tx], positions[rx]).max(MIN_NODE_SEPARATION);
            gains.push(d.powf(-gamma));
        }
    }
    gains
}

fn region_of(p: (f64, f64), config: &ScenarioConfig, cols: usize) -> usize {
    let cx = ((p.0 / config.region_side) as usize).min(cols - 1);
    let cy = ((p.1 / config.region_side) as usize).min(cols - 1);
    cy * cols + cx
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|c| b.binary_search(c).is_ok()).collect()
}

/// Draws a random instance. A pure function of `(config, seed)`.
pub fn generate_topology(config: &ScenarioConfig, seed: u64) -> Result<Topology> {
    config.validate()?;
    if config.node_count < 2 {
        return Err(Error::Config("need at least 2 nodes to form a link".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(config.node_count);
    for node in 0..config.node_count {
        let mut placed = false;
        for _ in 0..MAX_NODE_TRIES {
            let p = (rng.gen_range(0.0..config.area_side), rng.gen_range(0.0..config.area_side));
            if positions.iter().all(|&q| distance(p, q) >= MIN_NODE_SEPARATION) {
                positions.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!("could not place node {node} with 1 m separation")));
        }
    }

    let cols = (config.area_side / config.region_side).ceil().max(1.0) as usize;
    let regions: Vec<Vec<usize>> = (0..cols * cols)
        .map(|_| {
            let size = rng.gen_range(config.avail_min..=config.avail_max);
            let mut set = index::sample(&mut rng, config.channel_count, size).into_vec();
            set.sort_unstable();
            set
        })
        .collect();
    let node_region: Vec<usize> = positions.iter().map(|&p| region_of(p, config, cols)).collect();

    let mut links = Vec::with_capacity(config.link_count);
    let mut availability = Vec::with_capacity(config.link_count);
    let mut neighbours: Vec<Option<Vec<usize>>> = vec![None; config.node_count];
    for link in 0..config.link_count {
        let mut accepted = false;
        for _ in 0..MAX_LINK_TRIES {
            let tx = rng.gen_range(0..config.node_count);
            let candidates = neighbours[tx].get_or_insert_with(|| {
                (0..config.node_count)
                    .filter(|&j| j != tx && distance(positions[tx], positions[j]) <= config.max_link_distance)
                    .collect()
            });
            if candidates.is_empty() {
                continue;
            }
            let rx = candidates[rng.gen_range(0..candidates.len())];
            let avail = intersect_sorted(&regions[node_region[tx]], &regions[node_region[rx]]);
            if avail.is_empty() {
                continue;
            }
            links.push((tx, rx));
            availability.push(avail);
            accepted = true;
            break;
        }
        if !accepted {
            return Err(Error::Generation(format!(
                "could not place link {link} within {} m after {MAX_LINK_TRIES} attempts",
                config.max_link_distance
            )));
        }
    }

    let gains = positional_gains(&positions, &links, config.path_loss_exponent);
    let levels = power_levels(config)?;
    let mut config = config.clone();
    config.rng_seed = seed;
    Ok(Topology { positions, links, gains, availability, config, origin: TopologyOrigin::Positional, levels })
}

/// Builds a topology from an explicit gain matrix. `gains[i][j]` is the gain
/// from the transmitter of link `i` to the receiver of link `j`; the
/// physical parameters (powers, noise, bandwidths, threshold) come from
/// `config`, whose `link_count` is overridden by the matrix size.
pub fn synthetic_topology(
    gains: &[Vec<f64>],
    availability: Vec<Vec<usize>>,
    config: &ScenarioConfig,
) -> Result<Topology> {
    let n = gains.len();
    if n == 0 {
        return Err(Error::Validation("gain matrix is empty".into()));
    }
    if gains.iter().any(|row| row.len() != n) {
        return Err(Error::Validation("gain matrix must be square".into()));
    }
    if let Some((i, j)) = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).find(|&(i, j)| !(gains[i][j] > 0.0)) {
        return Err(Error::Validation(format!("gain[{i}][{j}] = {} is not positive", gains[i][j])));
    }
    let mut config = config.clone();
    config.link_count = n;
    config.validate()?;
    validate_availability(&availability, n, config.channel_count)?;
    let levels = power_levels(&config)?;
    Ok(Topology {
        positions: Vec::new(),
        links: (0..n).map(|i| (2 * i, 2 * i + 1)).collect(),
        gains: gains.iter().flatten().copied().collect(),
        availability,
        config,
        origin: TopologyOrigin::Synthetic,
        levels,
    })
}

fn validate_availability(availability: &[Vec<usize>], links: usize, channels: usize) -> Result<()> {
    if availability.len() != links {
        return Err(Error::Validation(format!("expected {links} availability sets, got {}", availability.len())));
    }
    for (i, set) in availability.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::Validation(format!("link {i} has no available channel")));
        }
        if set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!("availability of link {i} must be strictly ascending")));
        }
        if set.iter().any(|&c| c >= channels) {
            return Err(Error::Validation(format!("link {i} lists a channel >= {channels}")));
        }
    }
    Ok(())
}

/// Rebuilds a positional topology from explicit nodes and links.
pub(crate) fn positional_topology(
    positions: Vec<(f64, f64)>,
    links: Vec<(usize, usize)>,
    availability: Vec<Vec<usize>>,
    config: &ScenarioConfig,
) -> Result<Topology> {
    let mut config = config.clone();
    config.link_count = links.len();
    config.validate()?;
    if let Some(&(tx, rx)) = links.iter().find(|&&(tx, rx)| tx >= positions.len() || rx >= positions.len() || tx == rx) {
        return Err(Error::Validation(format!("link ({tx}, {rx}) has invalid endpoints")));
    }
    validate_availability(&availability, links.len(), config.channel_count)?;
    let gains = positional_gains(&positions, &links, config.path_loss_exponent);
    let levels = power_levels(&config)?;
    Ok(Topology { positions, links, gains, availability, config, origin: TopologyOrigin::Positional, levels })
}
