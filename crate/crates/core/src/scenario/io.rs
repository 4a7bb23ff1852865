//! Text formats for scenario configs (TOML, dBm/dB units) and topology
//! dumps (JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm, positional_topology, synthetic_topology, ScenarioConfig,
    Topology, TopologyOrigin,
};
use crate::error::{Error, Result};

/// On-disk form of [`ScenarioConfig`]. Missing keys take the full-size
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub area_side_m: f64,
    pub node_count: usize,
    pub link_count: usize,
    pub channel_count: usize,
    pub region_side_m: f64,
    pub avail_min: usize,
    pub avail_max: usize,
    pub p_max_dbm: f64,
    pub power_levels: usize,
    pub path_loss_exponent: f64,
    pub sinr_threshold_db: f64,
    pub noise_dbm: f64,
    pub max_modulation: u32,
    /// One entry per channel; omitted means every channel has bandwidth 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_bandwidths: Option<Vec<f64>>,
    pub max_link_distance_m: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self::from_config(&ScenarioConfig::default())
    }
}

impl ScenarioFile {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        Self {
            area_side_m: c.area_side,
            node_count: c.node_count,
            link_count: c.link_count,
            channel_count: c.channel_count,
            region_side_m: c.region_side,
            avail_min: c.avail_min,
            avail_max: c.avail_max,
            p_max_dbm: mw_to_dbm(c.p_max),
            power_levels: c.power_levels,
            path_loss_exponent: c.path_loss_exponent,
            sinr_threshold_db: linear_to_db(c.sinr_threshold),
            noise_dbm: mw_to_dbm(c.noise_power),
            max_modulation: c.max_modulation,
            channel_bandwidths: Some(c.channel_bandwidths.clone()),
            max_link_distance_m: c.max_link_distance,
            rng_seed: c.rng_seed,
        }
    }

    pub fn to_config(&self) -> Result<ScenarioConfig> {
        let config = ScenarioConfig {
            area_side: self.area_side_m,
            node_count: self.node_count,
            link_count: self.link_count,
            channel_count: self.channel_count,
            region_side: self.region_side_m,
            avail_min: self.avail_min,
            avail_max: self.avail_max,
            p_max: dbm_to_mw(self.p_max_dbm),
            power_levels: self.power_levels,
            path_loss_exponent: self.path_loss_exponent,
            sinr_threshold: db_to_linear(self.sinr_threshold_db),
            noise_power: dbm_to_mw(self.noise_dbm),
            max_modulation: self.max_modulation,
            channel_bandwidths: self.channel_bandwidths.clone().unwrap_or_else(|| vec![1.0; self.channel_count]),
            max_link_distance: self.max_link_distance_m,
            rng_seed: self.rng_seed,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn parse_scenario_toml(text: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_config()
}

pub fn scenario_to_toml(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(&ScenarioFile::from_config(config)).map_err(|e| Error::Parse(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    parse_scenario_toml(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub scenario: ScenarioFile,
    pub origin: TopologyOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    pub links: Vec<[usize; 2]>,
    pub availability: Vec<Vec<usize>>,
    /// Explicit gains; required for synthetic topologies, recomputed from
    /// positions otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<Vec<f64>>>,
}

impl TopologyFile {
    pub fn from_topology(topo: &Topology) -> Self {
        let positional = topo.origin() == TopologyOrigin::Positional;
        Self {
            scenario: ScenarioFile::from_config(topo.config()),
            origin: topo.origin(),
            positions: positional.then(|| topo.positions().iter().map(|&(x, y)| [x, y]).collect()),
            links: topo.links().iter().map(|&(a, b)| [a, b]).collect(),
            availability: (0..topo.link_count()).map(|i| topo.availability(i).to_vec()).collect(),
            gains: (!positional).then(|| topo.gain_matrix_rows()),
        }
    }

    pub fn to_topology(&self) -> Result<Topology> {
        let config = self.scenario.to_config()?;
        match (&self.gains, &self.positions) {
            (Some(gains), _) => synthetic_topology(gains, self.availability.clone(), &config),
            (None, Some(pos)) => positional_topology(
                pos.iter().map(|p| (p[0], p[1])).collect(),
                self.links.iter().map(|l| (l[0], l[1])).collect(),
                self.availability.clone(),
                &config,
            ),
            (None, None) => Err(Error::Validation("topology file needs either positions or gains".into())),
        }
    }
}

pub fn topology_to_json(topo: &Topology) -> Result<String> {
    Ok(serde_json::to_string_pretty(&TopologyFile::from_topology(topo))?)
}

pub fn topology_from_json(text: &str) -> Result<Topology> {
    let file: TopologyFile = serde_json::from_str(text)?;
    file.to_topology()
}
