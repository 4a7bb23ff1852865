//! Benchmark fixtures shared by the criterion benches.

use crn_core::{generate_topology, ScenarioConfig, Topology};

/// Workstation-scale topology with `links` links on 5 channels.
pub fn bench_topology(links: usize, seed: u64) -> Topology {
    generate_topology(&ScenarioConfig::desk(60, links, 5), seed).expect("bench scenario is feasible")
}
