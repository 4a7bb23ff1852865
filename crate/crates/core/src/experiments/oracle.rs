use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::enumerate_strategies;
use crate::phy::{network_utility, CapacityMode, Strategy, StrategyProfile};
use crate::scenario::Topology;

/// Largest joint enumeration the oracle will attempt.
pub const ORACLE_BUDGET: f64 = 1e8;

/// Number of joint profiles, as a float so large instances do not overflow.
pub fn profile_count(topo: &Topology) -> f64 {
    (0..topo.link_count()).map(|i| enumerate_strategies(i, topo).len() as f64).product()
}

fn check_budget(topo: &Topology, budget: f64) -> Result<()> {
    let profiles = profile_count(topo);
    if profiles > budget {
        return Err(Error::Budget { profiles, budget });
    }
    Ok(())
}

/// Visits every joint profile whose link 0 plays `first`, in enumeration
/// order (link 1 varies fastest).
fn scan_with_first<F: FnMut(&StrategyProfile)>(options: &[Vec<Strategy>], first: Strategy, mut visit: F) {
    let n = options.len();
    let mut idx = vec![0usize; n];
    let mut profile = StrategyProfile::new(options.iter().map(|o| o[0]).collect());
    profile.set(0, first);
    loop {
        visit(&profile);
        let mut d = 1;
        loop {
            if d >= n {
                return;
            }
            idx[d] += 1;
            if idx[d] < options[d].len() {
                profile.set(d, options[d][idx[d]]);
                break;
            }
            idx[d] = 0;
            profile.set(d, options[d][0]);
            d += 1;
        }
    }
}

/// Calls `visit` on every joint profile, sequentially.
pub fn for_each_profile<F: FnMut(&StrategyProfile)>(topo: &Topology, budget: f64, mut visit: F) -> Result<()> {
    check_budget(topo, budget)?;
    if topo.link_count() == 0 {
        visit(&StrategyProfile::all_off(0));
        return Ok(());
    }
    let options: Vec<Vec<Strategy>> = (0..topo.link_count()).map(|i| enumerate_strategies(i, topo)).collect();
    for &first in &options[0] {
        scan_with_first(&options, first, &mut visit);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub optimum_nu: f64,
    /// First maximizer in enumeration order.
    pub argmax: StrategyProfile,
    pub profiles: f64,
}

/// Exhaustive maximum of network utility over all joint profiles. Refuses
/// with [`Error::Budget`] when the profile count exceeds `budget`.
pub fn compare_oracle(topo: &Topology, mode: CapacityMode, alpha: f64, budget: f64) -> Result<OracleResult> {
    check_budget(topo, budget)?;
    let n = topo.link_count();
    if n == 0 {
        return Ok(OracleResult { optimum_nu: 0.0, argmax: StrategyProfile::all_off(0), profiles: 1.0 });
    }
    let options: Vec<Vec<Strategy>> = (0..n).map(|i| enumerate_strategies(i, topo)).collect();
    let partial: Vec<(f64, StrategyProfile)> = options[0]
        .par_iter()
        .map(|&first| {
            let mut best = (f64::NEG_INFINITY, StrategyProfile::all_off(n));
            scan_with_first(&options, first, |p| {
                let nu = network_utility(p, topo, mode, alpha);
                if nu > best.0 {
                    best = (nu, p.clone());
                }
            });
            best
        })
        .collect();
    // Strict comparison in enumeration order keeps the first maximizer.
    let (optimum_nu, argmax) = partial.into_iter().fold((f64::NEG_INFINITY, StrategyProfile::all_off(n)), |acc, x| {
        if x.0 > acc.0 {
            x
        } else {
            acc
        }
    });
    Ok(OracleResult { optimum_nu, argmax, profiles: profile_count(topo) })
}
