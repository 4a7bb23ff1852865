//! Joint channel and power allocation for cognitive radio networks under
//! the SINR interference model, played as local or potential games, learned
//! with no-regret algorithms, or searched with a genetic algorithm.
// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod ga;
pub mod games;
pub mod learning;
pub mod phy;
pub mod scenario;

pub use dynamics::{run_repeated_game, EngineConfig, ResponseRule, RunTrace, Scheduler};
pub use error::{Error, Result};
pub use experiments::{ExperimentPlan, StrategyLabel};
pub use ga::{ga_optimize, GaConfig, GaResult};
pub use games::{best_response, is_pure_nash, GameSpec, InfoModel};
pub use learning::{run_learning, Algorithm, LearningConfig, LearningTrace};
pub use phy::{CapacityKind, CapacityMode, Strategy, StrategyProfile};
pub use scenario::{generate_topology, ScenarioConfig, Topology};
