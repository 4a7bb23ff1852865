use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameSpec;
use crate::learning::Algorithm;
use crate::phy::CapacityMode;

/// Capacity variants of the repeated games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GameCapacity {
    /// Continuous capacity, threshold ignored.
    CcNoAlpha,
    CcAlpha,
    DcAlpha,
    BcAlpha,
}

/// Discrete or binary capacity, used by the learners and the GA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridCapacity {
    Discrete,
    Binary,
}

impl GridCapacity {
    pub fn mode(self) -> CapacityMode {
        match self {
            GridCapacity::Discrete => CapacityMode::discrete(),
            GridCapacity::Binary => CapacityMode::binary(),
        }
    }
}

impl GameCapacity {
    pub fn mode(self) -> CapacityMode {
        match self {
            GameCapacity::CcNoAlpha => CapacityMode::continuous_unconstrained(),
            GameCapacity::CcAlpha => CapacityMode::continuous(),
            GameCapacity::DcAlpha => CapacityMode::discrete(),
            GameCapacity::BcAlpha => CapacityMode::binary(),
        }
    }
}

/// One strategy family of the comparison: a repeated game, a learner on the
/// power-corrected local game, or the GA.
///
/// Text form (case-insensitive, `α` may replace `a`, `/` or `_` may replace
/// `-`): `cc-noa-local`, `cc-a-potential`, `dc-a-local`, `bc-a-potential`,
/// `dcp-a-fs`, `bcp-a-hm`, `ga-dc`, `ga-bc`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyLabel {
    Game { capacity: GameCapacity, potential: bool },
    Learn { capacity: GridCapacity, algorithm: LearnAlgorithm },
    Ga { capacity: GridCapacity },
}

/// [`Algorithm`] with an ordering, so labels sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnAlgorithm {
    Fs,
    Hm,
}

impl From<LearnAlgorithm> for Algorithm {
    fn from(a: LearnAlgorithm) -> Self {
        match a {
            LearnAlgorithm::Fs => Algorithm::Fs,
            LearnAlgorithm::Hm => Algorithm::Hm,
        }
    }
}

impl StrategyLabel {
    /// Every label, in the order used for default plans and reports.
    pub fn all() -> Vec<StrategyLabel> {
        let mut out = Vec::new();
        for potential in [false, true] {
            for capacity in [GameCapacity::CcNoAlpha, GameCapacity::CcAlpha, GameCapacity::DcAlpha, GameCapacity::BcAlpha] {
                out.push(StrategyLabel::Game { capacity, potential });
            }
        }
        for capacity in [GridCapacity::Discrete, GridCapacity::Binary] {
            for algorithm in [LearnAlgorithm::Fs, LearnAlgorithm::Hm] {
                out.push(StrategyLabel::Learn { capacity, algorithm });
            }
        }
        for capacity in [GridCapacity::Discrete, GridCapacity::Binary] {
            out.push(StrategyLabel::Ga { capacity });
        }
        out
    }

    /// Capacity mode used for the reported network utility.
    pub fn capacity_mode(self) -> CapacityMode {
        match self {
            StrategyLabel::Game { capacity, .. } => capacity.mode(),
            StrategyLabel::Learn { capacity, .. } | StrategyLabel::Ga { capacity } => capacity.mode(),
        }
    }

    /// Game played by this label; `None` for the GA.
    pub fn game_spec(self, alpha: f64) -> Result<Option<GameSpec>> {
        Ok(match self {
            StrategyLabel::Game { capacity, potential: false } => Some(GameSpec::local(capacity.mode(), alpha)),
            StrategyLabel::Game { capacity, potential: true } => Some(GameSpec::potential(capacity.mode(), alpha)),
            StrategyLabel::Learn { capacity, .. } => {
                Some(GameSpec::new(capacity.mode(), crate::games::InfoModel::Local, true, alpha)?)
            }
            StrategyLabel::Ga { .. } => None,
        })
    }
}

impl fmt::Display for StrategyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let grid = |c: &GridCapacity| match c {
            GridCapacity::Discrete => "dc",
            GridCapacity::Binary => "bc",
        };
        match self {
            StrategyLabel::Game { capacity, potential } => {
                let c = match capacity {
                    GameCapacity::CcNoAlpha => "cc-noa",
                    GameCapacity::CcAlpha => "cc-a",
                    GameCapacity::DcAlpha => "dc-a",
                    GameCapacity::BcAlpha => "bc-a",
                };
                write!(f, "{c}-{}", if *potential { "potential" } else { "local" })
            }
            StrategyLabel::Learn { capacity, algorithm } => {
                let a = match algorithm {
                    LearnAlgorithm::Fs => "fs",
                    LearnAlgorithm::Hm => "hm",
                };
                write!(f, "{}p-a-{a}", grid(capacity))
            }
            StrategyLabel::Ga { capacity } => write!(f, "ga-{}", grid(capacity)),
        }
    }
}

impl FromStr for StrategyLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| match c {
                'α' => 'a',
                '/' | '_' | ' ' => '-',
                c => c,
            })
            .collect();
        StrategyLabel::all()
            .into_iter()
            .find(|l| l.to_string() == norm)
            .ok_or_else(|| {
                let known: Vec<String> = StrategyLabel::all().iter().map(|l| l.to_string()).collect();
                Error::Parse(format!("unknown strategy label '{s}' (known: {})", known.join(", ")))
            })
    }
}

impl TryFrom<String> for StrategyLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategyLabel> for String {
    fn from(l: StrategyLabel) -> Self {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::InfoModel;
    use crate::phy::CapacityKind;

    #[test]
    fn round_trip_and_aliases() {
        for l in StrategyLabel::all() {
            assert_eq!(l.to_string().parse::<StrategyLabel>().unwrap(), l);
        }
        assert_eq!(StrategyLabel::all().len(), 14);
        let a: StrategyLabel = "DC-α/LOCAL".parse().unwrap();
        assert_eq!(a, StrategyLabel::Game { capacity: GameCapacity::DcAlpha, potential: false });
        let b: StrategyLabel = "BCP-α_HM".parse().unwrap();
        assert_eq!(b, StrategyLabel::Learn { capacity: GridCapacity::Binary, algorithm: LearnAlgorithm::Hm });
        assert!("dc-b-local".parse::<StrategyLabel>().is_err());
    }

    #[test]
    fn specs() {
        let l: StrategyLabel = "dcp-a-fs".parse().unwrap();
        let spec = l.game_spec(10.0).unwrap().unwrap();
        assert!(spec.power_correction() && spec.info() == InfoModel::Local);
        assert_eq!(spec.capacity().kind(), CapacityKind::Discrete);
        let p: StrategyLabel = "cc-noa-potential".parse().unwrap();
        let spec = p.game_spec(10.0).unwrap().unwrap();
        assert!(spec.info().is_potential() && !spec.capacity().enforces_threshold());
        assert!("ga-bc".parse::<StrategyLabel>().unwrap().game_spec(10.0).unwrap().is_none());
    }

    #[test]
    fn serde_as_string() {
        let l: StrategyLabel = "ga-dc".parse().unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), "\"ga-dc\"");
        assert_eq!(serde_json::from_str::<StrategyLabel>("\"GA-DC\"").unwrap(), l);
    }
}
