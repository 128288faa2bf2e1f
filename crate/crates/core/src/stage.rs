use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of echelons in the chain.
pub const NUM_STAGES: usize = 4;

/// One echelon, retailer first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Retailer,
    Wholesaler,
    Distributor,
    Manufacturer,
}

impl Stage {
    pub const ALL: [Stage; NUM_STAGES] = [
        Stage::Retailer,
        Stage::Wholesaler,
        Stage::Distributor,
        Stage::Manufacturer,
    ];

    /// Zero-based position.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based position (S1..S4).
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_index(index: usize) -> Option<Stage> {
        Self::ALL.get(index).copied()
    }

    pub fn from_number(number: usize) -> Option<Stage> {
        number.checked_sub(1).and_then(Self::from_index)
    }

    pub fn downstream(self) -> Option<Stage> {
        self.index().checked_sub(1).and_then(Self::from_index)
    }

    pub fn upstream(self) -> Option<Stage> {
        Self::from_index(self.index() + 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Retailer => "retailer",
            Stage::Wholesaler => "wholesaler",
            Stage::Distributor => "distributor",
            Stage::Manufacturer => "manufacturer",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.number())
    }
}

/// What each agent is allowed to see about the rest of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoRegime {
    Isolated,
    Shared,
}

impl InfoRegime {
    pub const ALL: [InfoRegime; 2] = [InfoRegime::Isolated, InfoRegime::Shared];

    pub fn as_str(self) -> &'static str {
        match self {
            InfoRegime::Isolated => "isolated",
            InfoRegime::Shared => "shared",
        }
    }

    /// Column label used in comparison tables.
    pub fn table_label(self) -> &'static str {
        match self {
            InfoRegime::Isolated => "W/O IS",
            InfoRegime::Shared => "W/ IS",
        }
    }
}

impl fmt::Display for InfoRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfoRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isolated" => Ok(InfoRegime::Isolated),
            "shared" => Ok(InfoRegime::Shared),
            other => Err(format!("unknown information regime `{other}` (expected isolated or shared)")),
        }
    }
}
