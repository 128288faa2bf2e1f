use serde::{Deserialize, Serialize};

use crate::money::Money;
use crate::rng::period_stream;
use crate::stage::{Stage, NUM_STAGES};

/// Retail demand distribution. Only a discrete uniform law is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandLaw {
    Uniform { min: u32, max: u32 },
}

impl Default for DemandLaw {
    fn default() -> Self {
        DemandLaw::Uniform { min: 0, max: 8 }
    }
}

impl DemandLaw {
    /// Draw for `(seed, period)`; see [`crate::rng`] for the derivation.
    pub fn draw(&self, seed: u64, period: u32) -> u32 {
        match *self {
            DemandLaw::Uniform { min, max } => {
                min + period_stream(seed, period).next_below((max - min) as u64 + 1) as u32
            }
        }
    }

    pub fn support(&self) -> std::ops::RangeInclusive<u32> {
        match *self {
            DemandLaw::Uniform { min, max } => min..=max,
        }
    }

    pub fn mean(&self) -> Money {
        match *self {
            DemandLaw::Uniform { min, max } => Money::new(min as i64 + max as i64, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("game.{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

/// Every environment constant of a game.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub horizon: u32,
    pub num_stages: usize,
    pub ship_delay: usize,
    pub order_delay: usize,
    pub production_delay: usize,
    pub holding_cost: Money,
    pub backlog_cost: Money,
    pub initial_inventory: i64,
    pub stage_capacity: u32,
    pub pipeline_prefill: u32,
    pub demand_law: DemandLaw,
    pub order_cap_enabled: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            num_stages: NUM_STAGES,
            ship_delay: 2,
            order_delay: 2,
            production_delay: 3,
            holding_cost: Money::new(1, 2),
            backlog_cost: Money::from_integer(1),
            initial_inventory: 12,
            stage_capacity: 20,
            pipeline_prefill: 4,
            demand_law: DemandLaw::default(),
            order_cap_enabled: false,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon < 1 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if self.num_stages != NUM_STAGES {
            return Err(invalid("num_stages", format!("must be {NUM_STAGES}")));
        }
        for (field, value) in [
            ("ship_delay", self.ship_delay),
            ("order_delay", self.order_delay),
            ("production_delay", self.production_delay),
        ] {
            if value < 1 {
                return Err(invalid(field, "delays must be at least 1"));
            }
        }
        if self.holding_cost.is_negative() {
            return Err(invalid("holding_cost", "must be non-negative"));
        }
        if self.backlog_cost.is_negative() {
            return Err(invalid("backlog_cost", "must be non-negative"));
        }
        if self.initial_inventory < 0 {
            return Err(invalid("initial_inventory", "must be non-negative"));
        }
        match self.demand_law {
            DemandLaw::Uniform { min, max } if min > max => {
                Err(invalid("demand_law", "min exceeds max"))
            }
            _ => Ok(()),
        }
    }

    /// Periods between an upstream shipment (or a production start) and its arrival.
    pub fn inbound_delay(&self, stage: Stage) -> usize {
        match stage {
            Stage::Manufacturer => self.production_delay,
            _ => self.ship_delay,
        }
    }

    /// Length of the line carrying this stage's orders to its supplier.
    /// The manufacturer's orders feed its production line instead.
    pub fn outbound_delay(&self, stage: Stage) -> usize {
        match stage {
            Stage::Manufacturer => 0,
            _ => self.order_delay,
        }
    }

    /// Replenishment lead time seen by a stage: its inbound delay.
    pub fn lead_time(&self, stage: Stage) -> usize {
        self.inbound_delay(stage)
    }

    /// Longest inbound delay in the chain.
    pub fn max_lead_time(&self) -> usize {
        Stage::ALL.iter().map(|&s| self.lead_time(s)).max().unwrap_or(1)
    }

    /// Cost of ending a period at `inventory` (negative = backlog).
    pub fn period_cost(&self, inventory: i64) -> Money {
        self.holding_cost.times(inventory.max(0)) - self.backlog_cost.times(inventory.min(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = GameConfig::default();
        c.validate().unwrap();
        assert_eq!(c.max_lead_time(), 3);
        assert_eq!(c.period_cost(12), Money::from_integer(6));
        assert_eq!(c.period_cost(-8), Money::from_integer(8));
        assert_eq!(c.period_cost(0), Money::ZERO);
    }

    #[test]
    fn rejects_bad_fields() {
        let c = GameConfig { horizon: 0, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::Invalid { field: "horizon", .. })));
        let c = GameConfig { order_delay: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = GameConfig { holding_cost: Money::new(-1, 2), ..Default::default() };
        assert!(c.validate().is_err());
        let c = GameConfig { num_stages: 5, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_law_matches_demand_generator() {
        let law = DemandLaw::default();
        for t in 1..50 {
            assert_eq!(law.draw(99, t), crate::rng::draw_demand(99, t));
        }
    }
}
