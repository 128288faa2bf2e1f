use serde::{Deserialize, Serialize};

use crate::stage::{InfoRegime, Stage, NUM_STAGES};

/// Own past quantities of one stage, oldest first, periods `1..t-1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageHistory {
    pub orders: Vec<u32>,
    pub incoming_demand: Vec<u32>,
    pub arrivals: Vec<u32>,
    /// Shipments this stage sent to its customer.
    pub shipments: Vec<u32>,
}

/// Chain-wide view granted under information sharing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharedView {
    /// Signed net stock of every stage, retailer first.
    pub inventory: [i64; NUM_STAGES],
}

impl SharedView {
    pub fn on_hand(&self) -> [u64; NUM_STAGES] {
        self.inventory.map(|i| i.max(0) as u64)
    }

    pub fn backlog(&self) -> [u64; NUM_STAGES] {
        self.inventory.map(|i| (-i).max(0) as u64)
    }
}

/// What one agent sees before deciding its order for `period`.
///
/// `incoming_demand` is the external demand for the retailer and the
/// delayed downstream order for every other stage; no other stage ever sees
/// the external demand.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub period: u32,
    pub stage: Stage,
    pub regime: InfoRegime,
    /// Net stock at the end of the previous period.
    pub own_inventory: i64,
    pub own_backlog: u64,
    pub arriving_now: u32,
    pub incoming_demand: u32,
    /// Units ordered and not yet received (orders in flight plus shipments in transit).
    pub supply_line: u64,
    /// Inbound slots, front (arriving now) first.
    pub in_transit: Vec<u32>,
    /// Own orders not yet seen by the supplier, oldest first.
    pub orders_in_flight: Vec<u32>,
    pub history: StageHistory,
    pub shared_view: Option<SharedView>,
}

impl Observation {
    pub fn own_on_hand(&self) -> u64 {
        self.own_inventory.max(0) as u64
    }

    pub fn in_transit_total(&self) -> u64 {
        self.in_transit.iter().map(|&v| v as u64).sum()
    }

    /// Checks the regime/visibility invariants.
    pub fn check(&self) -> Result<(), String> {
        match (self.regime, &self.shared_view) {
            (InfoRegime::Isolated, Some(_)) => {
                return Err("isolated observation carries a shared view".into())
            }
            (InfoRegime::Shared, None) => {
                return Err("shared observation lacks the shared view".into())
            }
            _ => {}
        }
        if self.own_backlog != (-self.own_inventory).max(0) as u64 {
            return Err("backlog disagrees with inventory".into());
        }
        if let Some(view) = &self.shared_view {
            if view.inventory[self.stage.index()] != self.own_inventory {
                return Err("shared view disagrees with own inventory".into());
            }
        }
        Ok(())
    }
}
