//! One-period transition of the four-stage chain.
//!
//! Per stage, in order:
//! 1. the front of the inbound line arrives (for the manufacturer this is
//!    its own order from `production_delay` periods ago);
//! 2. incoming demand is the external demand for the retailer and the
//!    downstream order from `order_delay` periods ago otherwise;
//! 3. the shipment is `min(incoming, max(I_{t-1} + arrival, 0), capacity)`;
//! 4. `I_t = I_{t-1} + arrival - incoming` (negative means backlog);
//! 5. shipments and this period's orders enter their delay lines;
//! 6. the period cost `h * max(I_t, 0) - s * min(I_t, 0)` accrues.
//!
//! Backlogged units are carried only in the inventory ledger; they are not
//! re-shipped later, so units are not conserved across stages.

use serde::{Deserialize, Serialize};

use super::config::GameConfig;
use super::delay::DelayLine;
use crate::money::Money;
use crate::stage::{Stage, NUM_STAGES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructuralError {
    #[error("{stage} {line} delay line has length {actual}, expected {expected}")]
    DelayLineLength {
        stage: Stage,
        line: &'static str,
        expected: usize,
        actual: usize,
    },
}

/// Ledger of one stage between periods.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageState {
    /// Signed net stock; negative values are backlog.
    pub inventory: i64,
    /// Shipments (or production, for the manufacturer) in transit to this stage.
    pub inbound: DelayLine,
    /// Orders placed by this stage that its supplier has not seen yet.
    pub outbound_orders: DelayLine,
    pub cumulative_cost: Money,
}

impl StageState {
    pub fn backlog(&self) -> u64 {
        (-self.inventory).max(0) as u64
    }

    pub fn on_hand(&self) -> u64 {
        self.inventory.max(0) as u64
    }

    /// Units ordered and not yet received.
    pub fn supply_line(&self) -> u64 {
        self.inbound.total() + self.outbound_orders.total()
    }
}

/// Full between-period state of the chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainState {
    pub stages: [StageState; NUM_STAGES],
}

impl ChainState {
    /// Opening state: every stage at `initial_inventory`, every delay slot at `pipeline_prefill`.
    pub fn initial(config: &GameConfig) -> Self {
        let stages = Stage::ALL.map(|s| StageState {
            inventory: config.initial_inventory,
            inbound: DelayLine::filled(config.inbound_delay(s), config.pipeline_prefill),
            outbound_orders: DelayLine::filled(config.outbound_delay(s), config.pipeline_prefill),
            cumulative_cost: Money::ZERO,
        });
        Self { stages }
    }

    pub fn stage(&self, stage: Stage) -> &StageState {
        &self.stages[stage.index()]
    }

    /// Demand each stage faces this period, given the external demand.
    pub fn incoming_demand(&self, stage: Stage, external_demand: u32) -> u32 {
        match stage.downstream() {
            None => external_demand,
            Some(down) => self.stage(down).outbound_orders.front(),
        }
    }

    pub fn arriving(&self, stage: Stage) -> u32 {
        self.stage(stage).inbound.front()
    }

    pub fn check_structure(&self, config: &GameConfig) -> Result<(), StructuralError> {
        for s in Stage::ALL {
            let st = self.stage(s);
            for (line, expected, actual) in [
                ("inbound", config.inbound_delay(s), st.inbound.len()),
                ("outbound order", config.outbound_delay(s), st.outbound_orders.len()),
            ] {
                if expected != actual {
                    return Err(StructuralError::DelayLineLength { stage: s, line, expected, actual });
                }
            }
        }
        Ok(())
    }
}

/// Everything that happened in one period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: u32,
    /// External demand faced by the retailer.
    pub demand: u32,
    pub orders: [u32; NUM_STAGES],
    pub incoming_demand: [u32; NUM_STAGES],
    pub arrivals: [u32; NUM_STAGES],
    pub shipments: [u32; NUM_STAGES],
    pub inventory_start: [i64; NUM_STAGES],
    pub inventory_end: [i64; NUM_STAGES],
    /// Supply line at decision time, before this period's arrivals.
    pub supply_line: [u64; NUM_STAGES],
    pub period_cost: [Money; NUM_STAGES],
}

/// Quantity shipped downstream.
///
/// `capacity` of `None` means unbounded. For the manufacturer, `arriving_units`
/// is its own production arriving this period.
pub fn compute_shipment(
    incoming_demand: u32,
    prior_inventory: i64,
    arriving_units: u32,
    capacity: Option<u32>,
) -> u32 {
    let available = (prior_inventory + arriving_units as i64).max(0);
    let shipped = (incoming_demand as i64).min(available) as u32;
    match capacity {
        Some(cap) => shipped.min(cap),
        None => shipped,
    }
}

/// Advances the chain by one period.
///
/// `period` is only recorded; `orders` are the (already validated) order
/// quantities of the four stages, decided on the state passed in.
pub fn advance_period(
    state: &ChainState,
    orders: [u32; NUM_STAGES],
    demand: u32,
    period: u32,
    config: &GameConfig,
) -> Result<(ChainState, PeriodRecord), StructuralError> {
    state.check_structure(config)?;

    let incoming = Stage::ALL.map(|s| state.incoming_demand(s, demand));
    let arrivals = Stage::ALL.map(|s| state.arriving(s));
    let inventory_start = Stage::ALL.map(|s| state.stage(s).inventory);
    let supply_line = Stage::ALL.map(|s| state.stage(s).supply_line());

    let mut shipments = [0u32; NUM_STAGES];
    let mut inventory_end = [0i64; NUM_STAGES];
    let mut period_cost = [Money::ZERO; NUM_STAGES];
    for i in 0..NUM_STAGES {
        shipments[i] = compute_shipment(
            incoming[i],
            inventory_start[i],
            arrivals[i],
            Some(config.stage_capacity),
        );
        inventory_end[i] = inventory_start[i] + arrivals[i] as i64 - incoming[i] as i64;
        period_cost[i] = config.period_cost(inventory_end[i]);
    }

    let mut next = state.clone();
    for s in Stage::ALL {
        let i = s.index();
        let st = &mut next.stages[i];
        let inbound_value = match s.upstream() {
            Some(up) => shipments[up.index()],
            None => orders[i],
        };
        st.inbound.shift(inbound_value);
        st.outbound_orders.shift(orders[i]);
        st.inventory = inventory_end[i];
        st.cumulative_cost += period_cost[i];
    }

    let record = PeriodRecord {
        period,
        demand,
        orders,
        incoming_demand: incoming,
        arrivals,
        shipments,
        inventory_start,
        inventory_end,
        supply_line,
        period_cost,
    };
    Ok((next, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GameConfig {
        GameConfig::default()
    }

    #[test]
    fn shipment_examples() {
        assert_eq!(compute_shipment(4, 12, 4, Some(20)), 4);
        assert_eq!(compute_shipment(5, -3, 2, Some(20)), 0);
        assert_eq!(compute_shipment(25, 30, 0, Some(20)), 20);
        assert_eq!(compute_shipment(25, 30, 0, None), 25);
        assert_eq!(compute_shipment(9, 3, 2, None), 5);
    }

    #[test]
    fn steady_state_period() {
        let c = cfg();
        let s0 = ChainState::initial(&c);
        let (s1, rec) = advance_period(&s0, [4; 4], 4, 1, &c).unwrap();
        assert_eq!(rec.shipments, [4; 4]);
        assert_eq!(rec.inventory_end, [12; 4]);
        assert_eq!(rec.period_cost, [Money::from_integer(6); 4]);
        assert_eq!(rec.supply_line, [16, 16, 16, 12]);
        assert_eq!(s1, {
            let mut s = s0.clone();
            for st in &mut s.stages {
                st.cumulative_cost = Money::from_integer(6);
            }
            s
        });
    }

    #[test]
    fn pure_backlog_case() {
        let c = cfg();
        let mut s0 = ChainState::initial(&c);
        s0.stages[0].inventory = 0;
        s0.stages[0].inbound = DelayLine::filled(2, 0);
        let (_, rec) = advance_period(&s0, [0; 4], 8, 1, &c).unwrap();
        assert_eq!(rec.shipments[0], 0);
        assert_eq!(rec.inventory_end[0], -8);
        assert_eq!(rec.period_cost[0], Money::from_integer(8));
    }

    #[test]
    fn zero_world_drains_pipelines_then_freezes() {
        // Hand trace, zero demand and zero orders from the steady start.
        // Each stage receives its prefilled inbound slots, then its supplier's
        // shipments against the prefilled orders, then nothing:
        //   t:             1   2   3   4   5   6
        //   retailer      16  20  24  28  28  28
        //   wholesaler    12  12  16  20  20  20   (ships 4, 4 first)
        //   distributor   12  12  16  20  20  20
        //   manufacturer  12  12  16  16  16  16   (three production slots)
        let c = cfg();
        let mut s = ChainState::initial(&c);
        let mut inv = Vec::new();
        let mut costs = Vec::new();
        for t in 1..=6 {
            let (n, rec) = advance_period(&s, [0; 4], 0, t, &c).unwrap();
            inv.push(rec.inventory_end);
            costs.push(rec.period_cost);
            s = n;
        }
        assert_eq!(
            inv,
            vec![
                [16, 12, 12, 12],
                [20, 12, 12, 12],
                [24, 16, 16, 16],
                [28, 20, 20, 16],
                [28, 20, 20, 16],
                [28, 20, 20, 16],
            ]
        );
        assert_eq!(costs[5][0], Money::from_integer(14));
        assert_eq!(costs[5][3], Money::from_integer(8));
    }

    #[test]
    fn corrupted_line_is_structural_error() {
        let c = cfg();
        let mut s = ChainState::initial(&c);
        s.stages[2].inbound = DelayLine::filled(5, 0);
        let err = advance_period(&s, [0; 4], 0, 1, &c).unwrap_err();
        assert!(matches!(err, StructuralError::DelayLineLength { stage: Stage::Distributor, .. }));
    }
}
