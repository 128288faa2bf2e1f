//! Demand-tracking heuristic.
//!
//! ```text
//! S_bar = mean of the last L_max shipments sent to the customer
//! I*    = S_bar * L + B_own
//! O*    = I* - on_hand - B_supplier - in_transit
//! order = round(min(max(0, O*), capacity))
//! ```
//!
//! `B_supplier` is the backlog of the upstream neighbour, i.e. units it owes
//! this stage. It is only observable under information sharing and is taken
//! as zero otherwise. With fewer than `L_max` shipments on record the mean
//! is over what exists; with none it falls back to `cold_start_mean`.
//! Rounding is half away from zero, after the clamp.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use super::{Observation, OrderPolicy, PolicyDecision, PolicyError};
use crate::money::Money;
use crate::sim::GameConfig;
use crate::stage::Stage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackingDemand {
    pub lead_time: usize,
    pub max_lead: usize,
    pub capacity: u32,
    pub cold_start_mean: Money,
}

impl TrackingDemand {
    pub fn for_stage(config: &GameConfig, stage: Stage) -> Self {
        Self {
            lead_time: config.lead_time(stage),
            max_lead: config.max_lead_time(),
            capacity: config.stage_capacity,
            cold_start_mean: Money::from_integer(config.pipeline_prefill as i64),
        }
    }
}

impl OrderPolicy for TrackingDemand {
    fn id(&self) -> String {
        format!(
            "tracking_demand(L={},Lmax={},c={})",
            self.lead_time, self.max_lead, self.capacity
        )
    }

    fn decide(&mut self, obs: &Observation) -> Result<PolicyDecision, PolicyError> {
        Ok(tracking_demand_decide(
            obs,
            self.lead_time,
            self.max_lead,
            self.capacity,
            self.cold_start_mean,
        ))
    }
}

pub fn tracking_demand_decide(
    obs: &Observation,
    lead_time: usize,
    max_lead: usize,
    capacity: u32,
    cold_start_mean: Money,
) -> PolicyDecision {
    let shipments = &obs.history.shipments;
    let window = &shipments[shipments.len().saturating_sub(max_lead.max(1))..];
    let mean_shipment: Ratio<i64> = if window.is_empty() {
        cold_start_mean.ratio()
    } else {
        let sum: i64 = window.iter().map(|&s| s as i64).sum();
        Ratio::new(sum, window.len() as i64)
    };

    let own_backlog = obs.own_backlog as i64;
    let target = mean_shipment * Ratio::from_integer(lead_time as i64) + Ratio::from_integer(own_backlog);

    let supplier_backlog = obs
        .stage
        .upstream()
        .and_then(|up| obs.shared_view.as_ref().map(|v| v.backlog()[up.index()]))
        .unwrap_or(0) as i64;
    let unconstrained = target
        - Ratio::from_integer(obs.own_on_hand() as i64)
        - Ratio::from_integer(supplier_backlog)
        - Ratio::from_integer(obs.in_transit_total() as i64);

    let clamped = if unconstrained < Ratio::zero() {
        Ratio::zero()
    } else {
        unconstrained.min(Ratio::from_integer(capacity as i64))
    };
    let order = clamped.round().to_integer().to_u32().unwrap_or(capacity);

    PolicyDecision::with_rationale(
        order,
        format!(
            "mean_shipment={} target={} unconstrained={}",
            money(mean_shipment),
            money(target),
            money(unconstrained)
        ),
    )
}

fn money(r: Ratio<i64>) -> Money {
    Money::new(*r.numer(), *r.denom())
}
