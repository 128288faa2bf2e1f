//! Frozen agent prompts.
//!
//! The system message is fixed per information regime. The per-round
//! process message is assembled from template slots; under the isolated
//! regime no slot refers to another stage, so other stages' state cannot
//! reach the text.

use serde::{Deserialize, Serialize};

use crate::money::Money;
use crate::policy::Observation;
use crate::sim::GameConfig;
use crate::stage::{InfoRegime, Stage, NUM_STAGES};

pub const SYSTEM_PROMPT_ISOLATED: &str = "You have NO VISIBILITY into the inventory or backlog levels at other stages of the supply chain. You must make decisions solely based on your own local state (demand, inventory, backlog, and arriving deliveries).";

pub const SYSTEM_PROMPT_SHARED: &str = "IMPORTANT NOTE: You have FULL VISIBILITY of the inventory and backlog levels across ALL stages -- retailer, wholesaler, distributor, and manufacturer. Please use this shared information to make globally optimal decisions.";

const ISOLATED_NOTE: &str = "You have no visibility into the inventory or backlog levels at other stages. Please make your decision solely based on your own current state and local information.";

const SHARED_NOTE: &str = "IMPORTANT NOTE: You have FULL VISIBILITY of the inventory and backlog levels across ALL stages. Please thoroughly review this information before making your decision.";

/// Number of past incoming demands listed in the state description.
pub const DEMAND_MEMORY: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("observation inconsistent with its regime: {0}")]
    Inconsistent(String),
}

/// Game constants the process message needs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptContext {
    pub num_stages: usize,
    pub holding_cost: Money,
    pub backlog_cost: Money,
    /// Per stage, how many of its own recent orders are listed.
    pub order_memory: [usize; NUM_STAGES],
}

impl PromptContext {
    pub fn from_config(config: &GameConfig) -> Self {
        Self {
            num_stages: config.num_stages,
            holding_cost: config.holding_cost,
            backlog_cost: config.backlog_cost,
            order_memory: Stage::ALL.map(|s| config.lead_time(s)),
        }
    }
}

pub fn build_system_prompt(regime: InfoRegime) -> &'static str {
    match regime {
        InfoRegime::Isolated => SYSTEM_PROMPT_ISOLATED,
        InfoRegime::Shared => SYSTEM_PROMPT_SHARED,
    }
}

fn list(values: &[u32]) -> String {
    if values.is_empty() {
        "none".to_string()
    } else {
        values.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
    }
}

fn tail(values: &[u32], n: usize) -> &[u32] {
    &values[values.len().saturating_sub(n)..]
}

/// Labelled block describing the agent's own state, one item per line.
pub fn state_description(obs: &Observation, ctx: &PromptContext) -> String {
    let memory = ctx.order_memory[obs.stage.index()];
    [
        format!("- Inventory on hand: {}", obs.own_on_hand()),
        format!("- Backlog: {}", obs.own_backlog),
        format!("- Arriving delivery this round: {}", obs.arriving_now),
        format!(
            "- Your orders placed in the last {memory} rounds: {}",
            list(tail(&obs.history.orders, memory))
        ),
        format!("- Supply line (ordered, not yet received): {}", obs.supply_line),
        format!(
            "- Incoming demand in the last {DEMAND_MEMORY} rounds: {}",
            list(tail(&obs.history.incoming_demand, DEMAND_MEMORY))
        ),
    ]
    .join("\n")
}

fn four_way(values: [u64; NUM_STAGES]) -> String {
    format!("{}, {}, {}, and {}", values[0], values[1], values[2], values[3])
}

/// Per-round user message.
pub fn build_process_prompt(obs: &Observation, ctx: &PromptContext) -> Result<String, PromptError> {
    obs.check().map_err(PromptError::Inconsistent)?;
    let stage = obs.stage;
    let mut parts: Vec<String> = Vec::with_capacity(7);
    parts.push(format!(
        "Now this is round {}, and you are at stage {} of {} in the supply chain.",
        obs.period,
        stage.number(),
        ctx.num_stages
    ));
    match (&obs.regime, &obs.shared_view) {
        (InfoRegime::Isolated, _) => parts.push(ISOLATED_NOTE.to_string()),
        (InfoRegime::Shared, Some(view)) => {
            parts.push(SHARED_NOTE.to_string());
            parts.push(format!(
                "The inventory levels of retailer, wholesaler, distributor, and manufacturer are {} respectively.",
                four_way(view.on_hand())
            ));
            parts.push(format!(
                "The current backlog levels of retailer, wholesaler, distributor, and manufacturer are: {} respectively.",
                four_way(view.backlog())
            ));
        }
        (InfoRegime::Shared, None) => {
            return Err(PromptError::Inconsistent("shared regime without shared view".into()))
        }
    }
    if stage == Stage::Retailer {
        parts.push(format!("The demand at the retailer (stage 1) is {}.", obs.incoming_demand));
    }
    parts.push(format!("Given your current state:\n{}", state_description(obs, ctx)));
    if stage != Stage::Retailer {
        parts.push(format!(
            "Your downstream order from stage {} for this round is {}.",
            stage.index(),
            obs.incoming_demand
        ));
    }
    parts.push(format!(
        "What is your action (order quantity) for this round? Your aim is to minimize the cost, where one unit of backlog costs {} and one unit of inventory costs {}. Please provide your action as a non-negative integer within brackets at the end of your response (e.g., [0]).",
        ctx.backlog_cost.to_float_literal(),
        ctx.holding_cost.to_float_literal()
    ));
    Ok(parts.join("\n\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{SharedView, StageHistory};

    fn obs(stage: Stage, regime: InfoRegime) -> Observation {
        Observation {
            period: 1,
            stage,
            regime,
            own_inventory: 12,
            own_backlog: 0,
            arriving_now: 4,
            incoming_demand: 6,
            supply_line: 8,
            in_transit: vec![4, 4],
            orders_in_flight: vec![],
            history: StageHistory::default(),
            shared_view: (regime == InfoRegime::Shared).then_some(SharedView { inventory: [12; 4] }),
        }
    }

    #[test]
    fn system_prompts_differ() {
        assert!(build_system_prompt(InfoRegime::Isolated).contains("solely based on your own local state"));
        assert!(build_system_prompt(InfoRegime::Shared).contains("make globally optimal decisions"));
        assert_ne!(build_system_prompt(InfoRegime::Isolated), build_system_prompt(InfoRegime::Shared));
    }

    #[test]
    fn slots_filled() {
        let ctx = PromptContext::from_config(&GameConfig::default());
        let p = build_process_prompt(&obs(Stage::Retailer, InfoRegime::Shared), &ctx).unwrap();
        assert!(p.contains("12, 12, 12, and 12 respectively"));
        assert!(p.contains("The demand at the retailer (stage 1) is 6"));
        assert!(!p.contains("downstream order"));
        let mut o = obs(Stage::Distributor, InfoRegime::Isolated);
        o.incoming_demand = 9;
        let p = build_process_prompt(&o, &ctx).unwrap();
        assert!(p.contains("Your downstream order from stage 2 for this round is 9."));
        assert!(!p.contains("demand at the retailer"));
        assert!(p.ends_with("within brackets at the end of your response (e.g., [0])."));
    }

    #[test]
    fn inconsistent_observation_rejected() {
        let ctx = PromptContext::from_config(&GameConfig::default());
        let mut o = obs(Stage::Retailer, InfoRegime::Isolated);
        o.shared_view = Some(SharedView { inventory: [12; 4] });
        assert!(build_process_prompt(&o, &ctx).is_err());
        let mut o = obs(Stage::Retailer, InfoRegime::Shared);
        o.shared_view = None;
        assert!(build_process_prompt(&o, &ctx).is_err());
    }
}
