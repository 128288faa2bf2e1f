use serde::{Deserialize, Serialize};

use super::{order_from_f64, Observation, OrderPolicy, PolicyDecision, PolicyError};

/// Fixed ordering rules used as fixtures and as stub-model behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ScriptRule {
    Constant { k: u32 },
    MatchDemand,
    /// `incoming + alpha * max(target - inventory, 0) - beta * supply_line`,
    /// floored at zero. With `beta < alpha` the supply line is underweighted.
    Panic { alpha: f64, beta: f64, target: i64 },
}

impl ScriptRule {
    pub fn id(&self) -> String {
        match *self {
            ScriptRule::Constant { k } => format!("constant({k})"),
            ScriptRule::MatchDemand => "match_demand".to_string(),
            ScriptRule::Panic { alpha, beta, target } => format!("panic({alpha},{beta},{target})"),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ScriptRule::Panic { alpha, beta, .. } => {
                if !(alpha.is_finite() && alpha >= 0.0 && beta.is_finite() && beta >= 0.0) {
                    return Err("panic rule parameters must be finite and non-negative".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

pub fn scripted_decide(obs: &Observation, rule: &ScriptRule) -> Result<PolicyDecision, PolicyError> {
    let order = match *rule {
        ScriptRule::Constant { k } => k,
        ScriptRule::MatchDemand => obs.incoming_demand,
        ScriptRule::Panic { alpha, beta, target } => {
            let gap = (target - obs.own_inventory).max(0) as f64;
            let raw = obs.incoming_demand as f64 + alpha * gap - beta * obs.supply_line as f64;
            order_from_f64(raw.max(0.0))?
        }
    };
    Ok(PolicyDecision::new(order))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedPolicy {
    pub rule: ScriptRule,
}

impl ScriptedPolicy {
    pub fn new(rule: ScriptRule) -> Self {
        Self { rule }
    }
}

impl OrderPolicy for ScriptedPolicy {
    fn id(&self) -> String {
        self.rule.id()
    }

    fn decide(&mut self, obs: &Observation) -> Result<PolicyDecision, PolicyError> {
        scripted_decide(obs, &self.rule)
    }
}
