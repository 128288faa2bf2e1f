//! Ordering policies behind one decision interface.

mod observation;
mod replay;
mod scripted;
mod tracking;

pub use observation::{Observation, SharedView, StageHistory};
pub use replay::{replay_decide, ReplayPolicy};
pub use scripted::{scripted_decide, ScriptRule, ScriptedPolicy};
pub use tracking::{tracking_demand_decide, TrackingDemand};

use serde::{Deserialize, Serialize};

use crate::stage::Stage;

/// An order for the current period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

impl PolicyDecision {
    pub fn new(order: u32) -> Self {
        Self { order, rationale: None }
    }

    pub fn with_rationale(order: u32, rationale: impl Into<String>) -> Self {
        Self { order, rationale: Some(rationale.into()) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("order {value} is not a non-negative integer")]
    InvalidOrder { value: String },
    #[error("replay transcript for {stage} has no decision for period {period}")]
    ReplayGap { stage: Stage, period: u32 },
    #[error("agent failed after {attempts} attempt(s): {reason}")]
    AgentFailure { attempts: u32, reason: String },
    #[error("observation rejected: {0}")]
    Observation(String),
}

/// Source of one stage's orders.
pub trait OrderPolicy: Send {
    /// Stable identifier recorded in trace headers.
    fn id(&self) -> String;

    fn decide(&mut self, obs: &Observation) -> Result<PolicyDecision, PolicyError>;

    /// Prompt/completion record, for policies that keep one.
    fn transcript(&self) -> Option<&crate::llm::AgentTranscript> {
        None
    }
}

impl<P: OrderPolicy + ?Sized> OrderPolicy for Box<P> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn decide(&mut self, obs: &Observation) -> Result<PolicyDecision, PolicyError> {
        (**self).decide(obs)
    }

    fn transcript(&self) -> Option<&crate::llm::AgentTranscript> {
        (**self).transcript()
    }
}

/// Rounds half away from zero and converts to an order, rejecting negatives
/// and non-finite values.
pub(crate) fn order_from_f64(value: f64) -> Result<u32, PolicyError> {
    let rounded = value.round();
    if !rounded.is_finite() || rounded < 0.0 || rounded > u32::MAX as f64 {
        return Err(PolicyError::InvalidOrder { value: value.to_string() });
    }
    Ok(rounded as u32)
}
