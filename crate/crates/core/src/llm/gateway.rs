use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::parse::{parse_order, ParseError};
use super::transport::{ChatRequest, ChatTransport, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Shallow,
    Deep,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Shallow => "shallow",
            Tier::Deep => "deep",
        }
    }
}

/// Vendor family label; which vendor sits behind each is configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
        }
    }
}

fn default_temperature() -> f64 {
    1.0
}
fn default_retries() -> u32 {
    3
}
fn default_timeout() -> f64 {
    120.0
}
fn default_backoff() -> u64 {
    500
}
fn default_system_role() -> String {
    "system".to_string()
}

/// How to reach one model.
///
/// `endpoint` may be omitted, in which case it is read from
/// `BEERLAB_ENDPOINT_<FAMILY>_<TIER>` (e.g. `BEERLAB_ENDPOINT_A_DEEP`). The
/// API key is read from `api_key_env`, defaulting to `BEERLAB_API_KEY_<FAMILY>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelProfile {
    pub tier: Tier,
    pub family: Family,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Role name used for the system message (some deployments expect `developer`).
    #[serde(default = "default_system_role")]
    pub system_role: String,
}

impl ModelProfile {
    pub fn new(tier: Tier, family: Family, model_id: impl Into<String>) -> Self {
        Self {
            tier,
            family,
            model_id: model_id.into(),
            endpoint: None,
            api_key_env: None,
            temperature: default_temperature(),
            max_retries: default_retries(),
            timeout_secs: default_timeout(),
            backoff_ms: default_backoff(),
            system_role: default_system_role(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.model_id.trim().is_empty() {
            return Err("model_id must not be empty".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err("temperature must be a non-negative number".into());
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err("timeout_secs must be positive".into());
        }
        Ok(())
    }

    pub fn endpoint_env_var(&self) -> String {
        format!("BEERLAB_ENDPOINT_{}_{}", self.family.as_str(), self.tier.as_str().to_uppercase())
    }

    pub fn key_env_var(&self) -> String {
        self.api_key_env
            .clone()
            .unwrap_or_else(|| format!("BEERLAB_API_KEY_{}", self.family.as_str()))
    }

    pub fn resolve_endpoint(&self) -> Option<String> {
        self.endpoint
            .clone()
            .or_else(|| std::env::var(self.endpoint_env_var()).ok())
            .filter(|e| !e.trim().is_empty())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// Appended to the user message when the previous completion had no usable order.
pub const FORMAT_REMINDER: &str = "Reminder: end your response with your order quantity as a single non-negative integer within brackets, for example [4].";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionOutcome {
    pub raw_completion: String,
    pub order: u32,
    pub retries_used: u32,
    pub failed_attempts: Vec<String>,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no usable order after {attempts} attempt(s); last error: {last_error}")]
pub struct AgentFailure {
    pub attempts: u32,
    pub last_error: String,
    pub failed_attempts: Vec<String>,
}

enum AttemptError {
    Parse(ParseError, String),
    Transport(TransportError),
}

/// Sends the two-message conversation and extracts an order, retrying on
/// malformed completions and transport errors up to `profile.max_retries`
/// times with exponential backoff.
pub fn request_decision(
    profile: &ModelProfile,
    transport: &dyn ChatTransport,
    system: &str,
    user: &str,
) -> Result<DecisionOutcome, AgentFailure> {
    let mut failed = Vec::new();
    let mut latency = Duration::ZERO;
    let mut remind = false;
    let mut last_error = String::new();

    for attempt in 0..=profile.max_retries {
        if attempt > 0 {
            let delay = profile.backoff_ms.saturating_mul(1u64 << (attempt - 1).min(16));
            if delay > 0 {
                std::thread::sleep(Duration::from_millis(delay));
            }
        }
        let user_message = if remind { format!("{user}\n\n{FORMAT_REMINDER}") } else { user.to_string() };
        let request = ChatRequest {
            model: profile.model_id.clone(),
            temperature: profile.temperature,
            system_role: profile.system_role.clone(),
            system: system.to_string(),
            user: user_message,
        };
        let result = transport.complete(&request).map_err(AttemptError::Transport).and_then(|reply| {
            latency += reply.latency;
            match parse_order(&reply.text) {
                Ok(order) => Ok((reply.text, order)),
                Err(e) => Err(AttemptError::Parse(e, reply.text)),
            }
        });
        match result {
            Ok((raw_completion, order)) => {
                return Ok(DecisionOutcome {
                    raw_completion,
                    order,
                    retries_used: attempt,
                    failed_attempts: failed,
                    latency,
                })
            }
            Err(AttemptError::Parse(e, text)) => {
                last_error = e.to_string();
                failed.push(text);
                remind = true;
            }
            Err(AttemptError::Transport(e)) => {
                last_error = e.to_string();
                failed.push(format!("transport error: {e}"));
            }
        }
    }
    Err(AgentFailure { attempts: profile.max_retries + 1, last_error, failed_attempts: failed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::transport::SequenceTransport;

    fn profile(retries: u32) -> ModelProfile {
        ModelProfile { max_retries: retries, backoff_ms: 0, ..ModelProfile::new(Tier::Shallow, Family::A, "stub") }
    }

    #[test]
    fn first_reply_parsed() {
        let t = SequenceTransport::new(["[4]"]);
        let out = request_decision(&profile(2), &t, "s", "u").unwrap();
        assert_eq!(out.order, 4);
        assert_eq!(out.retries_used, 0);
        assert_eq!(t.calls(), 1);
    }

    #[test]
    fn retry_after_malformed_reply_appends_reminder() {
        let t = SequenceTransport::new(["no idea", "[2]"]);
        let out = request_decision(&profile(1), &t, "s", "u").unwrap();
        assert_eq!((out.order, out.retries_used), (2, 1));
        assert_eq!(out.raw_completion, "[2]");
        assert_eq!(out.failed_attempts, vec!["no idea".to_string()]);
        let seen = t.requests();
        assert_eq!(seen[0].user, "u");
        assert!(seen[1].user.starts_with("u\n\n") && seen[1].user.ends_with(FORMAT_REMINDER));
        assert_eq!(seen[1].system, "s");
    }

    #[test]
    fn exhaustion_after_all_attempts() {
        let t = SequenceTransport::new(["bad", "worse", "[x]", "[9]"]);
        let err = request_decision(&profile(2), &t, "s", "u").unwrap_err();
        assert_eq!(err.attempts, 3);
        assert_eq!(t.calls(), 3);
        assert_eq!(err.failed_attempts.len(), 3);
    }

    #[test]
    fn transport_errors_are_retried() {
        let t = SequenceTransport::with_replies(vec![Err(TransportError::Timeout), Ok("[5]".to_string())]);
        let out = request_decision(&profile(1), &t, "s", "u").unwrap();
        assert_eq!(out.order, 5);
        assert_eq!(out.retries_used, 1);
        // no reminder after a transport failure
        assert_eq!(t.requests()[1].user, "u");
    }

    #[test]
    fn profile_env_names() {
        let p = ModelProfile::new(Tier::Deep, Family::B, "x");
        assert_eq!(p.endpoint_env_var(), "BEERLAB_ENDPOINT_B_DEEP");
        assert_eq!(p.key_env_var(), "BEERLAB_API_KEY_B");
        assert_eq!(p.temperature, 1.0);
    }
}
