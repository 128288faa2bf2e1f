use std::sync::Arc;

use super::gateway::{request_decision, ModelProfile};
use super::prompt::{build_process_prompt, build_system_prompt, PromptContext};
use super::transcript::{sha256_hex, AgentTranscript, TranscriptRecord};
use super::transport::ChatTransport;
use crate::policy::{Observation, OrderPolicy, PolicyDecision, PolicyError};
use crate::stage::InfoRegime;

/// A stage played by a chat model. Each round is a fresh two-message
/// conversation: the regime's system message and the round's process message.
pub struct LlmPolicy {
    profile: ModelProfile,
    transport: Arc<dyn ChatTransport>,
    context: PromptContext,
    transcript: AgentTranscript,
}

impl LlmPolicy {
    pub fn new(profile: ModelProfile, transport: Arc<dyn ChatTransport>, context: PromptContext) -> Self {
        Self { profile, transport, context, transcript: AgentTranscript::default() }
    }

    pub fn policy_id(profile: &ModelProfile) -> String {
        format!("llm:{}:{}:{}", profile.family.as_str(), profile.tier.as_str(), profile.model_id)
    }

    fn system_prompt(regime: InfoRegime) -> &'static str {
        build_system_prompt(regime)
    }
}

impl OrderPolicy for LlmPolicy {
    fn id(&self) -> String {
        Self::policy_id(&self.profile)
    }

    fn decide(&mut self, obs: &Observation) -> Result<PolicyDecision, PolicyError> {
        let system = Self::system_prompt(obs.regime);
        let user = build_process_prompt(obs, &self.context).map_err(|e| PolicyError::Observation(e.to_string()))?;
        let outcome = request_decision(&self.profile, self.transport.as_ref(), system, &user)
            .map_err(|f| PolicyError::AgentFailure { attempts: f.attempts, reason: f.last_error })?;
        self.transcript.push(TranscriptRecord {
            period: obs.period,
            stage: obs.stage,
            policy_id: self.id(),
            model_id: self.profile.model_id.clone(),
            system_prompt_sha256: sha256_hex(system),
            user_prompt: user,
            raw_completion: outcome.raw_completion.clone(),
            parsed_order: outcome.order,
            retries_used: outcome.retries_used,
            failed_attempts: outcome.failed_attempts,
            latency_ms: outcome.latency.as_millis() as u64,
        });
        Ok(PolicyDecision::with_rationale(outcome.order, outcome.raw_completion))
    }

    fn transcript(&self) -> Option<&AgentTranscript> {
        Some(&self.transcript)
    }
}
