use super::{Observation, OrderPolicy, PolicyDecision, PolicyError};
use crate::llm::{build_process_prompt, AgentTranscript, PromptContext};
use crate::stage::Stage;

/// Recorded order for `period`, without contacting any model.
pub fn replay_decide(transcript: &AgentTranscript, stage: Stage, period: u32) -> Result<PolicyDecision, PolicyError> {
    transcript
        .record(period)
        .map(|r| PolicyDecision::with_rationale(r.parsed_order, r.raw_completion.clone()))
        .ok_or(PolicyError::ReplayGap { stage, period })
}

/// Plays back a recorded transcript.
///
/// With a prompt context attached, every period's prompt is re-rendered from
/// the live observation and compared with the recorded one; a mismatch means
/// the replayed game diverged from the recorded game.
#[derive(Debug, Clone)]
pub struct ReplayPolicy {
    stage: Stage,
    policy_id: String,
    recorded: AgentTranscript,
    played: AgentTranscript,
    prompt_check: Option<PromptContext>,
}

impl ReplayPolicy {
    pub fn new(stage: Stage, recorded: AgentTranscript) -> Self {
        let policy_id = recorded
            .records
            .first()
            .map(|r| r.policy_id.clone())
            .unwrap_or_else(|| "replay".to_string());
        Self { stage, policy_id, recorded, played: AgentTranscript::default(), prompt_check: None }
    }

    pub fn with_prompt_check(mut self, ctx: PromptContext) -> Self {
        self.prompt_check = Some(ctx);
        self
    }
}

impl OrderPolicy for ReplayPolicy {
    fn id(&self) -> String {
        self.policy_id.clone()
    }

    fn decide(&mut self, obs: &Observation) -> Result<PolicyDecision, PolicyError> {
        let decision = replay_decide(&self.recorded, self.stage, obs.period)?;
        let record = self
            .recorded
            .record(obs.period)
            .cloned()
            .ok_or(PolicyError::ReplayGap { stage: self.stage, period: obs.period })?;
        if let Some(ctx) = &self.prompt_check {
            let prompt = build_process_prompt(obs, ctx).map_err(|e| PolicyError::Observation(e.to_string()))?;
            if prompt != record.user_prompt {
                return Err(PolicyError::Observation(format!(
                    "replay diverged at period {}: rendered prompt differs from the recorded one",
                    obs.period
                )));
            }
        }
        self.played.push(record);
        Ok(decision)
    }

    fn transcript(&self) -> Option<&AgentTranscript> {
        Some(&self.played)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{sha256_hex, TranscriptRecord};

    fn transcript() -> AgentTranscript {
        AgentTranscript {
            records: vec![TranscriptRecord {
                period: 3,
                stage: Stage::Wholesaler,
                policy_id: "llm:m".into(),
                model_id: "m".into(),
                system_prompt_sha256: sha256_hex("s"),
                user_prompt: "u".into(),
                raw_completion: "ok [9]".into(),
                parsed_order: 9,
                retries_used: 0,
                failed_attempts: vec![],
                latency_ms: 0,
            }],
        }
    }

    #[test]
    fn recorded_order_and_gap() {
        let t = transcript();
        assert_eq!(replay_decide(&t, Stage::Wholesaler, 3).unwrap().order, 9);
        assert!(matches!(
            replay_decide(&t, Stage::Wholesaler, 4),
            Err(PolicyError::ReplayGap { period: 4, .. })
        ));
    }

    #[test]
    fn keeps_recorded_policy_id() {
        let p = ReplayPolicy::new(Stage::Wholesaler, transcript());
        assert_eq!(p.id(), "llm:m");
    }
}
