//! Chat-model agents: prompts, order parsing, transport and transcripts.

mod agent;
mod gateway;
mod parse;
mod prompt;
mod transcript;
mod transport;

pub use agent::LlmPolicy;
pub use gateway::{
    request_decision, AgentFailure, DecisionOutcome, Family, ModelProfile, Tier, FORMAT_REMINDER,
};
pub use parse::{parse_order, ParseError};
pub use prompt::{
    build_process_prompt, build_system_prompt, state_description, PromptContext, PromptError,
    SYSTEM_PROMPT_ISOLATED, SYSTEM_PROMPT_SHARED,
};
pub use transcript::{read_transcripts, sha256_hex, write_transcripts, AgentTranscript, TranscriptIoError, TranscriptRecord};
pub use transport::{
    network_calls, ChatReply, ChatRequest, ChatTransport, HttpTransport, RequestLimits, ScriptedResponder,
    SequenceTransport, TransportError,
};
