//! Deterministic Beer Distribution Game laboratory.
//!
//! * [`sim`] — the four-stage chain, its delay lines and cost ledger.
//! * [`policy`] — ordering policies: demand tracking, scripted rules, replay.
//! * [`llm`] — chat-model agents: prompts, parsing, transport, transcripts.
//! * [`experiment`] — factorial plans, seeds, persistence and resumable execution.
//! * [`stats`] — variance, exact and asymptotic tests, the ordering regression.
//! * [`analysis`] and [`figures`] — summary tables and charts over stored runs.

pub mod analysis;
pub mod experiment;
pub mod figures;
pub mod llm;
pub mod money;
pub mod par;
pub mod policy;
pub mod rng;
pub mod sim;
pub mod stage;
pub mod stats;

pub use money::Money;
pub use stage::{InfoRegime, Stage, NUM_STAGES};
