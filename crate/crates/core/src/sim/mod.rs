//! The four-stage supply-chain state machine.

mod config;
mod delay;
mod engine;
mod game;
mod trace;

pub use config::{ConfigError, DemandLaw, GameConfig};
pub use delay::DelayLine;
pub use engine::{advance_period, compute_shipment, ChainState, PeriodRecord, StageState, StructuralError};
pub use game::{observe, run_game, run_game_with, GameError, GameOptions};
pub use trace::{total_cost_of_path, TeamTrace, TraceIoError, TRACE_FORMAT};
