//! The factorial design: plans, seeds, the cell store and the executor.

mod plan;
mod runner;
mod seed;
mod store;

pub use plan::{AgentSpec, Configuration, ExperimentPlan, LlmAgent, PlanError, RequestPolicy, TierAgents};
pub use runner::{execute, plan_cells, CellFilter, CellOutcome, ExecuteError, ExecutionSummary, RunMode};
pub use seed::{demand_seed, derive_seed};
pub use store::{
    plan_sha256, CellKey, CellRecord, CellStatus, Manifest, RunRecord, Store, StoreError, MANIFEST_FORMAT,
    RECORD_FORMAT,
};
