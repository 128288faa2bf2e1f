use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use super::plan::{AgentSpec, Configuration, ExperimentPlan};
use super::seed::{demand_seed, derive_seed};
use super::store::{plan_sha256, CellKey, CellRecord, CellStatus, Store, StoreError, RECORD_FORMAT};
use crate::llm::{
    AgentTranscript, ChatTransport, HttpTransport, LlmPolicy, PromptContext, RequestLimits, ScriptedResponder, Tier,
};
use crate::par::{par_map, Parallelism};
use crate::policy::{OrderPolicy, ReplayPolicy, ScriptedPolicy, TrackingDemand};
use crate::sim::{run_game_with, GameOptions};
use crate::stage::{InfoRegime, Stage, NUM_STAGES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunMode {
    /// Chat agents call their configured endpoints.
    Live,
    /// Chat agents talk to the offline scripted responder.
    Stub,
    /// Chat agents replay the transcripts stored under this experiment root.
    Replay { from: PathBuf },
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Live => "live",
            RunMode::Stub => "stub",
            RunMode::Replay { .. } => "replay",
        }
    }
}

/// Selects cells by `configuration/regime/replication`; `*` or a missing
/// part matches anything (`R-S1`, `*/shared`, `Original/isolated/3`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellFilter {
    pub configuration: Option<Configuration>,
    pub regime: Option<InfoRegime>,
    pub replication: Option<u32>,
}

impl CellFilter {
    pub fn matches(&self, key: &CellKey) -> bool {
        self.configuration.is_none_or(|c| c == key.configuration)
            && self.regime.is_none_or(|r| r == key.regime)
            && self.replication.is_none_or(|n| n == key.replication)
    }
}

impl FromStr for CellFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('/').collect();
        if parts.len() > 3 {
            return Err(format!("filter {s:?} has more than three parts"));
        }
        let part = |i: usize| parts.get(i).map(|p| p.trim()).filter(|p| !p.is_empty() && *p != "*");
        Ok(CellFilter {
            configuration: part(0).map(str::parse).transpose()?,
            regime: part(1).map(str::parse).transpose().map_err(|e: String| e)?,
            replication: part(2)
                .map(|r| r.trim_start_matches("rep").parse::<u32>().map_err(|_| format!("bad replication {r:?}")))
                .transpose()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellOutcome {
    Skipped,
    Completed,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionSummary {
    pub selected: usize,
    pub skipped: usize,
    pub completed: usize,
    pub failed: Vec<(String, String)>,
}

impl ExecutionSummary {
    pub fn all_complete(&self) -> bool {
        self.failed.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExecuteError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Setup(String),
}

/// Every cell of the plan, in a fixed order.
pub fn plan_cells(plan: &ExperimentPlan) -> Vec<CellKey> {
    let mut cells = Vec::with_capacity(plan.cell_count());
    for &configuration in &plan.configurations {
        for &regime in &plan.regimes {
            for replication in 0..plan.replications {
                cells.push(CellKey { configuration, regime, replication });
            }
        }
    }
    cells
}

/// Chat transports shared by every cell, one per tier.
struct Transports {
    by_tier: [Option<Arc<dyn ChatTransport>>; 2],
}

impl Transports {
    fn build(plan: &ExperimentPlan, mode: &RunMode) -> Result<Self, ExecuteError> {
        let limits =
            RequestLimits::new(plan.requests.max_in_flight, Duration::from_millis(plan.requests.min_interval_ms));
        let mut by_tier: [Option<Arc<dyn ChatTransport>>; 2] = [None, None];
        for (i, tier) in [Tier::Shallow, Tier::Deep].into_iter().enumerate() {
            let AgentSpec::Llm(agent) = plan.tiers.get(tier) else { continue };
            by_tier[i] = match mode {
                RunMode::Stub => Some(Arc::new(ScriptedResponder::new(agent.stub_rule()))),
                RunMode::Live => {
                    let profile = agent.profile(tier);
                    let endpoint = profile.resolve_endpoint().ok_or_else(|| {
                        ExecuteError::Setup(format!(
                            "tiers.{}: no endpoint configured; set `endpoint` or {}",
                            tier.as_str(),
                            profile.endpoint_env_var()
                        ))
                    })?;
                    let key = std::env::var(profile.key_env_var()).ok();
                    let http = HttpTransport::new(endpoint, key, profile.timeout(), limits.clone())
                        .map_err(|e| ExecuteError::Setup(e.to_string()))?;
                    Some(Arc::new(http))
                }
                RunMode::Replay { .. } => None,
            };
        }
        Ok(Self { by_tier })
    }

    fn get(&self, tier: Tier) -> Option<Arc<dyn ChatTransport>> {
        self.by_tier[tier as usize].clone()
    }
}

fn build_policies(
    plan: &ExperimentPlan,
    key: &CellKey,
    mode: &RunMode,
    transports: &Transports,
) -> Result<Vec<Box<dyn OrderPolicy>>, String> {
    let tiers = key.configuration.tiers();
    let recorded = match mode {
        RunMode::Replay { from } => {
            Some(Store::new(from).read_cell_transcripts(key).map_err(|e| format!("no recorded transcripts: {e}"))?)
        }
        _ => None,
    };
    let ctx = PromptContext::from_config(&plan.game);
    let mut out: Vec<Box<dyn OrderPolicy>> = Vec::with_capacity(NUM_STAGES);
    for stage in Stage::ALL {
        let tier = tiers[stage.index()];
        let spec = plan.tiers.get(tier);
        let policy: Box<dyn OrderPolicy> = match spec {
            AgentSpec::Llm(agent) => match &recorded {
                Some(rec) => {
                    let transcript = rec
                        .iter()
                        .find(|(s, _)| *s == stage)
                        .map(|(_, t)| t.clone())
                        .ok_or_else(|| format!("no recorded transcript for {stage}"))?;
                    Box::new(ReplayPolicy::new(stage, transcript).with_prompt_check(ctx.clone()))
                }
                None => {
                    let transport = transports.get(tier).ok_or("transport missing for chat tier")?;
                    Box::new(LlmPolicy::new(agent.profile(tier), transport, ctx.clone()))
                }
            },
            AgentSpec::TrackingDemand => Box::new(TrackingDemand::for_stage(&plan.game, stage)),
            other => Box::new(ScriptedPolicy::new(other.script_rule().expect("scripted tiers carry a rule"))),
        };
        out.push(policy);
    }
    Ok(out)
}

fn run_cell(
    plan: &ExperimentPlan,
    digest: &str,
    store: &Store,
    key: CellKey,
    mode: &RunMode,
    transports: &Transports,
) -> Result<CellOutcome, StoreError> {
    let seed = demand_seed(plan.master_seed, key.replication);
    let mut record = CellRecord {
        format: RECORD_FORMAT.into(),
        plan_sha256: digest.to_string(),
        cell: key,
        seed,
        cell_seed: derive_seed(plan.master_seed, key.configuration, key.regime, key.replication),
        mode: mode.as_str().into(),
        status: CellStatus::Complete,
        policies: None,
        system_cost: None,
    };
    let fail = |record: &mut CellRecord, reason: String| -> Result<CellOutcome, StoreError> {
        record.status = CellStatus::Failed { reason: reason.clone() };
        store.write_failed(record)?;
        Ok(CellOutcome::Failed(reason))
    };
    let mut policies = match build_policies(plan, &key, mode, transports) {
        Ok(p) => p,
        Err(reason) => return fail(&mut record, reason),
    };
    let options = GameOptions { concurrent_decisions: *mode == RunMode::Live };
    match run_game_with(&plan.game, &mut policies, seed, key.regime, options) {
        Ok(trace) => {
            record.policies = Some(trace.policies.clone());
            record.system_cost = Some(trace.system_cost());
            let transcripts: Vec<&AgentTranscript> = policies.iter().filter_map(|p| p.transcript()).collect();
            store.write_complete(&record, &trace, &transcripts)?;
            Ok(CellOutcome::Completed)
        }
        Err(e) => fail(&mut record, e.to_string()),
    }
}

/// Runs every selected cell not yet complete in `store`. Cells are
/// independent and run in parallel per `parallelism`; each is persisted as
/// soon as it finishes. `progress` is called once per selected cell.
pub fn execute(
    plan: &ExperimentPlan,
    store: &Store,
    mode: &RunMode,
    parallelism: Parallelism,
    filter: &CellFilter,
    progress: &(dyn Fn(&CellKey, &CellOutcome) + Sync),
) -> Result<ExecutionSummary, ExecuteError> {
    plan.validate().map_err(|e| ExecuteError::Setup(e.to_string()))?;
    store.open_for(plan)?;
    let digest = plan_sha256(plan);
    let transports = Transports::build(plan, mode)?;

    let selected: Vec<CellKey> = plan_cells(plan).into_iter().filter(|k| filter.matches(k)).collect();
    let mut pending = Vec::new();
    let mut skipped = 0;
    for key in &selected {
        if store.is_complete(key)? {
            skipped += 1;
            progress(key, &CellOutcome::Skipped);
        } else {
            pending.push(*key);
        }
    }

    let results = par_map(&pending, parallelism, |&key| {
        let outcome = run_cell(plan, &digest, store, key, mode, &transports);
        if let Ok(o) = &outcome {
            progress(&key, o);
        }
        (key, outcome)
    });

    let mut summary = ExecutionSummary { selected: selected.len(), skipped, completed: 0, failed: Vec::new() };
    let mut storage_error = None;
    for (key, outcome) in results {
        match outcome {
            Ok(CellOutcome::Completed) => summary.completed += 1,
            Ok(CellOutcome::Failed(reason)) => summary.failed.push((key.id(), reason)),
            Ok(CellOutcome::Skipped) => summary.skipped += 1,
            Err(e) => {
                summary.failed.push((key.id(), e.to_string()));
                storage_error.get_or_insert(e);
            }
        }
    }
    match storage_error {
        Some(e) => Err(e.into()),
        None => Ok(summary),
    }
}
