//! On-disk layout of an experiment.
//!
//! ```text
//! <root>/manifest.json
//! <root>/cells/<configuration>__<regime>__repNN/trace.jsonl
//! <root>/cells/<configuration>__<regime>__repNN/transcripts.jsonl
//! <root>/cells/<configuration>__<regime>__repNN/record.json
//! ```
//!
//! `record.json` is written last, by rename, so a cell directory without it
//! is an interrupted cell.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::plan::{Configuration, ExperimentPlan};
use crate::llm::{read_transcripts, write_transcripts, AgentTranscript, TranscriptIoError};
use crate::money::Money;
use crate::sim::{TeamTrace, TraceIoError};
use crate::stage::{InfoRegime, Stage, NUM_STAGES};
use crate::stats::RunView;

pub const MANIFEST_FORMAT: &str = "beerlab.manifest/1";
pub const RECORD_FORMAT: &str = "beerlab.cell/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub configuration: Configuration,
    pub regime: InfoRegime,
    pub replication: u32,
}

impl CellKey {
    pub fn id(&self) -> String {
        format!("{}__{}__rep{:02}", self.configuration, self.regime.as_str(), self.replication)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum CellStatus {
    Complete,
    Failed { reason: String },
}

/// Metadata written to `record.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub format: String,
    pub plan_sha256: String,
    pub cell: CellKey,
    /// Demand seed shared by every cell of this replication.
    pub seed: u64,
    pub cell_seed: u64,
    pub mode: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<[String; NUM_STAGES]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_cost: Option<Money>,
}

/// A finished cell with everything needed to recompute its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub record: CellRecord,
    pub trace: TeamTrace,
    pub transcripts: Vec<(Stage, AgentTranscript)>,
}

impl RunView for RunRecord {
    fn run_label(&self) -> String {
        self.record.cell.id()
    }
    fn run_trace(&self) -> &TeamTrace {
        &self.trace
    }
    fn configuration(&self) -> String {
        self.record.cell.configuration.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub plan_sha256: String,
    pub plan: ExperimentPlan,
    pub cells: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("{path} belongs to a different plan (stored {stored}, current {current})")]
    PlanMismatch { path: PathBuf, stored: String, current: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, reason: impl ToString) -> StoreError {
    StoreError::Corrupt { path: path.to_path_buf(), reason: reason.to_string() }
}

/// Canonical digest of a plan (its JSON form).
pub fn plan_sha256(plan: &ExperimentPlan) -> String {
    let json = serde_json::to_string(plan).expect("plans always serialize");
    crate::llm::sha256_hex(&json)
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = BufWriter::new(fs::File::create(&tmp).map_err(io_err(&tmp))?);
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn cells_dir(&self) -> PathBuf {
        self.root.join("cells")
    }

    pub fn cell_dir(&self, key: &CellKey) -> PathBuf {
        self.cells_dir().join(key.id())
    }

    /// Creates the layout or checks that an existing one belongs to `plan`.
    pub fn open_for(&self, plan: &ExperimentPlan) -> Result<(), StoreError> {
        let digest = plan_sha256(plan);
        let mpath = self.manifest_path();
        if mpath.exists() {
            let stored = self.read_manifest()?;
            if stored.plan_sha256 != digest {
                return Err(StoreError::PlanMismatch { path: mpath, stored: stored.plan_sha256, current: digest });
            }
        } else {
            fs::create_dir_all(self.cells_dir()).map_err(io_err(&self.root))?;
            let manifest =
                Manifest { format: MANIFEST_FORMAT.into(), plan_sha256: digest, plan: plan.clone(), cells: plan.cell_count() };
            let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            write_atomic(&mpath, format!("{json}\n").as_bytes())?;
        }
        fs::create_dir_all(self.cells_dir()).map_err(io_err(&self.root))
    }

    pub fn read_manifest(&self) -> Result<Manifest, StoreError> {
        let path = self.manifest_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| corrupt(&path, e))?;
        if m.format != MANIFEST_FORMAT {
            return Err(corrupt(&path, format!("unknown manifest format {:?}", m.format)));
        }
        Ok(m)
    }

    pub fn read_record(&self, key: &CellKey) -> Result<Option<CellRecord>, StoreError> {
        let path = self.cell_dir(key).join("record.json");
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map(Some).map_err(|e| corrupt(&path, e))
    }

    pub fn is_complete(&self, key: &CellKey) -> Result<bool, StoreError> {
        Ok(matches!(self.read_record(key)?, Some(CellRecord { status: CellStatus::Complete, .. })))
    }

    fn write_record(&self, dir: &Path, record: &CellRecord) -> Result<(), StoreError> {
        let json = serde_json::to_string_pretty(record).expect("records serialize");
        write_atomic(&dir.join("record.json"), format!("{json}\n").as_bytes())
    }

    pub fn write_complete(
        &self,
        record: &CellRecord,
        trace: &TeamTrace,
        transcripts: &[&AgentTranscript],
    ) -> Result<(), StoreError> {
        let dir = self.cell_dir(&record.cell);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let stale = dir.join("record.json");
        if stale.exists() {
            fs::remove_file(&stale).map_err(io_err(&stale))?;
        }
        write_atomic(&dir.join("trace.jsonl"), trace.to_jsonl_string().as_bytes())?;
        let mut buf = Vec::new();
        write_transcripts(transcripts, &mut buf).map_err(|e| corrupt(&dir, e))?;
        write_atomic(&dir.join("transcripts.jsonl"), &buf)?;
        self.write_record(&dir, record)
    }

    pub fn write_failed(&self, record: &CellRecord) -> Result<(), StoreError> {
        let dir = self.cell_dir(&record.cell);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        self.write_record(&dir, record)
    }

    pub fn read_trace(&self, key: &CellKey) -> Result<TeamTrace, StoreError> {
        let path = self.cell_dir(key).join("trace.jsonl");
        let f = fs::File::open(&path).map_err(io_err(&path))?;
        TeamTrace::read_jsonl(BufReader::new(f)).map_err(|e: TraceIoError| corrupt(&path, e))
    }

    pub fn read_cell_transcripts(&self, key: &CellKey) -> Result<Vec<(Stage, AgentTranscript)>, StoreError> {
        let path = self.cell_dir(key).join("transcripts.jsonl");
        let f = fs::File::open(&path).map_err(io_err(&path))?;
        read_transcripts(BufReader::new(f)).map_err(|e: TranscriptIoError| corrupt(&path, e))
    }

    /// Every cell directory with a record, complete or failed, sorted by cell.
    pub fn records(&self) -> Result<Vec<CellRecord>, StoreError> {
        let dir = self.cells_dir();
        let mut out = Vec::new();
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(StoreError::Io { path: dir, source: e }),
        };
        for entry in entries {
            let entry = entry.map_err(io_err(&dir))?;
            let path = entry.path().join("record.json");
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let rec: CellRecord = serde_json::from_str(&text).map_err(|e| corrupt(&path, e))?;
            out.push(rec);
        }
        out.sort_by_key(|r| r.cell);
        Ok(out)
    }

    /// Complete cells with their traces and transcripts, plus the failed records.
    pub fn load_runs(&self) -> Result<(Vec<RunRecord>, Vec<CellRecord>), StoreError> {
        let mut runs = Vec::new();
        let mut failed = Vec::new();
        for record in self.records()? {
            match record.status {
                CellStatus::Complete => {
                    let trace = self.read_trace(&record.cell)?;
                    let transcripts = self.read_cell_transcripts(&record.cell)?;
                    runs.push(RunRecord { record, trace, transcripts });
                }
                CellStatus::Failed { .. } => failed.push(record),
            }
        }
        Ok((runs, failed))
    }
}
