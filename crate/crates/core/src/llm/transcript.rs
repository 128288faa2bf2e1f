//! Prompt/completion records for audit and replay.
//!
//! On disk a cell's transcripts are one JSON object per line, one line per
//! `(period, stage)` decision, ordered by period then stage.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::stage::Stage;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub period: u32,
    pub stage: Stage,
    /// Identifier of the policy that produced the decision.
    pub policy_id: String,
    pub model_id: String,
    pub system_prompt_sha256: String,
    pub user_prompt: String,
    pub raw_completion: String,
    pub parsed_order: u32,
    pub retries_used: u32,
    /// Completions or transport errors of attempts that did not yield an order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_attempts: Vec<String>,
    pub latency_ms: u64,
}

/// One stage's records for one game.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub records: Vec<TranscriptRecord>,
}

impl AgentTranscript {
    pub fn record(&self, period: u32) -> Option<&TranscriptRecord> {
        self.records.iter().find(|r| r.period == period)
    }

    pub fn push(&mut self, record: TranscriptRecord) {
        self.records.push(record);
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptIoError {
    #[error("transcript i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Writes the records of several transcripts interleaved by period, then stage.
pub fn write_transcripts<W: Write>(
    transcripts: &[&AgentTranscript],
    mut out: W,
) -> Result<(), TranscriptIoError> {
    let mut all: Vec<&TranscriptRecord> = transcripts.iter().flat_map(|t| t.records.iter()).collect();
    all.sort_by_key(|r| (r.period, r.stage));
    for r in all {
        serde_json::to_writer(&mut out, r).map_err(|source| TranscriptIoError::Json { line: 0, source })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a transcript file and splits it per stage.
pub fn read_transcripts<R: BufRead>(input: R) -> Result<Vec<(Stage, AgentTranscript)>, TranscriptIoError> {
    let mut per_stage: Vec<(Stage, AgentTranscript)> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TranscriptRecord = serde_json::from_str(&line)
            .map_err(|source| TranscriptIoError::Json { line: idx + 1, source })?;
        match per_stage.iter_mut().find(|(s, _)| *s == rec.stage) {
            Some((_, t)) => t.push(rec),
            None => per_stage.push((rec.stage, AgentTranscript { records: vec![rec] })),
        }
    }
    per_stage.sort_by_key(|(s, _)| *s);
    Ok(per_stage)
}
