//! Complete record of one game and its line-delimited JSON form.
//!
//! File layout (`beerlab.trace/1`), one JSON object per line:
//!
//! ```text
//! {"record":"header","format":"beerlab.trace/1","config":{..},"seed":..,"regime":"isolated","policies":[..4 ids..]}
//! {"record":"period","period":1,"demand":..,"orders":[..],...}        one line per period
//! {"record":"totals","total_cost":["120","120","120","120"]}
//! ```
//!
//! Period field names are those of [`PeriodRecord`]. Amounts are exact
//! decimal strings (see [`crate::money`]).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::config::GameConfig;
use super::engine::PeriodRecord;
use crate::money::Money;
use crate::stage::{InfoRegime, Stage, NUM_STAGES};

pub const TRACE_FORMAT: &str = "beerlab.trace/1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TeamTrace {
    pub config: GameConfig,
    pub seed: u64,
    pub regime: InfoRegime,
    pub policies: [String; NUM_STAGES],
    pub periods: Vec<PeriodRecord>,
    pub total_cost_per_stage: [Money; NUM_STAGES],
}

#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace: {0}")]
    Layout(String),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TraceLine {
    Header {
        format: String,
        config: GameConfig,
        seed: u64,
        regime: InfoRegime,
        policies: [String; NUM_STAGES],
    },
    Period(PeriodRecord),
    Totals {
        total_cost: [Money; NUM_STAGES],
    },
}

impl TeamTrace {
    pub fn horizon(&self) -> usize {
        self.periods.len()
    }

    /// Total cost of `stage`, recomputed from its inventory path.
    pub fn total_cost(&self, stage: Stage) -> Money {
        self.periods
            .iter()
            .map(|p| self.config.period_cost(p.inventory_end[stage.index()]))
            .sum()
    }

    pub fn system_cost(&self) -> Money {
        self.total_cost_per_stage.iter().sum()
    }

    pub fn orders(&self, stage: Stage) -> Vec<u32> {
        self.periods.iter().map(|p| p.orders[stage.index()]).collect()
    }

    pub fn inventory_path(&self, stage: Stage) -> Vec<i64> {
        self.periods.iter().map(|p| p.inventory_end[stage.index()]).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), TraceIoError> {
        let header = TraceLine::Header {
            format: TRACE_FORMAT.to_string(),
            config: self.config.clone(),
            seed: self.seed,
            regime: self.regime,
            policies: self.policies.clone(),
        };
        write_line(&mut out, &header)?;
        for p in &self.periods {
            write_line(&mut out, &TraceLine::Period(p.clone()))?;
        }
        write_line(&mut out, &TraceLine::Totals { total_cost: self.total_cost_per_stage })?;
        out.flush()?;
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<TeamTrace, TraceIoError> {
        let mut header = None;
        let mut periods = Vec::new();
        let mut totals = None;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine = serde_json::from_str(&line)
                .map_err(|source| TraceIoError::Json { line: idx + 1, source })?;
            match parsed {
                TraceLine::Header { format, config, seed, regime, policies } => {
                    if format != TRACE_FORMAT {
                        return Err(TraceIoError::Layout(format!("unsupported format `{format}`")));
                    }
                    if header.is_some() {
                        return Err(TraceIoError::Layout("duplicate header".into()));
                    }
                    header = Some((config, seed, regime, policies));
                }
                TraceLine::Period(p) => periods.push(p),
                TraceLine::Totals { total_cost } => totals = Some(total_cost),
            }
        }
        let (config, seed, regime, policies) =
            header.ok_or_else(|| TraceIoError::Layout("missing header".into()))?;
        let total_cost_per_stage =
            totals.ok_or_else(|| TraceIoError::Layout("missing totals".into()))?;
        let trace = TeamTrace { config, seed, regime, policies, periods, total_cost_per_stage };
        for s in Stage::ALL {
            if trace.total_cost(s) != trace.total_cost_per_stage[s.index()] {
                return Err(TraceIoError::Layout(format!(
                    "{s} total cost does not match its period costs"
                )));
            }
        }
        Ok(trace)
    }
}

fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<(), TraceIoError> {
    serde_json::to_writer(&mut *out, value).map_err(|source| TraceIoError::Json { line: 0, source })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Total cost of a stage along an inventory path.
pub fn total_cost_of_path(config: &GameConfig, inventory_path: &[i64]) -> Money {
    inventory_path.iter().map(|&i| config.period_cost(i)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_of_paths() {
        let c = GameConfig::default();
        assert_eq!(total_cost_of_path(&c, &[12, -2, 3]), Money::new(19, 2));
        assert_eq!(total_cost_of_path(&c, &[0, 0, 0]), Money::ZERO);
    }
}
