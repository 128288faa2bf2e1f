//! Plan files (TOML).
//!
//! ```toml
//! name = "pilot"
//! master_seed = 20240601
//! replications = 32
//! configurations = ["Original", "R-Overall", "R-S1", "R-S2", "R-S3", "R-S4"]
//! regimes = ["isolated", "shared"]
//!
//! [game]
//! horizon = 20
//!
//! [tiers.shallow]
//! kind = "llm"
//! family = "A"
//! model_id = "small-model"
//! stub = { rule = "match_demand" }
//!
//! [tiers.deep]
//! kind = "tracking_demand"
//! ```
//!
//! Tier agents are `llm`, `tracking_demand`, `constant` (`k`),
//! `match_demand` or `panic` (`alpha`, `beta`, `target`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::llm::{Family, ModelProfile, Tier};
use crate::policy::ScriptRule;
use crate::sim::GameConfig;
use crate::stage::{InfoRegime, Stage, NUM_STAGES};

/// Which stages are played by the deep tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Configuration {
    /// All shallow.
    Original,
    /// All deep.
    ROverall,
    /// Deep at stage `k` (1-based) only.
    RStage(u8),
}

impl Configuration {
    pub const ALL: [Configuration; 6] = [
        Configuration::Original,
        Configuration::ROverall,
        Configuration::RStage(1),
        Configuration::RStage(2),
        Configuration::RStage(3),
        Configuration::RStage(4),
    ];

    pub fn name(self) -> String {
        self.to_string()
    }

    pub fn tiers(self) -> [Tier; NUM_STAGES] {
        Stage::ALL.map(|s| match self {
            Configuration::Original => Tier::Shallow,
            Configuration::ROverall => Tier::Deep,
            Configuration::RStage(k) if s.number() == k as usize => Tier::Deep,
            Configuration::RStage(_) => Tier::Shallow,
        })
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Configuration::Original => f.write_str("Original"),
            Configuration::ROverall => f.write_str("R-Overall"),
            Configuration::RStage(k) => write!(f, "R-S{k}"),
        }
    }
}

impl FromStr for Configuration {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Original" => Ok(Configuration::Original),
            "R-Overall" => Ok(Configuration::ROverall),
            _ => s
                .strip_prefix("R-S")
                .and_then(|k| k.parse::<u8>().ok())
                .filter(|k| (1..=NUM_STAGES as u8).contains(k))
                .map(Configuration::RStage)
                .ok_or_else(|| format!("unknown configuration {s:?} (expected Original, R-Overall or R-S1..R-S4)")),
        }
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_temperature() -> f64 {
    1.0
}
fn default_retries() -> u32 {
    3
}
fn default_timeout() -> f64 {
    120.0
}
fn default_backoff() -> u64 {
    500
}
fn default_system_role() -> String {
    "system".into()
}

/// Chat-model agent settings for one tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmAgent {
    pub family: Family,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_system_role")]
    pub system_role: String,
    /// Rule the offline responder follows in stub mode (default `match_demand`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stub: Option<ScriptRule>,
}

impl LlmAgent {
    pub fn profile(&self, tier: Tier) -> ModelProfile {
        ModelProfile {
            tier,
            family: self.family,
            model_id: self.model_id.clone(),
            endpoint: self.endpoint.clone(),
            api_key_env: self.api_key_env.clone(),
            temperature: self.temperature,
            max_retries: self.max_retries,
            timeout_secs: self.timeout_secs,
            backoff_ms: self.backoff_ms,
            system_role: self.system_role.clone(),
        }
    }

    pub fn stub_rule(&self) -> ScriptRule {
        self.stub.unwrap_or(ScriptRule::MatchDemand)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    Llm(LlmAgent),
    TrackingDemand,
    Constant { k: u32 },
    MatchDemand,
    Panic { alpha: f64, beta: f64, target: i64 },
}

impl AgentSpec {
    pub fn is_llm(&self) -> bool {
        matches!(self, AgentSpec::Llm(_))
    }

    pub fn script_rule(&self) -> Option<ScriptRule> {
        match *self {
            AgentSpec::Constant { k } => Some(ScriptRule::Constant { k }),
            AgentSpec::MatchDemand => Some(ScriptRule::MatchDemand),
            AgentSpec::Panic { alpha, beta, target } => Some(ScriptRule::Panic { alpha, beta, target }),
            AgentSpec::Llm(_) | AgentSpec::TrackingDemand => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierAgents {
    pub shallow: AgentSpec,
    pub deep: AgentSpec,
}

impl TierAgents {
    pub fn get(&self, tier: Tier) -> &AgentSpec {
        match tier {
            Tier::Shallow => &self.shallow,
            Tier::Deep => &self.deep,
        }
    }
}

fn default_max_in_flight() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestPolicy {
    /// Concurrent chat requests across all cells.
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// Minimum spacing between request starts to one endpoint.
    #[serde(default)]
    pub min_interval_ms: u64,
}

impl Default for RequestPolicy {
    fn default() -> Self {
        Self { max_in_flight: default_max_in_flight(), min_interval_ms: 0 }
    }
}

fn default_replications() -> u32 {
    32
}
fn default_configurations() -> Vec<Configuration> {
    Configuration::ALL.to_vec()
}
fn default_regimes() -> Vec<InfoRegime> {
    vec![InfoRegime::Isolated, InfoRegime::Shared]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub name: String,
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_configurations")]
    pub configurations: Vec<Configuration>,
    #[serde(default = "default_regimes")]
    pub regimes: Vec<InfoRegime>,
    #[serde(default)]
    pub game: GameConfig,
    pub tiers: TierAgents,
    #[serde(default)]
    pub requests: RequestPolicy,
}

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("cannot read plan {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("plan does not parse: {0}")]
    Parse(String),
    #[error("plan field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> PlanError {
    PlanError::Invalid { field: field.into(), reason: reason.into() }
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self, PlanError> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| PlanError::Parse(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, PlanError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PlanError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if self.configurations.is_empty() {
            return Err(invalid("configurations", "must list at least one configuration"));
        }
        if self.regimes.is_empty() {
            return Err(invalid("regimes", "must list at least one regime"));
        }
        for (field, list_has_dup) in [
            ("configurations", has_duplicates(&self.configurations)),
            ("regimes", has_duplicates(&self.regimes)),
        ] {
            if list_has_dup {
                return Err(invalid(field, "contains duplicates"));
            }
        }
        self.game.validate().map_err(|e| match e {
            crate::sim::ConfigError::Invalid { field, reason } => invalid(&format!("game.{field}"), reason),
        })?;
        for tier in [Tier::Shallow, Tier::Deep] {
            let field = format!("tiers.{}", tier.as_str());
            match self.tiers.get(tier) {
                AgentSpec::Llm(agent) => {
                    agent.profile(tier).validate().map_err(|r| invalid(&field, r))?;
                    if let Some(rule) = &agent.stub {
                        rule.validate().map_err(|r| invalid(&format!("{field}.stub"), r))?;
                    }
                }
                spec => {
                    if let Some(rule) = spec.script_rule() {
                        rule.validate().map_err(|r| invalid(&field, r))?;
                    }
                }
            }
        }
        if self.requests.max_in_flight == 0 {
            return Err(invalid("requests.max_in_flight", "must be at least 1"));
        }
        Ok(())
    }

    /// True if any tier is played by a chat model.
    pub fn uses_llm(&self) -> bool {
        self.tiers.shallow.is_llm() || self.tiers.deep.is_llm()
    }

    pub fn cell_count(&self) -> usize {
        self.configurations.len() * self.regimes.len() * self.replications as usize
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
master_seed = 1
[tiers.shallow]
kind = "constant"
k = 4
[tiers.deep]
kind = "tracking_demand"
"#;

    #[test]
    fn defaults_fill_in() {
        let p = ExperimentPlan::from_toml_str(MINIMAL).unwrap();
        assert_eq!(p.replications, 32);
        assert_eq!(p.configurations.len(), 6);
        assert_eq!(p.regimes.len(), 2);
        assert_eq!(p.cell_count(), 384);
        assert_eq!(p.game, GameConfig::default());
    }

    #[test]
    fn configuration_tiers() {
        use Tier::*;
        assert_eq!(Configuration::Original.tiers(), [Shallow; 4]);
        assert_eq!(Configuration::ROverall.tiers(), [Deep; 4]);
        assert_eq!(Configuration::RStage(3).tiers(), [Shallow, Shallow, Deep, Shallow]);
        for c in Configuration::ALL {
            assert_eq!(c.name().parse::<Configuration>().unwrap(), c);
        }
        assert!("R-S5".parse::<Configuration>().is_err());
    }

    #[test]
    fn llm_tier_parses() {
        let text = r#"
name = "t"
master_seed = 1
replications = 2
configurations = ["R-S2"]
regimes = ["shared"]
[tiers.shallow]
kind = "llm"
family = "A"
model_id = "m-small"
stub = { rule = "panic", alpha = 1.0, beta = 0.2, target = 12 }
[tiers.deep]
kind = "llm"
family = "B"
model_id = "m-large"
"#;
        let p = ExperimentPlan::from_toml_str(text).unwrap();
        let AgentSpec::Llm(a) = &p.tiers.shallow else { panic!("expected llm") };
        assert_eq!(a.stub_rule(), ScriptRule::Panic { alpha: 1.0, beta: 0.2, target: 12 });
        assert_eq!(a.profile(Tier::Shallow).temperature, 1.0);
        assert!(p.uses_llm());
    }

    #[test]
    fn rejections_name_the_field() {
        let bad = MINIMAL.replace("k = 4", "k = 4\nbogus = 1");
        assert!(matches!(ExperimentPlan::from_toml_str(&bad), Err(PlanError::Parse(_))));
        let bad = MINIMAL.replace("master_seed = 1", "master_seed = 1\nreplications = 0");
        match ExperimentPlan::from_toml_str(&bad) {
            Err(PlanError::Invalid { field, .. }) => assert_eq!(field, "replications"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = format!("{MINIMAL}\n[game]\nhorizon = 0\n");
        match ExperimentPlan::from_toml_str(&bad) {
            Err(PlanError::Invalid { field, .. }) => assert!(field.starts_with("game."), "{field}"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = MINIMAL.replace("\"constant\"", "\"oracle\"");
        assert!(matches!(ExperimentPlan::from_toml_str(&bad), Err(PlanError::Parse(_))));
    }
}
