//! Chat-completion transports: the HTTP client for live runs and local
//! stand-ins for tests and stub runs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, LazyLock, Mutex};
use std::time::{Duration, Instant};

use regex::Regex;
use serde_json::{json, Value};

use crate::policy::{scripted_decide, Observation, ScriptRule, StageHistory};
use crate::stage::{InfoRegime, Stage};

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub system_role: String,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("no endpoint configured (set {0})")]
    NoEndpoint(String),
    #[error("request timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("unexpected response shape: {0}")]
    Shape(String),
    #[error("stub: {0}")]
    Stub(String),
}

pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, TransportError>;
}

static NETWORK_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests issued by [`HttpTransport`] in this process.
pub fn network_calls() -> u64 {
    NETWORK_CALLS.load(Ordering::SeqCst)
}

/// Global in-flight cap plus a minimum spacing between request starts per endpoint.
#[derive(Debug)]
pub struct RequestLimits {
    max_in_flight: usize,
    min_interval: Duration,
    in_flight: Mutex<usize>,
    freed: Condvar,
    last_start: Mutex<HashMap<String, Instant>>,
}

impl RequestLimits {
    pub fn new(max_in_flight: usize, min_interval: Duration) -> Arc<Self> {
        Arc::new(Self {
            max_in_flight: max_in_flight.max(1),
            min_interval,
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            last_start: Mutex::new(HashMap::new()),
        })
    }

    fn acquire(&self, endpoint: &str) -> InFlightGuard<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max_in_flight {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        drop(n);

        if !self.min_interval.is_zero() {
            let wait = {
                let mut starts = self.last_start.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                let slot = match starts.get(endpoint) {
                    Some(&prev) if prev + self.min_interval > now => prev + self.min_interval,
                    _ => now,
                };
                starts.insert(endpoint.to_string(), slot);
                slot.saturating_duration_since(now)
            };
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        InFlightGuard { limits: self }
    }

    pub fn in_flight(&self) -> usize {
        *self.in_flight.lock().unwrap_or_else(|e| e.into_inner())
    }
}

struct InFlightGuard<'a> {
    limits: &'a RequestLimits,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.limits.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.limits.freed.notify_one();
    }
}

/// OpenAI-style `chat/completions` client. Both vendor families accept this shape.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    limits: Arc<RequestLimits>,
}

impl HttpTransport {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        limits: Arc<RequestLimits>,
    ) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        Ok(Self { client, endpoint: endpoint.into(), api_key, limits })
    }

    pub fn request_body(request: &ChatRequest) -> Value {
        json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [
                { "role": request.system_role, "content": request.system },
                { "role": "user", "content": request.user },
            ],
        })
    }

    pub fn extract_text(body: &Value) -> Result<String, TransportError> {
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| TransportError::Shape("missing choices[0].message.content".into()))
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, TransportError> {
        let _slot = self.limits.acquire(&self.endpoint);
        NETWORK_CALLS.fetch_add(1, Ordering::SeqCst);
        let started = Instant::now();
        let mut req = self.client.post(&self.endpoint).json(&Self::request_body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Connection(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| TransportError::Connection(e.to_string()))?;
        if !status.is_success() {
            let body: String = text.chars().take(500).collect();
            return Err(TransportError::Status { status: status.as_u16(), body });
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| TransportError::Shape(e.to_string()))?;
        Ok(ChatReply { text: Self::extract_text(&body)?, latency: started.elapsed() })
    }
}

/// Returns canned replies in order; records every request it sees.
pub struct SequenceTransport {
    replies: Mutex<std::collections::VecDeque<Result<String, TransportError>>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl SequenceTransport {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_replies(replies.into_iter().map(|s| Ok(s.into())).collect())
    }

    pub fn with_replies(replies: Vec<Result<String, TransportError>>) -> Self {
        Self { replies: Mutex::new(replies.into()), seen: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> usize {
        self.seen.lock().map(|s| s.len()).unwrap_or(0)
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().map(|s| s.clone()).unwrap_or_default()
    }
}

impl ChatTransport for SequenceTransport {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, TransportError> {
        if let Ok(mut seen) = self.seen.lock() {
            seen.push(request.clone());
        }
        let next = self.replies.lock().ok().and_then(|mut r| r.pop_front());
        next.unwrap_or_else(|| Err(TransportError::Stub("script exhausted".into())))
            .map(|text| ChatReply { text, latency: Duration::ZERO })
    }
}

static RE_RETAILER_DEMAND: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"The demand at the retailer \(stage 1\) is (\d+)\.").expect("regex"));
static RE_DOWNSTREAM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Your downstream order from stage \d+ for this round is (\d+)\.").expect("regex"));
static RE_ON_HAND: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^- Inventory on hand: (\d+)$").expect("regex"));
static RE_BACKLOG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^- Backlog: (\d+)$").expect("regex"));
static RE_SUPPLY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^- Supply line \(ordered, not yet received\): (\d+)$").expect("regex"));
static RE_ARRIVING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^- Arriving delivery this round: (\d+)$").expect("regex"));
static RE_ROUND: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Now this is round (\d+), and you are at stage (\d+) of").expect("regex"));

/// Offline stand-in for a chat model: reads the figures it needs out of the
/// process prompt and answers with a scripted rule.
#[derive(Debug, Clone)]
pub struct ScriptedResponder {
    rule: ScriptRule,
}

impl ScriptedResponder {
    pub fn new(rule: ScriptRule) -> Self {
        Self { rule }
    }

    fn number(re: &Regex, text: &str, what: &str) -> Result<u64, TransportError> {
        re.captures(text)
            .and_then(|c| c[c.len() - 1].parse().ok())
            .ok_or_else(|| TransportError::Stub(format!("prompt lacks {what}")))
    }

    /// Reconstructs the local observation a prompt describes.
    pub fn read_prompt(user: &str) -> Result<Observation, TransportError> {
        let round = RE_ROUND
            .captures(user)
            .ok_or_else(|| TransportError::Stub("prompt lacks the round line".into()))?;
        let period: u32 = round[1].parse().map_err(|_| TransportError::Stub("bad round".into()))?;
        let stage_no: usize = round[2].parse().map_err(|_| TransportError::Stub("bad stage".into()))?;
        let stage = Stage::from_number(stage_no).ok_or_else(|| TransportError::Stub("bad stage".into()))?;
        let demand = if stage == Stage::Retailer {
            Self::number(&RE_RETAILER_DEMAND, user, "the retailer demand")?
        } else {
            Self::number(&RE_DOWNSTREAM, user, "the downstream order")?
        };
        let on_hand = Self::number(&RE_ON_HAND, user, "on-hand inventory")? as i64;
        let backlog = Self::number(&RE_BACKLOG, user, "backlog")?;
        Ok(Observation {
            period,
            stage,
            regime: InfoRegime::Isolated,
            own_inventory: on_hand - backlog as i64,
            own_backlog: backlog,
            arriving_now: Self::number(&RE_ARRIVING, user, "arrivals")? as u32,
            incoming_demand: demand as u32,
            supply_line: Self::number(&RE_SUPPLY, user, "the supply line")?,
            in_transit: vec![],
            orders_in_flight: vec![],
            history: StageHistory::default(),
            shared_view: None,
        })
    }
}

impl ChatTransport for ScriptedResponder {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, TransportError> {
        let obs = Self::read_prompt(&request.user)?;
        let decision = scripted_decide(&obs, &self.rule).map_err(|e| TransportError::Stub(e.to_string()))?;
        let text = format!(
            "Incoming demand is {}, net inventory is {}, and {} units are in the supply line. Following {}, I order [{}]",
            obs.incoming_demand,
            obs.own_inventory,
            obs.supply_line,
            self.rule.id(),
            decision.order
        );
        Ok(ChatReply { text, latency: Duration::ZERO })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_shape() {
        let req = ChatRequest {
            model: "m".into(),
            temperature: 1.0,
            system_role: "system".into(),
            system: "S".into(),
            user: "U".into(),
        };
        let body = HttpTransport::request_body(&req);
        assert_eq!(body["model"], "m");
        assert_eq!(body["temperature"], 1.0);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "U");
        let reply = json!({"choices": [{"message": {"role": "assistant", "content": "[3]"}}]});
        assert_eq!(HttpTransport::extract_text(&reply).unwrap(), "[3]");
        assert!(HttpTransport::extract_text(&json!({})).is_err());
    }

    #[test]
    fn limits_cap_in_flight() {
        let limits = RequestLimits::new(2, Duration::ZERO);
        let a = limits.acquire("x");
        let b = limits.acquire("y");
        assert_eq!(limits.in_flight(), 2);
        drop(a);
        assert_eq!(limits.in_flight(), 1);
        drop(b);
        assert_eq!(limits.in_flight(), 0);
    }

    #[test]
    fn rate_limit_spaces_starts() {
        let limits = RequestLimits::new(4, Duration::from_millis(30));
        let start = Instant::now();
        for _ in 0..3 {
            let _g = limits.acquire("same");
        }
        assert!(start.elapsed() >= Duration::from_millis(60));
    }
}
