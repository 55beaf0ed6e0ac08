//! Rent-collection oracle node talking to a remote server.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use reqwest::blocking::Client;
use rental_core::arc::{AdvanceResult, EndpointError, OracleEndpoint, ProcessResult, RetryPolicy};
use rental_core::ContractId;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

/// Node configuration file (TOML).
///
/// ```toml
/// engine = "http://127.0.0.1:8080"
/// provider = "TimeProvider"
/// lifecycler = "Lifecycler"
/// tick_period_secs = 86400
/// latency_log = "latency.csv"
///
/// [retry]
/// max_attempts = 8
/// initial_backoff_ms = 200
/// max_backoff_ms = 30000
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub engine: String,
    pub provider: String,
    /// Defaults to `provider` when `single_party` is set.
    pub lifecycler: Option<String>,
    /// Run advance and lifecycling as the same party.
    #[serde(default)]
    pub single_party: bool,
    #[serde(default = "daily")]
    pub tick_period_secs: f64,
    pub latency_log: Option<PathBuf>,
    #[serde(default)]
    pub retry: RetryConfig,
    /// Per-request timeout.
    #[serde(default = "request_timeout")]
    pub request_timeout_secs: f64,
}

fn daily() -> f64 {
    86_400.0
}

fn request_timeout() -> f64 {
    30.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryConfig {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        let d = RetryPolicy::default();
        RetryConfig {
            max_attempts: d.max_attempts,
            initial_backoff_ms: d.initial_backoff.as_millis() as u64,
            max_backoff_ms: d.max_backoff.as_millis() as u64,
        }
    }
}

impl From<&RetryConfig> for RetryPolicy {
    fn from(r: &RetryConfig) -> Self {
        RetryPolicy {
            max_attempts: r.max_attempts.max(1),
            initial_backoff: Duration::from_millis(r.initial_backoff_ms),
            max_backoff: Duration::from_millis(r.max_backoff_ms),
        }
    }
}

impl NodeConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: NodeConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.lifecycler()?;
        if !(cfg.tick_period_secs >= 0.0) {
            anyhow::bail!("tick_period_secs must not be negative");
        }
        Ok(cfg)
    }

    pub fn lifecycler(&self) -> anyhow::Result<String> {
        match (&self.lifecycler, self.single_party) {
            (None, true) => Ok(self.provider.clone()),
            (Some(l), true) if *l != self.provider => {
                anyhow::bail!("single_party is set but lifecycler differs from provider")
            }
            (Some(l), _) => Ok(l.clone()),
            (None, false) => anyhow::bail!("lifecycler is required unless single_party is set"),
        }
    }
}

/// [`OracleEndpoint`] over the server's HTTP API.
pub struct HttpEndpoint {
    client: Client,
    base: String,
    provider: String,
    lifecycler: String,
}

impl HttpEndpoint {
    pub fn new(cfg: &NodeConfig) -> anyhow::Result<Self> {
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(cfg.request_timeout_secs))
            .build()?;
        Ok(HttpEndpoint {
            client,
            base: cfg.engine.trim_end_matches('/').to_owned(),
            provider: cfg.provider.clone(),
            lifecycler: cfg.lifecycler()?,
        })
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: Value) -> Result<T, EndpointError> {
        let url = format!("{}{path}", self.base);
        let resp = self
            .client
            .post(&url)
            .json(&body)
            .send()
            .map_err(|e| EndpointError::Unavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if status.is_success() {
            return resp
                .json()
                .map_err(|e| EndpointError::Unavailable(format!("{url}: bad response: {e}")));
        }
        let body: Value = resp.json().unwrap_or(Value::Null);
        let code = body["code"].as_str().unwrap_or("HTTP").to_owned();
        let message = body["message"]
            .as_str()
            .map(str::to_owned)
            .unwrap_or_else(|| status.to_string());
        if status.is_server_error() {
            Err(EndpointError::Unavailable(format!("{code}: {message}")))
        } else {
            Err(EndpointError::Rejected { code, message })
        }
    }
}

impl OracleEndpoint for HttpEndpoint {
    fn advance(&self) -> Result<AdvanceResult, EndpointError> {
        self.post(&format!("/api/{}/oracle/advance", self.provider), json!({}))
    }

    fn process(&self, update: ContractId) -> Result<ProcessResult, EndpointError> {
        self.post(
            &format!("/api/{}/oracle/process", self.lifecycler),
            json!({ "update": update }),
        )
    }
}
