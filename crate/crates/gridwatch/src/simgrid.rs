//! Simulated information services for testing the monitor against a
//! heterogeneous grid.
//!
//! A scenario lists mock services, each answering `GET /info` with one of
//! three XML schemas and optionally injecting a fault:
//!
//! ```json
//! {"services": [
//!   {"name": "hpc", "port": 0, "schema": "cluster", "mode": "healthy", "seed": 1},
//!   {"name": "tape", "port": 0, "schema": "storage", "mode": {"slow": {"delay_ms": 3000}}},
//!   {"name": "scope", "port": 0, "schema": "instrument", "mode": {"flaky": {"fail_probability": 0.5}}, "seed": 7}
//! ]}
//! ```
//!
//! Port 0 picks a free port. Payloads and flaky failures are drawn from a
//! ChaCha generator seeded per service, so a given request sequence always
//! produces the same responses.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::task::JoinSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Cluster,
    Storage,
    Instrument,
}

impl Schema {
    pub const ALL: [Schema; 3] = [Schema::Cluster, Schema::Storage, Schema::Instrument];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Cluster => "cluster",
            Schema::Storage => "storage",
            Schema::Instrument => "instrument",
        }
    }

    pub fn root_element(self) -> &'static str {
        match self {
            Schema::Cluster => "cluster",
            Schema::Storage => "store",
            Schema::Instrument => "instrument",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Healthy,
    Slow { delay_ms: u64 },
    Flaky { fail_probability: f64 },
    Down,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockService {
    pub name: String,
    #[serde(default)]
    pub port: u16,
    pub schema: Schema,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub services: Vec<MockService>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{}: {source}", path.display())]
    Io { path: std::path::PathBuf, source: io::Error },
    #[error("invalid scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut names = HashSet::new();
        let mut ports = HashSet::new();
        for s in &self.services {
            if s.name.trim().is_empty() {
                return Err(ScenarioError::Invalid("service name must not be empty".into()));
            }
            if !names.insert(s.name.as_str()) {
                return Err(ScenarioError::Invalid(format!("duplicate service name {:?}", s.name)));
            }
            if s.port != 0 && !ports.insert(s.port) {
                return Err(ScenarioError::Invalid(format!("duplicate port {}", s.port)));
            }
            if let Mode::Flaky { fail_probability: p } = s.mode {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ScenarioError::Invalid(format!(
                        "service {:?}: fail_probability {p} is outside [0, 1]",
                        s.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A schema-conformant payload drawn from `rng`.
pub fn payload(schema: Schema, rng: &mut impl Rng) -> String {
    let mut xml = String::new();
    match schema {
        Schema::Cluster => {
            xml.push_str("<cluster><queues>");
            for i in 0..rng.random_range(1..=4) {
                let _ = write!(xml, "<queue name=\"q{i}\" length=\"{}\"/>", rng.random_range(0..50));
            }
            let total = *[16u32, 32, 64, 128, 256].choose(rng).expect("non-empty");
            let free = rng.random_range(0..=total);
            let _ = write!(xml, "</queues><cpus total=\"{total}\" free=\"{free}\"/></cluster>");
        }
        Schema::Storage => {
            let capacity = *[500u32, 1000, 2000, 4000].choose(rng).expect("non-empty");
            let used = rng.random_range(0..=capacity);
            let _ = write!(
                xml,
                "<store><capacity-gb>{capacity}</capacity-gb><used-gb>{used}</used-gb></store>"
            );
        }
        Schema::Instrument => {
            let state = ["idle", "acquiring", "calibrating"].choose(rng).expect("non-empty");
            let reading = rng.random_range(-40.0..120.0f64);
            let _ = write!(
                xml,
                "<instrument><state>{state}</state><last-reading>{reading:.2}</last-reading></instrument>"
            );
        }
    }
    xml
}

/// A payload cut off before its closing tag, which never parses.
pub fn malformed_payload(schema: Schema, rng: &mut impl Rng) -> String {
    let mut xml = payload(schema, rng);
    xml.truncate(xml.len() / 2);
    xml
}

/// What a service does for one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Ok(String),
    Fail,
}

/// The deterministic behaviour of one service, advanced once per request.
#[derive(Debug)]
pub struct ServiceModel {
    schema: Schema,
    mode: Mode,
    rng: ChaCha8Rng,
}

impl ServiceModel {
    pub fn new(service: &MockService) -> ServiceModel {
        ServiceModel {
            schema: service.schema,
            mode: service.mode,
            rng: ChaCha8Rng::seed_from_u64(service.seed),
        }
    }

    pub fn next_reply(&mut self) -> Reply {
        match self.mode {
            Mode::Flaky { fail_probability } if self.rng.random_bool(fail_probability) => Reply::Fail,
            Mode::Malformed => Reply::Ok(malformed_payload(self.schema, &mut self.rng)),
            _ => Reply::Ok(payload(self.schema, &mut self.rng)),
        }
    }
}

#[derive(Clone)]
struct ServiceState {
    delay: Duration,
    model: Arc<Mutex<ServiceModel>>,
}

async fn info(State(s): State<ServiceState>) -> Response {
    if !s.delay.is_zero() {
        tokio::time::sleep(s.delay).await;
    }
    let reply = s.model.lock().unwrap_or_else(|p| p.into_inner()).next_reply();
    match reply {
        Reply::Ok(body) => ([(header::CONTENT_TYPE, "application/xml")], body).into_response(),
        Reply::Fail => (StatusCode::INTERNAL_SERVER_ERROR, "injected failure").into_response(),
    }
}

pub fn service_router(service: &MockService) -> Router {
    let delay = match service.mode {
        Mode::Slow { delay_ms } => Duration::from_millis(delay_ms),
        _ => Duration::ZERO,
    };
    let state = ServiceState {
        delay,
        model: Arc::new(Mutex::new(ServiceModel::new(service))),
    };
    Router::new().route("/info", get(info)).with_state(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunningService {
    pub name: String,
    pub schema: Schema,
    pub mode: Mode,
    pub addr: SocketAddr,
    pub url: String,
}

/// Mock services that stay up until this value is dropped.
#[derive(Debug)]
pub struct RunningGrid {
    pub services: Vec<RunningService>,
    tasks: JoinSet<()>,
}

impl RunningGrid {
    pub fn service(&self, name: &str) -> Option<&RunningService> {
        self.services.iter().find(|s| s.name == name)
    }

    pub async fn shutdown(mut self) {
        self.tasks.shutdown().await;
    }
}

/// Starts every service of `scenario` on `host`. Services in `down` mode
/// leave their port closed; with port 0 a free port is found and released.
pub async fn serve(scenario: &Scenario, host: IpAddr) -> io::Result<RunningGrid> {
    let mut services = Vec::new();
    let mut tasks = JoinSet::new();
    for service in &scenario.services {
        let listener = TcpListener::bind((host, service.port)).await;
        let addr = match service.mode {
            Mode::Down => match listener {
                Ok(l) => l.local_addr()?,
                Err(_) => SocketAddr::new(host, service.port),
            },
            _ => {
                let listener = listener?;
                let addr = listener.local_addr()?;
                let app = service_router(service);
                tasks.spawn(async move {
                    if let Err(e) = axum::serve(listener, app).await {
                        tracing::error!("mock service on {addr} stopped: {e}");
                    }
                });
                addr
            }
        };
        services.push(RunningService {
            name: service.name.clone(),
            schema: service.schema,
            mode: service.mode,
            addr,
            url: format!("http://{addr}/info"),
        });
    }
    Ok(RunningGrid { services, tasks })
}

pub async fn serve_local(scenario: &Scenario) -> io::Result<RunningGrid> {
    serve(scenario, IpAddr::V4(Ipv4Addr::LOCALHOST)).await
}
