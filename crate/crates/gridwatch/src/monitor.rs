//! The poll scheduler.
//!
//! Each cycle re-reads the configuration, queries every enabled resource
//! through its registered gatherer with at most `max_concurrency` gathers in
//! flight, and records one info per resource. Cycles never overlap.

use std::future::Future;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use gridwatch_core::{Resource, ResourceId, ResourceInfo, ResourceStatus};
use serde::Serialize;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::gatherers::{Gatherer, GathererRegistry};
use crate::store::{Store, StoreError};

/// Extra time a gatherer gets beyond its timeout before it is abandoned.
pub const GRACE: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorConfig {
    pub interval: Duration,
    pub per_resource_timeout: Duration,
    pub max_concurrency: usize,
    pub once: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            interval: Duration::from_secs(30),
            per_resource_timeout: Duration::from_millis(10_000),
            max_concurrency: 16,
            once: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("interval must be at least 1 second")]
    Interval,
    #[error("max concurrency must be at least 1")]
    Concurrency,
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.interval < Duration::from_secs(1) {
            return Err(ConfigError::Interval);
        }
        if self.max_concurrency == 0 {
            return Err(ConfigError::Concurrency);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub id: ResourceId,
    pub status: ResourceStatus,
    pub duration_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub outcomes: Vec<Outcome>,
}

impl CycleReport {
    pub fn count(&self, status: ResourceStatus) -> usize {
        self.outcomes.iter().filter(|o| o.status == status).count()
    }
}

/// How a resource was handled in a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GatherOutcome {
    Success,
    Failed(String),
    TimedOut,
    Malformed(String),
    Skipped(SkipReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    Unconfigured,
    Unregistered,
    Disabled,
}

pub fn derive_status(outcome: &GatherOutcome) -> ResourceStatus {
    match outcome {
        GatherOutcome::Success => ResourceStatus::Up,
        GatherOutcome::Failed(_) | GatherOutcome::TimedOut | GatherOutcome::Malformed(_) => ResourceStatus::Down,
        GatherOutcome::Skipped(_) => ResourceStatus::Unknown,
    }
}

fn classify(info: &ResourceInfo) -> GatherOutcome {
    let error = info.error.clone().unwrap_or_default();
    match info.status {
        ResourceStatus::Up => GatherOutcome::Success,
        _ if error.starts_with("invalid payload") => GatherOutcome::Malformed(error),
        _ if error.contains("timed out") => GatherOutcome::TimedOut,
        _ => GatherOutcome::Failed(error),
    }
}

/// Replaces whatever a gatherer returned with an info that satisfies the
/// info invariants and belongs to `id`.
fn sanitize(id: &ResourceId, mut info: ResourceInfo, latency_ms: u64) -> ResourceInfo {
    info.resource_id = id.clone();
    if info.status == ResourceStatus::Unknown {
        info.status = ResourceStatus::Down;
    }
    match info.validate() {
        Ok(()) => info,
        Err(e) => ResourceInfo::down(
            id.clone(),
            format!("gatherer returned an invalid result: {e}"),
            Utc::now(),
            latency_ms,
        ),
    }
}

async fn gather_one(gatherer: Arc<dyn Gatherer>, resource: Resource, timeout: Duration) -> (ResourceInfo, GatherOutcome) {
    let id = resource.id.clone();
    let start = Instant::now();
    let mut task = tokio::spawn(async move { gatherer.gather(&resource, timeout).await });
    let joined = tokio::time::timeout(timeout + GRACE, &mut task).await;
    let latency = crate::gatherers::elapsed_ms(start);
    match joined {
        Ok(Ok(info)) => {
            let info = sanitize(&id, info, latency);
            let outcome = classify(&info);
            (info, outcome)
        }
        Ok(Err(e)) => {
            let message = if e.is_panic() {
                "gatherer failed: internal fault".to_string()
            } else {
                "gatherer failed: task cancelled".to_string()
            };
            (
                ResourceInfo::down(id, message.clone(), Utc::now(), latency),
                GatherOutcome::Failed(message),
            )
        }
        Err(_) => {
            task.abort();
            let message = format!("gatherer did not return within {} ms", timeout.as_millis());
            (ResourceInfo::down(id, message, Utc::now(), latency), GatherOutcome::TimedOut)
        }
    }
}

/// Runs one poll cycle. Fails only if the configuration cannot be read.
pub async fn run_cycle(store: &Store, registry: &GathererRegistry, config: &MonitorConfig) -> Result<CycleReport, StoreError> {
    let started_at = Utc::now();
    let state = store.load_state()?;
    prune_orphans(store, &state.resources);

    let permits = Arc::new(Semaphore::new(config.max_concurrency.max(1)));
    let mut tasks = JoinSet::new();
    let mut outcomes: Vec<Option<Outcome>> = vec![None; state.resources.len()];

    for (index, resource) in state.resources.iter().enumerate() {
        if !resource.enabled {
            continue;
        }
        let skip = if resource.is_unconfigured() {
            Some((SkipReason::Unconfigured, "resource type is unconfigured".to_string()))
        } else {
            match registry.lookup(&resource.resource_type) {
                Ok(gatherer) => {
                    let permits = Arc::clone(&permits);
                    let resource = resource.clone();
                    let timeout = config.per_resource_timeout;
                    tasks.spawn(async move {
                        let _permit = permits.acquire_owned().await.expect("semaphore is never closed");
                        let start = Instant::now();
                        let (info, outcome) = gather_one(gatherer, resource, timeout).await;
                        (index, info, outcome, crate::gatherers::elapsed_ms(start))
                    });
                    None
                }
                Err(e) => Some((SkipReason::Unregistered, e.to_string())),
            }
        };
        if let Some((reason, message)) = skip {
            let info = ResourceInfo::unknown(resource.id.clone(), message, Utc::now());
            outcomes[index] = Some(record(store, info, GatherOutcome::Skipped(reason), 0));
        }
    }

    while let Some(joined) = tasks.join_next().await {
        let (index, info, outcome, duration) = joined.expect("gather tasks catch their own panics");
        outcomes[index] = Some(record(store, info, outcome, duration));
    }

    Ok(CycleReport {
        started_at,
        finished_at: Utc::now(),
        outcomes: outcomes.into_iter().flatten().collect(),
    })
}

fn record(store: &Store, info: ResourceInfo, outcome: GatherOutcome, duration_ms: u64) -> Outcome {
    if let Err(e) = store.record_info(&info) {
        tracing::error!(resource = %info.resource_id, "could not record info: {e}");
    }
    Outcome {
        id: info.resource_id,
        status: derive_status(&outcome),
        duration_ms,
        error: info.error,
    }
}

/// Removes info files of resources that are no longer configured.
fn prune_orphans(store: &Store, resources: &[Resource]) {
    let ids = match store.info_ids() {
        Ok(ids) => ids,
        Err(e) => {
            tracing::warn!("could not list info files: {e}");
            return;
        }
    };
    for id in ids {
        if !resources.iter().any(|r| r.id == id) {
            if let Err(e) = store.delete_info(&id) {
                tracing::warn!("could not remove info for deleted resource {id}: {e}");
            }
        }
    }
}

/// Runs cycles every `config.interval`, measured start to start, until
/// `shutdown` completes. A cycle that overruns the interval is followed
/// immediately by the next one. With `config.once` a single cycle runs.
/// In-flight gathers are abandoned on shutdown.
pub async fn run_loop<F>(
    store: &Store,
    registry: &GathererRegistry,
    config: &MonitorConfig,
    shutdown: F,
    mut on_report: impl FnMut(&CycleReport),
) -> Result<(), ConfigError>
where
    F: Future<Output = ()>,
{
    config.validate()?;
    tokio::pin!(shutdown);
    loop {
        let start = tokio::time::Instant::now();
        tokio::select! {
            biased;
            () = &mut shutdown => return Ok(()),
            result = run_cycle(store, registry, config) => match result {
                Ok(report) => on_report(&report),
                Err(e) => tracing::error!("cycle aborted: {e}"),
            },
        }
        if config.once {
            return Ok(());
        }
        tokio::select! {
            biased;
            () = &mut shutdown => return Ok(()),
            () = tokio::time::sleep_until(start + config.interval) => {}
        }
    }
}
