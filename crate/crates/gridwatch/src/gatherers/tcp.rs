use std::time::{Duration, Instant};

use async_trait::async_trait;
use chrono::Utc;
use gridwatch_core::escape;
use gridwatch_core::{Resource, ResourceInfo};
use tokio::net::TcpStream;

use super::{elapsed_ms, Gatherer};

/// Reports a resource UP when a TCP connection to `hostname:port` succeeds.
#[derive(Debug, Clone, Copy, Default)]
pub struct TcpProbeGatherer;

#[async_trait]
impl Gatherer for TcpProbeGatherer {
    async fn gather(&self, resource: &Resource, timeout: Duration) -> ResourceInfo {
        let id = resource.id.clone();
        let Some(port) = resource.port else {
            return ResourceInfo::down(id, "port required", Utc::now(), 0);
        };
        let start = Instant::now();
        let connect = TcpStream::connect((resource.hostname.as_str(), port));
        let outcome = tokio::time::timeout(timeout, connect).await;
        let latency = elapsed_ms(start);
        match outcome {
            Ok(Ok(_stream)) => {
                let payload = format!(
                    "<tcp-probe><host>{}</host><port>{port}</port><latency-ms>{latency}</latency-ms></tcp-probe>",
                    escape::text(&resource.hostname)
                );
                ResourceInfo::up(id, payload, Utc::now(), latency)
            }
            Ok(Err(e)) => ResourceInfo::down(id, format!("connection failed: {e}"), Utc::now(), latency),
            Err(_) => ResourceInfo::down(
                id,
                format!("connection timed out after {} ms", timeout.as_millis()),
                Utc::now(),
                latency,
            ),
        }
    }
}
