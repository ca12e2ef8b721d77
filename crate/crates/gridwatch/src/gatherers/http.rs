use std::time::{Duration, Instant};

use async_trait::async_trait;
use chrono::Utc;
use gridwatch_core::{Document, Resource, ResourceInfo};

use super::{elapsed_ms, Gatherer};

/// Fetches `resource.endpoint` over plain HTTP and reports the body as the
/// payload when the response is 200 and well-formed XML.
#[derive(Debug, Clone)]
pub struct HttpXmlGatherer {
    client: reqwest::Client,
}

impl Default for HttpXmlGatherer {
    fn default() -> Self {
        HttpXmlGatherer::new()
    }
}

impl HttpXmlGatherer {
    pub fn new() -> HttpXmlGatherer {
        let client = reqwest::Client::builder()
            .no_proxy()
            .build()
            .expect("HTTP client without TLS or proxies");
        HttpXmlGatherer { client }
    }

    async fn fetch(&self, url: &str) -> Result<String, String> {
        let response = self.client.get(url).send().await.map_err(describe)?;
        let status = response.status();
        if status != reqwest::StatusCode::OK {
            return Err(format!("HTTP {}", status.as_u16()));
        }
        let body = response.text().await.map_err(describe)?;
        Document::parse(&body).map_err(|e| format!("invalid payload: {e}"))?;
        Ok(body)
    }
}

fn describe(e: reqwest::Error) -> String {
    let mut message = e.to_string();
    let mut source = std::error::Error::source(&e);
    while let Some(s) = source {
        message = format!("{message}: {s}");
        source = s.source();
    }
    if e.is_connect() {
        format!("connection failed: {message}")
    } else {
        format!("request failed: {message}")
    }
}

#[async_trait]
impl Gatherer for HttpXmlGatherer {
    async fn gather(&self, resource: &Resource, timeout: Duration) -> ResourceInfo {
        let id = resource.id.clone();
        let Some(url) = resource.endpoint.as_deref().filter(|e| !e.is_empty()) else {
            return ResourceInfo::down(id, "endpoint required", Utc::now(), 0);
        };
        if !url.starts_with("http://") {
            return ResourceInfo::down(id, "endpoint must be an http:// URL", Utc::now(), 0);
        }
        let start = Instant::now();
        let outcome = tokio::time::timeout(timeout, self.fetch(url)).await;
        let latency = elapsed_ms(start);
        match outcome {
            Ok(Ok(body)) => ResourceInfo::up(id, body, Utc::now(), latency),
            Ok(Err(e)) => ResourceInfo::down(id, e, Utc::now(), latency),
            Err(_) => ResourceInfo::down(
                id,
                format!("request timed out after {} ms", timeout.as_millis()),
                Utc::now(),
                latency,
            ),
        }
    }
}
