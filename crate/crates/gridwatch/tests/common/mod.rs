#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use chrono::Utc;
use gridwatch::core::{Resource, ResourceId, ResourceInfo, ResourcePatch};
use gridwatch::gatherers::Gatherer;
use gridwatch::gatherers::GathererRegistry;
use gridwatch::server::{self, AppState};
use gridwatch::simgrid::{MockService, Mode, RunningGrid, Scenario, Schema};
use gridwatch::store::Store;
use tokio::sync::oneshot;


pub fn assets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Copies the shipped gatherers.json and stylesheets into `dir`.
pub fn install_assets(dir: &Path) {
    copy_tree(&assets_dir(), dir);
}

pub fn asset_registry() -> GathererRegistry {
    GathererRegistry::from_config_file(&assets_dir().join("gatherers.json")).unwrap()
}

pub fn service(name: &str, schema: Schema, mode: Mode, seed: u64) -> MockService {
    MockService {
        name: name.to_string(),
        port: 0,
        schema,
        mode,
        seed,
    }
}

pub fn scenario(services: Vec<MockService>) -> Scenario {
    let s = Scenario { services };
    s.validate().unwrap();
    s
}

/// Adds one http-xml resource per running service, typed by its schema.
/// Resource ids are 1, 2, 3, … in service order.
pub fn configure_grid(store: &Store, grid: &RunningGrid) -> Vec<ResourceId> {
    let mut ids = Vec::new();
    store
        .modify_state(|s| {
            for (i, svc) in grid.services.iter().enumerate() {
                let id = ResourceId::from_u128(i as u128 + 1);
                s.add_resource(&svc.addr.ip().to_string(), id.clone())?;
                let patch = ResourcePatch {
                    resource_type: Some(svc.schema.name().to_string()),
                    endpoint: Some(Some(svc.url.clone())),
                    label: Some(svc.name.clone()),
                    ..ResourcePatch::default()
                };
                s.update_resource(&id, &patch)?;
                ids.push(id);
            }
            Ok(())
        })
        .unwrap();
    ids
}

pub fn client() -> reqwest::Client {
    reqwest::Client::builder()
        .no_proxy()
        .timeout(Duration::from_secs(10))
        .build()
        .unwrap()
}

pub struct TestServer {
    pub base: String,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

pub async fn start_server(store: Arc<Store>, registry: Arc<GathererRegistry>, static_dir: Option<&Path>) -> TestServer {
    let state = AppState::new(store, registry, Duration::from_secs(30));
    let app = server::router(state, static_dir);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        server::serve(listener, app, async {
            let _ = rx.await;
        })
        .await
        .unwrap();
    });
    TestServer {
        base: format!("http://{addr}"),
        stop: Some(tx),
        task,
    }
}

pub struct Reply {
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

pub async fn request(method: reqwest::Method, url: &str, body: Option<&str>) -> Reply {
    let mut req = client().request(method, url);
    if let Some(b) = body {
        req = req.header("content-type", "application/json").body(b.to_string());
    }
    let resp = req.send().await.unwrap();
    let status = resp.status().as_u16();
    let content_type = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    Reply {
        status,
        content_type,
        body: resp.text().await.unwrap(),
    }
}

pub async fn get(url: &str) -> Reply {
    request(reqwest::Method::GET, url, None).await
}

/// Whether `value` is exactly `{http_status, code, message}` with a
/// matching status.
pub fn is_api_error(value: &serde_json::Value, status: u16) -> bool {
    let Some(obj) = value.as_object() else { return false };
    obj.len() == 3
        && obj.get("http_status").and_then(|v| v.as_u64()) == Some(u64::from(status))
        && obj.get("code").is_some_and(|v| v.as_str().is_some_and(|s| !s.is_empty()))
        && obj.get("message").is_some_and(|v| v.is_string())
}

/// Counts gathers in flight and remembers the peak.
#[derive(Default)]
pub struct Instrumented {
    pub current: AtomicUsize,
    pub peak: AtomicUsize,
    pub calls: AtomicUsize,
    pub delay: Duration,
}

struct Exit<'a>(&'a AtomicUsize);

impl Drop for Exit<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

#[async_trait]
impl Gatherer for Instrumented {
    async fn gather(&self, resource: &Resource, _: Duration) -> ResourceInfo {
        let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
        let _exit = Exit(&self.current);
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        tokio::time::sleep(self.delay).await;
        ResourceInfo::up(resource.id.clone(), "<ok/>".into(), Utc::now(), 0)
    }
}
