//! Command line interface of the `gridwatch` binary.

use std::error::Error;
use std::io::{IsTerminal, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use gridwatch_core::{ResourceId, ResourcePatch};
use serde_json::{Map, Value};

use crate::gatherers::GathererRegistry;
use crate::monitor::{self, MonitorConfig};
use crate::server::{self, AppState, DEFAULT_LISTEN};
use crate::store::{self, Store};

pub type CliResult<T = ()> = Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "gridwatch", version, about = "Agentless resource monitor and map portal")]
pub struct Cli {
    /// Directory holding portal.json and state/.
    #[arg(long, global = true, env = "GRIDWATCH_STATE_DIR", default_value = "gridwatch-data")]
    pub state_dir: PathBuf,

    /// Gatherer registry file. Defaults to <state-dir>/gatherers.json when present.
    #[arg(long, global = true)]
    pub gatherers: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the HTTP API (and optionally the web UI).
    Serve {
        #[arg(long, default_value = DEFAULT_LISTEN)]
        listen: SocketAddr,
        /// Directory of static UI assets served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Monitor interval in seconds, used to flag stale information.
        #[arg(long, default_value_t = 30)]
        interval: u64,
    },
    /// Poll every resource, once or forever.
    Monitor {
        #[arg(long)]
        once: bool,
        /// Seconds between cycle starts.
        #[arg(long, default_value_t = 30)]
        interval: u64,
        /// Per-resource timeout in milliseconds.
        #[arg(long, default_value_t = 10_000)]
        timeout: u64,
        #[arg(long, default_value_t = 16)]
        max_concurrency: usize,
    },
    /// List resources.
    Ls,
    /// Add a resource by hostname and print its id.
    Add { hostname: String },
    /// Remove a resource and its gathered information.
    Rm { id: String },
    /// Change resource fields, e.g. `set ID type=http-xml lat=-37.8`.
    Set {
        id: String,
        #[arg(required = true, value_name = "KEY=VALUE")]
        assignments: Vec<String>,
    },
    /// Print portal.json.
    Export,
    /// Replace portal.json with FILE (`-` for standard input).
    Import { file: PathBuf },
}

/// Keys accepted by `set`.
pub const SET_KEYS: &[&str] = &["hostname", "port", "type", "label", "endpoint", "lat", "lon", "enabled"];

/// Turns `key=value` arguments into a resource patch.
pub fn parse_assignments(assignments: &[String]) -> CliResult<ResourcePatch> {
    let mut fields = Map::new();
    for a in assignments {
        let (key, raw) = a.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {a:?}"))?;
        let clear = raw.is_empty() || raw == "none";
        let value = match key {
            "hostname" | "type" | "label" => Value::from(raw),
            "endpoint" if clear => Value::Null,
            "endpoint" => Value::from(raw),
            "port" if clear => Value::Null,
            "port" => Value::from(
                raw.parse::<i64>()
                    .map_err(|_| format!("port must be an integer, got {raw:?}"))?,
            ),
            "lat" | "lon" => Value::from(
                raw.parse::<f64>()
                    .map_err(|_| format!("{key} must be a number, got {raw:?}"))?,
            ),
            "enabled" => Value::from(
                raw.parse::<bool>()
                    .map_err(|_| format!("enabled must be true or false, got {raw:?}"))?,
            ),
            _ => return Err(format!("unknown key {key:?} (expected one of {})", SET_KEYS.join(", ")).into()),
        };
        fields.insert(key.to_string(), value);
    }
    Ok(serde_json::from_value(Value::Object(fields))?)
}

fn parse_id(raw: &str) -> CliResult<ResourceId> {
    Ok(ResourceId::parse(raw)?)
}

fn registry(cli: &Cli) -> CliResult<GathererRegistry> {
    Ok(GathererRegistry::for_state_dir(&cli.state_dir, cli.gatherers.as_deref())?)
}

fn runtime() -> CliResult<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

async fn ctrl_c() {
    if tokio::signal::ctrl_c().await.is_err() {
        std::future::pending::<()>().await;
    }
}

/// Runs one command, writing its regular output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult {
    let store = Store::open(&cli.state_dir)?;
    match &cli.command {
        Command::Serve {
            listen,
            static_dir,
            interval,
        } => {
            let state = AppState::new(Arc::new(store), Arc::new(registry(cli)?), Duration::from_secs(*interval));
            let app = server::router(state, static_dir.as_deref());
            runtime()?.block_on(async {
                let listener = tokio::net::TcpListener::bind(listen).await?;
                tracing::info!("listening on http://{}", listener.local_addr()?);
                server::serve(listener, app, ctrl_c()).await
            })?;
        }
        Command::Monitor {
            once,
            interval,
            timeout,
            max_concurrency,
        } => {
            let config = MonitorConfig {
                interval: Duration::from_secs(*interval),
                per_resource_timeout: Duration::from_millis(*timeout),
                max_concurrency: *max_concurrency,
                once: *once,
            };
            let registry = registry(cli)?;
            let mut write_error = None;
            runtime()?.block_on(monitor::run_loop(&store, &registry, &config, ctrl_c(), |report| {
                let line = serde_json::to_string(report).expect("reports serialize");
                if let Err(e) = writeln!(out, "{line}").and_then(|()| out.flush()) {
                    write_error.get_or_insert(e);
                }
            }))?;
            if let Some(e) = write_error {
                return Err(e.into());
            }
        }
        Command::Ls => {
            for r in store.load_state()?.resources {
                let status = store.info_or_none(&r.id).map_or("UNKNOWN", |i| i.status.as_str());
                writeln!(out, "{}\t{}\t{}\t{}\t{}", r.id, r.hostname, r.resource_type, status, r.label)?;
            }
        }
        Command::Add { hostname } => {
            let id = ResourceId::from_u128(rand::random());
            let r = store.modify_state(|s| s.add_resource(hostname, id).cloned())?;
            writeln!(out, "{}", r.id)?;
        }
        Command::Rm { id } => store.delete_resource(&parse_id(id)?)?,
        Command::Set { id, assignments } => {
            let patch = parse_assignments(assignments)?;
            let id = parse_id(id)?;
            store.modify_state(|s| s.update_resource(&id, &patch).map(drop))?;
        }
        Command::Export => {
            let state = store.load_state()?;
            writeln!(out, "{}", serde_json::to_string_pretty(&state)?)?;
        }
        Command::Import { file } => {
            let text = if file == Path::new("-") {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            } else {
                std::fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?
            };
            let state = store::parse_state(file, &text)?;
            store.save_state(&state)?;
        }
    }
    Ok(())
}

pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .try_init();
}
