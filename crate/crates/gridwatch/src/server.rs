//! Portal HTTP API.
//!
//! | Method | Path                          | Body / result                    |
//! |--------|-------------------------------|----------------------------------|
//! | GET    | `/api/resources`              | `[{resource, status, stale, list_row_html}]` |
//! | POST   | `/api/resources`              | `{"hostname"}` → 201 resource    |
//! | PUT    | `/api/resources/{id}`         | patch → resource                 |
//! | DELETE | `/api/resources/{id}`         | 204                              |
//! | GET    | `/api/resources/{id}/popup`   | `text/html` fragment             |
//! | GET    | `/api/search?q=`              | `[id]`                           |
//! | GET    | `/api/map-config`             | map configuration                |
//! | PUT    | `/api/map-config`             | map configuration                |
//!
//! Every non-2xx response carries an [`ApiError`] body. The server reads
//! info files but only ever removes them, when a resource is deleted.

use std::collections::BTreeMap;
use std::future::Future;
use std::io;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path as UrlPath, Query, Request, State};
use axum::handler::HandlerWithoutStateExt;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, put};
use axum::{Json, Router};
use chrono::Utc;
use gridwatch_core::render;
use gridwatch_core::{MapConfig, ModelError, PortalState, Resource, ResourceId, ResourceInfo, ResourcePatch, ResourceStatus};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::gatherers::GathererRegistry;
use crate::store::{Store, StoreError};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8642";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub http_status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            http_status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        if e.is_not_found() {
            return ApiError::not_found(e.to_string());
        }
        match e {
            StoreError::Model(m) => ApiError::from(m),
            other => {
                tracing::error!("store error: {other}");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", other.to_string())
            }
        }
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> ApiError {
        if e.is_not_found() {
            ApiError::not_found(e.to_string())
        } else {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_error", e.to_string())
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        let code = match r {
            JsonRejection::JsonDataError(_) => "validation_error",
            JsonRejection::JsonSyntaxError(_) => "invalid_json",
            JsonRejection::MissingJsonContentType(_) => "unsupported_media_type",
            _ => "bad_request",
        };
        ApiError::new(r.status(), code, r.body_text())
    }
}

/// `Json` whose rejections are reported as [`ApiError`].
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(value) = Json::<T>::from_request(req, state).await?;
        Ok(ApiJson(value))
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub registry: Arc<GathererRegistry>,
    /// The monitor's poll interval, used to flag stale information.
    pub interval: chrono::Duration,
}

impl AppState {
    pub fn new(store: Arc<Store>, registry: Arc<GathererRegistry>, interval: std::time::Duration) -> AppState {
        AppState {
            store,
            registry,
            interval: chrono::Duration::from_std(interval).unwrap_or(chrono::Duration::MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub resource: Resource,
    pub status: ResourceStatus,
    pub stale: bool,
    pub list_row_html: String,
}

/// The list entry for one resource, composed from the model and renderer.
pub fn resource_entry(
    resource: &Resource,
    info: Option<&ResourceInfo>,
    registry: &GathererRegistry,
    now: chrono::DateTime<Utc>,
    interval: chrono::Duration,
) -> ResourceEntry {
    ResourceEntry {
        resource: resource.clone(),
        status: render::status_of(info),
        stale: render::is_stale(info, now, interval),
        list_row_html: render::render_list_row(resource, info, registry.styles(&resource.resource_type)),
    }
}

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/resources", get(list_resources).post(create_resource))
        .route("/api/resources/{id}", put(update_resource).delete(delete_resource))
        .route("/api/resources/{id}/popup", get(popup))
        .route("/api/search", get(search))
        .route("/api/map-config", get(get_map_config).put(put_map_config))
        .route("/api/{*rest}", axum::routing::any(not_found))
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).fallback(not_found.into_service())),
        None => api.fallback(not_found),
    }
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "method_not_allowed",
        "method not allowed for this route",
    )
}

fn parse_id(raw: &str) -> Result<ResourceId, ApiError> {
    ResourceId::parse(raw).map_err(|_| ApiError::not_found(format!("resource {raw:?} not found")))
}

fn require<'a>(state: &'a PortalState, id: &ResourceId) -> Result<&'a Resource, ApiError> {
    state.get(id).ok_or_else(|| ApiError::from(ModelError::NotFound(id.clone())))
}

async fn list_resources(State(app): State<AppState>) -> Result<Json<Vec<ResourceEntry>>, ApiError> {
    let state = app.store.load_state()?;
    let now = Utc::now();
    let entries = state
        .resources
        .iter()
        .map(|r| {
            let info = app.store.info_or_none(&r.id);
            resource_entry(r, info.as_ref(), &app.registry, now, app.interval)
        })
        .collect();
    Ok(Json(entries))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewResource {
    hostname: String,
}

async fn create_resource(
    State(app): State<AppState>,
    ApiJson(body): ApiJson<NewResource>,
) -> Result<(StatusCode, Json<Resource>), ApiError> {
    let id = ResourceId::from_u128(rand::random());
    let resource = app.store.modify_state(|s| s.add_resource(&body.hostname, id).cloned())?;
    Ok((StatusCode::CREATED, Json(resource)))
}

async fn update_resource(
    State(app): State<AppState>,
    UrlPath(raw): UrlPath<String>,
    ApiJson(patch): ApiJson<ResourcePatch>,
) -> Result<Json<Resource>, ApiError> {
    let id = parse_id(&raw)?;
    let resource = app.store.modify_state(|s| s.update_resource(&id, &patch).cloned())?;
    Ok(Json(resource))
}

async fn delete_resource(State(app): State<AppState>, UrlPath(raw): UrlPath<String>) -> Result<StatusCode, ApiError> {
    let id = parse_id(&raw)?;
    app.store.delete_resource(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn popup(State(app): State<AppState>, UrlPath(raw): UrlPath<String>) -> Result<Response, ApiError> {
    let id = parse_id(&raw)?;
    let state = app.store.load_state()?;
    let resource = require(&state, &id)?;
    let info = app.store.info_or_none(&id);
    let html = render::render_popup(resource, info.as_ref(), app.registry.styles(&resource.resource_type));
    Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response())
}

#[derive(Debug, Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
}

async fn search(State(app): State<AppState>, Query(query): Query<SearchQuery>) -> Result<Json<Vec<ResourceId>>, ApiError> {
    let state = app.store.load_state()?;
    let infos: BTreeMap<ResourceId, ResourceInfo> = state
        .resources
        .iter()
        .filter_map(|r| app.store.info_or_none(&r.id).map(|i| (r.id.clone(), i)))
        .collect();
    Ok(Json(gridwatch_core::search(&query.q, &state, |id| infos.get(id))))
}

async fn get_map_config(State(app): State<AppState>) -> Result<Json<MapConfig>, ApiError> {
    Ok(Json(app.store.load_state()?.map))
}

async fn put_map_config(State(app): State<AppState>, ApiJson(map): ApiJson<MapConfig>) -> Result<Json<MapConfig>, ApiError> {
    map.validate()?;
    let saved = app.store.modify_state(|s| {
        s.map = map;
        Ok(s.map.clone())
    })?;
    Ok(Json(saved))
}
