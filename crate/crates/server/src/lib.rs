//! On-demand sample service. Every response is a pure function of the
//! server config and the query, so any sample can be re-fetched by index.

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use angiosynth::appearance::{apply_cutout, CutoutParams};
use angiosynth::manifest::SampleClass;
use angiosynth::nifti::encode_volume;
use angiosynth::pipeline::{generate_single, DatasetConfig};
use angiosynth::rng::{rng_from_seed, substream};
use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

pub const BOUNDARY: &str = "angiosynth-sample-part";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    /// Growth, appearance and cutout settings; `master_seed` is the base
    /// seed for every request.
    pub dataset: DatasetConfig,
    pub max_concurrent: usize,
    /// Recent responses kept in memory; 0 disables the cache.
    pub cache_size: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            dataset: DatasetConfig::default(),
            max_concurrent: 4,
            cache_size: 64,
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<SocketAddr, String> {
        if self.max_concurrent == 0 {
            return Err("max_concurrent must be at least 1".into());
        }
        self.dataset.validate().map_err(|e| e.to_string())?;
        self.bind
            .parse()
            .map_err(|e| format!("bind address `{}`: {e}", self.bind))
    }
}

type CacheKey = (SampleClass, u64, bool);

#[derive(Default)]
struct Cache {
    map: HashMap<CacheKey, Bytes>,
    order: VecDeque<CacheKey>,
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<ServerConfig>,
    permits: Arc<Semaphore>,
    cache: Arc<Mutex<Cache>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        let permits = Arc::new(Semaphore::new(config.max_concurrent.max(1)));
        Self {
            config: Arc::new(config),
            permits,
            cache: Arc::default(),
        }
    }

    fn cached(&self, key: &CacheKey) -> Option<Bytes> {
        self.cache.lock().expect("cache lock").map.get(key).cloned()
    }

    fn remember(&self, key: CacheKey, body: Bytes) {
        let cap = self.config.cache_size;
        if cap == 0 {
            return;
        }
        let mut c = self.cache.lock().expect("cache lock");
        if c.map.insert(key, body).is_none() {
            c.order.push_back(key);
        }
        while c.order.len() > cap {
            if let Some(old) = c.order.pop_front() {
                c.map.remove(&old);
            }
        }
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct SampleQuery {
    pub class: String,
    pub index: u64,
    #[serde(default)]
    pub cutout: bool,
}

#[derive(Serialize)]
struct Metadata<'a> {
    class: SampleClass,
    index: u64,
    seed: u64,
    dims: [usize; 3],
    qc: &'a angiosynth::patchqc::QCReport,
    cutout: bool,
}

/// Appends one part of a `multipart/mixed` body.
fn push_part(body: &mut Vec<u8>, name: &str, content_type: &str, data: &[u8]) {
    body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
    body.extend_from_slice(format!("Content-Type: {content_type}\r\n").as_bytes());
    body.extend_from_slice(format!("Content-Disposition: inline; name=\"{name}\"\r\n\r\n").as_bytes());
    body.extend_from_slice(data);
    body.extend_from_slice(b"\r\n");
}

fn build_body(config: &DatasetConfig, class: SampleClass, index: u64, cutout: bool) -> Result<Vec<u8>, String> {
    let sample = generate_single(config, class, index).map_err(|e| e.to_string())?;
    let meta = Metadata {
        class,
        index,
        seed: sample.seed,
        dims: sample.label.dims().0,
        qc: &sample.qc,
        cutout,
    };
    let mut body = Vec::new();
    let meta = serde_json::to_vec(&meta).map_err(|e| e.to_string())?;
    push_part(&mut body, "metadata", "application/json", &meta);
    let enc = |r: angiosynth::Result<Vec<u8>>| r.map_err(|e| e.to_string());
    push_part(&mut body, "image", "application/gzip", &enc(encode_volume(&sample.image))?);
    push_part(&mut body, "label", "application/gzip", &enc(encode_volume(&sample.label))?);
    if cutout {
        let c = match sample.cutout {
            Some(c) => c,
            None => {
                let params = config.cutout.clone().unwrap_or_default();
                let mut rng = rng_from_seed(substream(sample.seed, 1));
                apply_cutout(&sample.image, &params, &mut rng).map_err(|e| e.to_string())?
            }
        };
        push_part(&mut body, "cutout_image", "application/gzip", &enc(encode_volume(&c.image))?);
        push_part(&mut body, "cutout_mask", "application/gzip", &enc(encode_volume(&c.mask))?);
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Ok(body)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn config(State(state): State<AppState>) -> Json<ServerConfig> {
    Json((*state.config).clone())
}

async fn sample(
    State(state): State<AppState>,
    query: Result<Query<SampleQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    let class: SampleClass = q
        .class
        .parse()
        .map_err(|e: angiosynth::Error| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    let key = (class, q.index, q.cutout);
    let body = match state.cached(&key) {
        Some(b) => b,
        None => {
            let _permit = state
                .permits
                .acquire()
                .await
                .map_err(|e| ApiError(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
            let cfg = Arc::clone(&state.config);
            let built = tokio::task::spawn_blocking(move || build_body(&cfg.dataset, class, q.index, q.cutout))
                .await
                .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
                .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e))?;
            let b = Bytes::from(built);
            state.remember(key, b.clone());
            b
        }
    };
    Ok((
        [(header::CONTENT_TYPE, format!("multipart/mixed; boundary={BOUNDARY}"))],
        body,
    )
        .into_response())
}

async fn not_found() -> ApiError {
    ApiError(StatusCode::NOT_FOUND, "no such endpoint".into())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/config", get(config))
        .route("/sample", get(sample))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), String> {
    let addr = config.validate()?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| format!("bind {addr}: {e}"))?;
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

/// A decoded body part.
#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub name: String,
    pub content_type: String,
    pub data: Vec<u8>,
}

/// Splits a body produced by this server back into its parts.
pub fn split_multipart(body: &[u8]) -> Result<Vec<Part>, String> {
    let delim = format!("--{BOUNDARY}");
    let mut parts = Vec::new();
    let mut rest = body;
    loop {
        rest = rest
            .strip_prefix(delim.as_bytes())
            .ok_or("missing boundary")?;
        if rest.starts_with(b"--") {
            return Ok(parts);
        }
        rest = rest.strip_prefix(b"\r\n").ok_or("malformed boundary line")?;
        let head_end = find(rest, b"\r\n\r\n").ok_or("unterminated part headers")?;
        let head = std::str::from_utf8(&rest[..head_end]).map_err(|e| e.to_string())?;
        rest = &rest[head_end + 4..];
        let mut name = String::new();
        let mut content_type = String::new();
        for line in head.split("\r\n") {
            if let Some(v) = line.strip_prefix("Content-Type: ") {
                content_type = v.to_string();
            } else if let Some(v) = line.strip_prefix("Content-Disposition: ") {
                if let Some(i) = v.find("name=\"") {
                    name = v[i + 6..].trim_end_matches('"').to_string();
                }
            }
        }
        let end_marker = format!("\r\n{delim}");
        let end = find(rest, end_marker.as_bytes()).ok_or("unterminated part")?;
        parts.push(Part {
            name,
            content_type,
            data: rest[..end].to_vec(),
        });
        rest = &rest[end + 2..];
    }
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}
