//! HTTP prediction service over a loaded [`Model`].
//!
//! Routes:
//!
//! - `POST /predict` takes a form field or JSON object with `url` and answers
//!   with the predicted class, its confidence and the full distribution.
//! - `POST /predict-batch` takes `{"urls": [...]}` (1 to 1000 items) and
//!   answers with one result per item, in order; bad items carry an inline
//!   `{"error": ...}`.
//! - `GET /health` reports whether a model is loaded.
//!
//! When a static directory is configured its files are served for every
//! other path, with `index.html` at `/`.

use std::collections::BTreeMap;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::{info, warn};
use phishscan_core::{Model, Prediction, UrlClass};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

/// Largest accepted `/predict-batch` request.
pub const MAX_BATCH: usize = 1000;

/// Shared, read-only handler state.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    model: Option<Arc<Model>>,
}

impl AppState {
    pub fn new(model: Model) -> Self {
        Self {
            model: Some(Arc::new(model)),
        }
    }

    /// A state with no model; prediction routes answer 503.
    pub fn unloaded() -> Self {
        Self::default()
    }

    /// Loads the model file, falling back to the unloaded state (with a
    /// warning) if it is missing or unreadable.
    pub fn from_path(path: &Path) -> Self {
        match Model::load(path) {
            Ok(model) => {
                info!("loaded model from {}", path.display());
                Self::new(model)
            }
            Err(e) => {
                warn!("no model loaded from {}: {e}", path.display());
                Self::unloaded()
            }
        }
    }

    pub fn model_loaded(&self) -> bool {
        self.model.is_some()
    }
}

/// Wire form of one prediction. Class names are the lowercase labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub prediction: UrlClass,
    pub confidence: f64,
    pub probabilities: BTreeMap<UrlClass, f64>,
}

impl From<Prediction> for PredictResponse {
    fn from(p: Prediction) -> Self {
        Self {
            prediction: p.label,
            confidence: f64::from(p.confidence),
            probabilities: UrlClass::ALL
                .iter()
                .map(|&c| (c, f64::from(p.probabilities[c.code()])))
                .collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct SingleRequest {
    url: Option<String>,
}

#[derive(Debug, Deserialize)]
struct BatchRequest {
    urls: Vec<String>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum BatchItem {
    Ok(PredictResponse),
    Err { error: String },
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn loaded_model(state: &AppState) -> Result<Arc<Model>, ApiError> {
    state
        .model
        .clone()
        .ok_or_else(|| ApiError(StatusCode::SERVICE_UNAVAILABLE, "model not loaded".into()))
}

fn is_form(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/x-www-form-urlencoded"))
}

fn predict_one(model: &Model, url: &str) -> Result<PredictResponse, String> {
    model
        .predict(url)
        .map(PredictResponse::from)
        .map_err(|e| e.to_string())
}

async fn predict(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<PredictResponse>, ApiError> {
    let model = loaded_model(&state)?;
    let request: SingleRequest = if is_form(&headers) {
        serde_urlencoded::from_bytes(&body)
            .map_err(|e| bad_request(format!("bad form body: {e}")))?
    } else {
        serde_json::from_slice(&body).map_err(|e| bad_request(format!("bad JSON body: {e}")))?
    };
    let url = request
        .url
        .ok_or_else(|| bad_request("missing field `url`"))?;
    predict_one(&model, &url).map(Json).map_err(bad_request)
}

async fn predict_batch(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let model = loaded_model(&state)?;
    let request: BatchRequest =
        serde_json::from_slice(&body).map_err(|e| bad_request(format!("bad JSON body: {e}")))?;
    let n = request.urls.len();
    if n == 0 {
        return Err(bad_request("`urls` must not be empty"));
    }
    if n > MAX_BATCH {
        return Err(bad_request(format!(
            "`urls` has {n} items, limit is {MAX_BATCH}"
        )));
    }
    let results = tokio::task::spawn_blocking(move || {
        request
            .urls
            .iter()
            .map(|u| match predict_one(&model, u) {
                Ok(r) => BatchItem::Ok(r),
                Err(error) => BatchItem::Err { error },
            })
            .collect::<Vec<_>>()
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(json!({ "results": results })))
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "model_loaded": state.model_loaded() }))
}

/// Builds the application router.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/predict", post(predict))
        .route("/predict-batch", post(predict_batch))
        .route("/health", get(health))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves `app` on an already bound listener until Ctrl-C.
pub async fn serve_on(listener: TcpListener, app: Router) -> io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(
    addr: SocketAddr,
    state: AppState,
    static_dir: Option<PathBuf>,
) -> io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    info!("listening on http://{}", listener.local_addr()?);
    serve_on(listener, router(state, static_dir)).await
}
