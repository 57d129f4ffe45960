//! HTTP JSON API.
//!
//! | method | path                                   | body / result                          |
//! |--------|----------------------------------------|----------------------------------------|
//! | PUT    | `/v1/videos`                           | JSON-lines embeddings → ingest counts  |
//! | POST   | `/v1/interactions`                     | one interaction → `{"stored": true}`   |
//! | POST   | `/v1/recommend`                        | request → `{"mode_used", "results"}`   |
//! | GET    | `/v1/users/{user_id}/representation`   | user representation or 404             |
//! | GET    | `/v1/health`                           | status, catalog size and dimension     |

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use mmrec_core::ranker::RankError;
use mmrec_core::{Interaction, RecommendationRequest};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ServiceConfig;
use crate::store::{Store, StoreError};

pub type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0)
    })
}

#[derive(Clone)]
struct AppState {
    store: Arc<Store>,
    clock: Clock,
}

pub fn router(store: Arc<Store>) -> Router {
    router_with_clock(store, system_clock())
}

pub fn router_with_clock(store: Arc<Store>, clock: Clock) -> Router {
    Router::new()
        .route("/v1/videos", put(put_videos))
        .route("/v1/interactions", post(post_interaction))
        .route("/v1/recommend", post(post_recommend))
        .route("/v1/users/{user_id}/representation", get(get_representation))
        .route("/v1/health", get(health))
        .with_state(AppState { store, clock })
}

/// Runs the service until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let listen = config.listen.clone();
    let store = Arc::new(tokio::task::spawn_blocking(move || Store::open(config)).await??);
    let listener = tokio::net::TcpListener::bind(&listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match serde_json::to_vec(body) {
        Ok(bytes) => (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    let body = json!({ "error": msg.into() });
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        body.to_string(),
    )
        .into_response()
}

fn store_error(e: StoreError) -> Response {
    let status = match &e {
        StoreError::EmptyCatalog => StatusCode::SERVICE_UNAVAILABLE,
        StoreError::Rank(RankError::NoScorableCandidates) => StatusCode::UNPROCESSABLE_ENTITY,
        StoreError::Rank(_) | StoreError::InvalidInteraction(_) => StatusCode::BAD_REQUEST,
        StoreError::Format(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    error(status, e.to_string())
}

async fn put_videos(State(app): State<AppState>, body: Bytes) -> Response {
    let text = match String::from_utf8(body.to_vec()) {
        Ok(t) => t,
        Err(_) => return error(StatusCode::BAD_REQUEST, "body is not UTF-8"),
    };
    let store = app.store.clone();
    match tokio::task::spawn_blocking(move || store.ingest(&text)).await {
        Ok(Ok(report)) => json_response(StatusCode::OK, &report),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn post_interaction(State(app): State<AppState>, body: Bytes) -> Response {
    let interaction: Interaction = match serde_json::from_slice(&body) {
        Ok(i) => i,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let store = app.store.clone();
    match tokio::task::spawn_blocking(move || store.record(interaction)).await {
        Ok(Ok(())) => json_response(StatusCode::OK, &json!({ "stored": true })),
        Ok(Err(e)) => store_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn post_recommend(State(app): State<AppState>, body: Bytes) -> Response {
    let request: RecommendationRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    match app.store.recommend(&request, (app.clock)()) {
        Ok(resp) => json_response(StatusCode::OK, &resp),
        Err(e) => store_error(e),
    }
}

#[derive(Deserialize)]
struct RepresentationQuery {
    mode: Option<String>,
}

async fn get_representation(
    State(app): State<AppState>,
    Path(user_id): Path<String>,
    Query(q): Query<RepresentationQuery>,
) -> Response {
    if let Some(mode) = q.mode.as_deref().filter(|m| *m != "history") {
        return error(
            StatusCode::BAD_REQUEST,
            format!("unsupported mode {mode:?}; only \"history\" is available"),
        );
    }
    if app.store.catalog().is_empty() {
        return error(StatusCode::SERVICE_UNAVAILABLE, "catalog is empty");
    }
    match app.store.representation(&user_id, (app.clock)()) {
        None => error(StatusCode::NOT_FOUND, format!("unknown user {user_id}")),
        Some(Ok(rep)) => json_response(StatusCode::OK, &rep),
        Some(Err(e)) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

async fn health(State(app): State<AppState>) -> Response {
    let catalog = app.store.catalog();
    json_response(
        StatusCode::OK,
        &json!({
            "status": "ok",
            "catalog_size": catalog.len(),
            "dim": catalog.dim().unwrap_or(0),
        }),
    )
}
