//! HTTP API for browsing a nervetrace dataset and driving live annotation
//! sessions from the review UI.
//!
//! | Method | Path | Body |
//! |---|---|---|
//! | GET | `/videos` | |
//! | GET | `/videos/{id}` | |
//! | GET | `/videos/{id}/frames/{i}` | (PNG response) |
//! | GET | `/videos/{id}/ground_truth/{i}` | |
//! | POST | `/videos/{id}/session` | |
//! | GET | `/sessions/{s}` | |
//! | POST | `/sessions/{s}/seed` | `{frame, boxes}` |
//! | POST | `/sessions/{s}/propagate` | `{count, direction?}` |
//! | GET | `/sessions/{s}/pending` | |
//! | POST | `/sessions/{s}/frames/{i}/verdict` | `{verdict}` |
//! | POST | `/sessions/{s}/frames/{i}/proposals` | `{grid?}` |
//! | POST | `/sessions/{s}/frames/{i}/commit` | `{params, mask}` |
//!
//! Masks travel as [`RlePayload`](nervetrace::RlePayload). Each session
//! holds its video's write lock and appends to the video's event log, so a
//! restarted server resumes a session by replaying that log.

mod error;
mod handlers;
mod sessions;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::http::HeaderValue;
use axum::routing::{get, post};
use axum::Router;
use nervetrace::dataset::Dataset;
use nervetrace::tracker::KcfParams;
use tower_http::cors::{Any, CorsLayer};

pub use error::{ApiError, ApiResult};
pub use handlers::{
    CommitRequest, FrameView, GroundTruthView, PropagateRequest, Proposal, ProposalsRequest,
    SeedRequest, SessionView, VerdictRequest, VideoView,
};

/// Largest proposal grid a single request may ask for.
pub const MAX_PROPOSAL_GRID: usize = 24;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Origins allowed by CORS; empty allows any origin.
    pub allowed_origins: Vec<String>,
    pub kcf: KcfParams,
    /// Time limit for one proposals request.
    pub proposal_budget: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            allowed_origins: Vec::new(),
            kcf: KcfParams::default(),
            proposal_budget: Duration::from_secs(10),
        }
    }
}

pub(crate) struct AppState {
    dataset: Dataset,
    config: ServerConfig,
    sessions: sessions::Registry,
}

/// Builds the application router over `dataset`.
pub fn router(dataset: Dataset, config: ServerConfig) -> Router {
    let cors = cors_layer(&config.allowed_origins);
    let state = Arc::new(AppState {
        dataset,
        config,
        sessions: sessions::Registry::default(),
    });
    Router::new()
        .route("/videos", get(handlers::list_videos))
        .route("/videos/{id}", get(handlers::get_video))
        .route("/videos/{id}/frames/{idx}", get(handlers::get_frame))
        .route(
            "/videos/{id}/ground_truth/{idx}",
            get(handlers::get_ground_truth),
        )
        .route("/videos/{id}/session", post(handlers::open_session))
        .route("/sessions/{sid}", get(handlers::get_session))
        .route("/sessions/{sid}/seed", post(handlers::seed))
        .route("/sessions/{sid}/propagate", post(handlers::propagate))
        .route("/sessions/{sid}/pending", get(handlers::pending))
        .route(
            "/sessions/{sid}/frames/{idx}/verdict",
            post(handlers::verdict),
        )
        .route(
            "/sessions/{sid}/frames/{idx}/proposals",
            post(handlers::proposals),
        )
        .route(
            "/sessions/{sid}/frames/{idx}/commit",
            post(handlers::commit),
        )
        .layer(cors)
        .with_state(state)
}

fn cors_layer(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if origins.is_empty() {
        return layer.allow_origin(Any);
    }
    let values: Vec<HeaderValue> = origins
        .iter()
        .filter_map(|o| match HeaderValue::from_str(o) {
            Ok(v) => Some(v),
            Err(_) => {
                log::warn!("ignoring invalid CORS origin {o:?}");
                None
            }
        })
        .collect();
    layer.allow_origin(values)
}

/// Serves the API on `addr` until Ctrl-C.
pub async fn serve(
    addr: SocketAddr,
    dataset: Dataset,
    config: ServerConfig,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(dataset, config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
