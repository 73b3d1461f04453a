use std::sync::Arc;

use axum::body::Body;
use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use nervetrace::annotation::{Direction, FrameState, Propagated, Verdict};
use nervetrace::contour::{default_proposal_grid, GacParams};
use nervetrace::dataset::{FrameSource, FrameStatus, Provenance, VideoLabels, VideoRecord};
use nervetrace::{BoundingBox, RlePayload};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::sessions::{Inner, LiveSession};
use crate::{AppState, MAX_PROPOSAL_GRID};

type AppStateRef = State<Arc<AppState>>;

/// JSON body whose rejections are reported as 400.
pub(crate) struct JsonBody<T>(pub T);

impl<S, T> FromRequest<S> for JsonBody<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| JsonBody(v))
            .map_err(|r| ApiError::bad_request(r.body_text()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoView {
    pub record: VideoRecord,
    pub labels: VideoLabels,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub video_id: String,
    pub n_frames: usize,
    pub width: u32,
    pub height: u32,
    /// True when the session was rebuilt from an existing event log.
    pub resumed: bool,
    pub direction: Direction,
    pub cursor: Option<usize>,
    pub active_trackers: usize,
    pub review_queue: Vec<usize>,
    pub states: Vec<FrameState>,
}

/// One frame's annotation state, e.g. `{"frame_idx": 3, "state": "approved", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameView {
    pub frame_idx: usize,
    #[serde(flatten)]
    pub state: FrameState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthView {
    pub frame_idx: usize,
    /// `None` for frames that have not been labelled.
    pub status: Option<FrameStatus>,
    pub provenance: Option<Provenance>,
    pub gac_params: Option<GacParams>,
    pub mask: Option<RlePayload>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRequest {
    pub frame: usize,
    pub boxes: Vec<BoundingBox>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagateRequest {
    pub count: usize,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRequest {
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProposalsRequest {
    /// Defaults to the built-in grid when absent.
    #[serde(default)]
    pub grid: Option<Vec<GacParams>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Proposal {
    pub params: GacParams,
    pub mask: RlePayload,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommitRequest {
    pub params: GacParams,
    pub mask: RlePayload,
}

fn session_view(live: &LiveSession, inner: &Inner) -> SessionView {
    let s = &inner.session;
    let (width, height) = s.dims();
    SessionView {
        session_id: live.id.clone(),
        video_id: s.video_id().to_string(),
        n_frames: s.n_frames(),
        width,
        height,
        resumed: live.resumed,
        direction: s.direction(),
        cursor: s.cursor(),
        active_trackers: s.active_trackers(),
        review_queue: s.review_queue().iter().copied().collect(),
        states: s.states().to_vec(),
    }
}

fn frame_view(inner: &Inner, idx: usize) -> FrameView {
    FrameView {
        frame_idx: idx,
        state: inner.session.states()[idx].clone(),
    }
}

fn check_frame(n_frames: usize, idx: usize) -> ApiResult<()> {
    if idx >= n_frames {
        return Err(ApiError::not_found(format!(
            "frame {idx} out of range for {n_frames} frames"
        )));
    }
    Ok(())
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

/// Runs `f` on a blocking thread with exclusive access to the session.
async fn mutate<T, F>(live: &LiveSession, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&mut Inner, &nervetrace::dataset::VideoFrames) -> ApiResult<T> + Send + 'static,
{
    let mut guard = live.try_write()?;
    let frames = live.frames.clone();
    tokio::task::spawn_blocking(move || f(&mut guard, &frames))
        .await
        .map_err(internal)?
}

pub(crate) async fn list_videos(State(app): AppStateRef) -> ApiResult<Json<Vec<VideoRecord>>> {
    Ok(Json(app.dataset.manifest()?.videos))
}

pub(crate) async fn get_video(
    State(app): AppStateRef,
    Path(id): Path<String>,
) -> ApiResult<Json<VideoView>> {
    let record = app.dataset.video(&id)?;
    let labels = app.dataset.labels(&id)?;
    Ok(Json(VideoView { record, labels }))
}

/// The stored PNG, byte for byte.
pub(crate) async fn get_frame(
    State(app): AppStateRef,
    Path((id, idx)): Path<(String, usize)>,
) -> ApiResult<Response> {
    let record = app.dataset.video(&id)?;
    check_frame(record.n_frames, idx)?;
    let path = app.dataset.frame_path(&id, idx);
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| internal(format!("{}: {e}", path.display())))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], Body::from(bytes)).into_response())
}

pub(crate) async fn get_ground_truth(
    State(app): AppStateRef,
    Path((id, idx)): Path<(String, usize)>,
) -> ApiResult<Json<GroundTruthView>> {
    let record = app.dataset.video(&id)?;
    check_frame(record.n_frames, idx)?;
    let labels = app.dataset.labels(&id)?;
    let label = labels.get(idx);
    let mask = app.dataset.mask(&id, idx)?.map(|m| m.to_rle());
    Ok(Json(GroundTruthView {
        frame_idx: idx,
        status: label.map(|l| l.status),
        provenance: label.map(|l| l.provenance),
        gac_params: label.and_then(|l| l.gac_params.clone()),
        mask,
    }))
}

pub(crate) async fn open_session(
    State(app): AppStateRef,
    Path(id): Path<String>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let (live, created) = app
        .sessions
        .open(&app.dataset, &id, &app.config.kcf)
        .await?;
    let inner = live.read().await;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(session_view(&live, &inner))))
}

pub(crate) async fn get_session(
    State(app): AppStateRef,
    Path(sid): Path<String>,
) -> ApiResult<Json<SessionView>> {
    let live = app.sessions.get(&sid).await?;
    let inner = live.read().await;
    Ok(Json(session_view(&live, &inner)))
}

pub(crate) async fn seed(
    State(app): AppStateRef,
    Path(sid): Path<String>,
    JsonBody(req): JsonBody<SeedRequest>,
) -> ApiResult<Json<SessionView>> {
    let live = app.sessions.get(&sid).await?;
    if req.frame >= live.frames.n_frames() {
        return Err(ApiError::bad_request(format!(
            "seed frame {} out of range for {} frames",
            req.frame,
            live.frames.n_frames()
        )));
    }
    mutate(&live, move |inner, frames| {
        inner
            .session
            .set_seed(frames, &mut inner.writer, req.frame, &req.boxes)?;
        Ok(())
    })
    .await?;
    let inner = live.read().await;
    Ok(Json(session_view(&live, &inner)))
}

pub(crate) async fn propagate(
    State(app): AppStateRef,
    Path(sid): Path<String>,
    JsonBody(req): JsonBody<PropagateRequest>,
) -> ApiResult<Json<Vec<Propagated>>> {
    let live = app.sessions.get(&sid).await?;
    let out = mutate(&live, move |inner, frames| {
        Ok(inner
            .session
            .propagate_in(frames, req.count, req.direction)?)
    })
    .await?;
    Ok(Json(out))
}

pub(crate) async fn pending(
    State(app): AppStateRef,
    Path(sid): Path<String>,
) -> ApiResult<Json<Vec<FrameView>>> {
    let live = app.sessions.get(&sid).await?;
    let inner = live.read().await;
    let out = inner
        .session
        .pending()
        .into_iter()
        .map(|(i, s)| FrameView {
            frame_idx: i,
            state: s.clone(),
        })
        .collect();
    Ok(Json(out))
}

pub(crate) async fn verdict(
    State(app): AppStateRef,
    Path((sid, idx)): Path<(String, usize)>,
    JsonBody(req): JsonBody<VerdictRequest>,
) -> ApiResult<Json<FrameView>> {
    let live = app.sessions.get(&sid).await?;
    check_frame(live.frames.n_frames(), idx)?;
    let view = mutate(&live, move |inner, _| {
        inner.session.review(&mut inner.writer, idx, req.verdict)?;
        Ok(frame_view(inner, idx))
    })
    .await?;
    Ok(Json(view))
}

pub(crate) async fn proposals(
    State(app): AppStateRef,
    Path((sid, idx)): Path<(String, usize)>,
    JsonBody(req): JsonBody<ProposalsRequest>,
) -> ApiResult<Json<Vec<Proposal>>> {
    let live = app.sessions.get(&sid).await?;
    check_frame(live.frames.n_frames(), idx)?;
    let grid = req.grid.unwrap_or_else(default_proposal_grid);
    if grid.len() > MAX_PROPOSAL_GRID {
        return Err(ApiError::bad_request(format!(
            "grid has {} entries, at most {MAX_PROPOSAL_GRID} are allowed",
            grid.len()
        )));
    }
    for p in &grid {
        p.validate()?;
    }
    let work = mutate(&live, move |inner, frames| {
        let out = inner.session.proposals(frames, idx, &grid)?;
        Ok(out
            .into_iter()
            .map(|(params, mask)| Proposal {
                params,
                mask: mask.to_rle(),
            })
            .collect::<Vec<_>>())
    });
    let budget = app.config.proposal_budget;
    match tokio::time::timeout(budget, work).await {
        Ok(out) => Ok(Json(out?)),
        Err(_) => Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            format!(
                "proposals exceeded the {:.1} s budget",
                budget.as_secs_f64()
            ),
        )),
    }
}

pub(crate) async fn commit(
    State(app): AppStateRef,
    Path((sid, idx)): Path<(String, usize)>,
    JsonBody(req): JsonBody<CommitRequest>,
) -> ApiResult<Json<FrameView>> {
    let live = app.sessions.get(&sid).await?;
    check_frame(live.frames.n_frames(), idx)?;
    let mask = req
        .mask
        .decode()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let view = mutate(&live, move |inner, frames| {
        inner
            .session
            .refine_and_commit(frames, &mut inner.writer, idx, &req.params, &mask)?;
        Ok(frame_view(inner, idx))
    })
    .await?;
    Ok(Json(view))
}
