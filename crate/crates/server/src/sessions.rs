use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nervetrace::annotation::{read_log, replay, AnnotationSession, EventLog};
use nervetrace::dataset::{Dataset, VideoFrames, VideoWriter};
use nervetrace::tracker::KcfParams;
use tokio::sync::{Mutex, OwnedRwLockWriteGuard, RwLock};

use crate::error::{ApiError, ApiResult};

pub(crate) struct Inner {
    pub session: AnnotationSession,
    pub writer: VideoWriter,
}

pub(crate) struct LiveSession {
    pub id: String,
    pub frames: VideoFrames,
    pub resumed: bool,
    inner: Arc<RwLock<Inner>>,
}

impl LiveSession {
    pub async fn read(&self) -> tokio::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().await
    }

    /// Exclusive access, or 409 if another mutating request holds it.
    pub fn try_write(&self) -> ApiResult<OwnedRwLockWriteGuard<Inner>> {
        self.inner
            .clone()
            .try_write_owned()
            .map_err(|_| ApiError::busy(&self.id))
    }
}

#[derive(Default)]
struct Tables {
    by_id: HashMap<String, Arc<LiveSession>>,
    by_video: HashMap<String, String>,
}

/// Live sessions, at most one per video.
#[derive(Default)]
pub(crate) struct Registry {
    tables: Mutex<Tables>,
    next: AtomicU64,
}

impl Registry {
    pub async fn get(&self, id: &str) -> ApiResult<Arc<LiveSession>> {
        self.tables
            .lock()
            .await
            .by_id
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
    }

    /// Returns the video's live session, opening one if needed. The flag is
    /// true when a new session was created.
    pub async fn open(
        &self,
        dataset: &Dataset,
        video_id: &str,
        kcf: &KcfParams,
    ) -> ApiResult<(Arc<LiveSession>, bool)> {
        let mut tables = self.tables.lock().await;
        if let Some(id) = tables.by_video.get(video_id) {
            return Ok((tables.by_id[id].clone(), false));
        }
        let (ds, vid, kcf) = (dataset.clone(), video_id.to_string(), kcf.clone());
        let (frames, inner, resumed) = tokio::task::spawn_blocking(move || start(&ds, &vid, kcf))
            .await
            .map_err(|e| {
                ApiError::new(axum::http::StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            })??;
        let id = format!("s{}", self.next.fetch_add(1, Ordering::Relaxed) + 1);
        let live = Arc::new(LiveSession {
            id: id.clone(),
            frames,
            resumed,
            inner: Arc::new(RwLock::new(inner)),
        });
        tables.by_video.insert(video_id.to_string(), id.clone());
        tables.by_id.insert(id, live.clone());
        log::info!(
            "session {} opened on {video_id} (resumed: {resumed})",
            live.id
        );
        Ok((live, true))
    }
}

/// Takes the write lock and either resumes from the video's event log or
/// starts a fresh session logging to it.
fn start(
    dataset: &Dataset,
    video_id: &str,
    kcf: KcfParams,
) -> nervetrace::Result<(VideoFrames, Inner, bool)> {
    let frames = dataset.frames(video_id)?;
    let mut writer = dataset.writer(video_id)?;
    let path = dataset.session_log_path(video_id);
    let log = EventLog::open(&path)?;
    let (mut session, resumed) = if log.is_empty()? {
        (AnnotationSession::new(video_id, &frames, kcf)?, false)
    } else {
        let events = read_log(&path)?;
        (replay(&events, &frames, &mut writer)?, true)
    };
    session.attach_log(log)?;
    Ok((frames, Inner { session, writer }, resumed))
}
