use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::session::{AnnotationSession, Direction, Verdict};
use crate::contour::GacParams;
use crate::dataset::{FrameSource, LabelSink};
use crate::error::{Error, IoContext, Result};
use crate::geometry::BoundingBox;
use crate::mask::{BinaryMask, RlePayload};
use crate::tracker::KcfParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOp {
    Open,
    Seed,
    Propagate,
    Review,
    Flag,
    Proposals,
    Commit,
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
    pub op: EventOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_idx: Option<usize>,
    pub payload: Value,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl SessionEvent {
    fn new(op: EventOp, frame_idx: Option<usize>, payload: Value) -> Self {
        Self {
            ts: now_ms(),
            op,
            frame_idx,
            payload,
        }
    }

    pub(crate) fn open(video_id: &str, n_frames: usize, kcf: &KcfParams) -> Self {
        Self::new(
            EventOp::Open,
            None,
            json!({ "video_id": video_id, "n_frames": n_frames, "kcf": kcf }),
        )
    }

    pub(crate) fn seed(idx: usize, boxes: &[BoundingBox]) -> Self {
        Self::new(EventOp::Seed, Some(idx), json!({ "boxes": boxes }))
    }

    pub(crate) fn propagate(count: usize, direction: Direction) -> Self {
        Self::new(
            EventOp::Propagate,
            None,
            json!({ "count": count, "direction": direction }),
        )
    }

    pub(crate) fn review(idx: usize, verdict: Verdict) -> Self {
        Self::new(EventOp::Review, Some(idx), json!({ "verdict": verdict }))
    }

    pub(crate) fn flag(idx: usize) -> Self {
        Self::new(EventOp::Flag, Some(idx), json!({}))
    }

    pub(crate) fn proposals(idx: usize, grid: &[GacParams]) -> Self {
        Self::new(EventOp::Proposals, Some(idx), json!({ "grid": grid }))
    }

    pub(crate) fn commit(idx: usize, params: &GacParams, mask: &BinaryMask) -> Self {
        Self::new(
            EventOp::Commit,
            Some(idx),
            json!({ "params": params, "mask": mask.to_rle() }),
        )
    }
}

/// Append-only JSON-lines event log.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens `path` for appending, creating it and its directory if needed.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).at(dir)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .at(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.file.metadata().at(&self.path)?.len() == 0)
    }

    pub fn append(&mut self, event: &SessionEvent) -> Result<()> {
        let mut line = serde_json::to_string(event).at(&self.path)?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).at(&self.path)?;
        self.file.flush().at(&self.path)
    }
}

/// Reads every event of a log; blank lines are skipped.
pub fn read_log(path: &Path) -> Result<Vec<SessionEvent>> {
    let reader = BufReader::new(File::open(path).at(path)?);
    let mut events = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| Error::Replay {
            line: n + 1,
            reason: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}

fn field<T: serde::de::DeserializeOwned>(
    event: &SessionEvent,
    key: &str,
) -> std::result::Result<T, String> {
    let value = event
        .payload
        .get(key)
        .ok_or_else(|| format!("{:?} event has no `{key}`", event.op))?;
    serde_json::from_value(value.clone()).map_err(|e| format!("bad `{key}`: {e}"))
}

fn frame_of(event: &SessionEvent) -> std::result::Result<usize, String> {
    event
        .frame_idx
        .ok_or_else(|| format!("{:?} event has no frame_idx", event.op))
}

/// Re-executes a log against `frames`, writing labels to `sink`.
///
/// Proposal events change nothing and are skipped. A commit whose mask
/// differs from the recomputed contour is a divergence.
pub fn replay(
    events: &[SessionEvent],
    frames: &impl FrameSource,
    sink: &mut impl LabelSink,
) -> Result<AnnotationSession> {
    let mut session: Option<AnnotationSession> = None;
    for (n, event) in events.iter().enumerate() {
        let line = n + 1;
        let fail = |reason: String| Error::Replay { line, reason };
        if event.op == EventOp::Open {
            if session.is_some() {
                return Err(fail("second open event".into()));
            }
            let n_frames: usize = field(event, "n_frames").map_err(fail)?;
            if n_frames != frames.n_frames() {
                return Err(fail(format!(
                    "log was recorded on {n_frames} frames, video has {}",
                    frames.n_frames()
                )));
            }
            let video_id: String = field(event, "video_id").map_err(fail)?;
            let kcf: KcfParams = field(event, "kcf").map_err(fail)?;
            session = Some(AnnotationSession::new(video_id, frames, kcf)?);
            continue;
        }
        let s = session
            .as_mut()
            .ok_or_else(|| fail("log does not start with an open event".into()))?;
        let outcome = match event.op {
            EventOp::Open => unreachable!(),
            EventOp::Seed => {
                let idx = frame_of(event).map_err(fail)?;
                let boxes: Vec<BoundingBox> = field(event, "boxes").map_err(fail)?;
                s.set_seed(frames, sink, idx, &boxes)
            }
            EventOp::Propagate => {
                let count: usize = field(event, "count").map_err(fail)?;
                let direction: Direction = field(event, "direction").map_err(fail)?;
                s.propagate_in(frames, count, direction).map(drop)
            }
            EventOp::Review => {
                let idx = frame_of(event).map_err(fail)?;
                let verdict: Verdict = field(event, "verdict").map_err(fail)?;
                s.review(sink, idx, verdict).map(drop)
            }
            EventOp::Flag => {
                let idx = frame_of(event).map_err(fail)?;
                s.flag_for_review(idx)
            }
            EventOp::Proposals => Ok(()),
            EventOp::Commit => {
                let idx = frame_of(event).map_err(fail)?;
                let params: GacParams = field(event, "params").map_err(fail)?;
                let rle: RlePayload = field(event, "mask").map_err(fail)?;
                let mask = rle.decode().map_err(|e| fail(e.to_string()))?;
                s.refine_and_commit(frames, sink, idx, &params, &mask)
            }
        };
        outcome.map_err(|e| fail(e.to_string()))?;
    }
    session.ok_or_else(|| Error::Replay {
        line: 0,
        reason: "empty log".into(),
    })
}
