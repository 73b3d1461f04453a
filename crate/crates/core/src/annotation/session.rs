use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::events::{EventLog, SessionEvent};
use super::fuse_boxes;
use crate::contour::{inverse_gaussian_gradient, morph_gac, propose_contours, GacParams};
use crate::dataset::{FrameSource, FrameStatus, LabelSink, Provenance};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mask::BinaryMask;
use crate::tracker::{KcfModel, KcfParams, LOW_CONFIDENCE_PEAK};

/// Frames propagated per review batch unless the caller asks otherwise.
pub const DEFAULT_PROPAGATE_BATCH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

/// How an approved frame got its boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApprovedOrigin {
    Seed,
    Tracked,
}

impl ApprovedOrigin {
    fn provenance(self) -> Provenance {
        match self {
            ApprovedOrigin::Seed => Provenance::Seed,
            ApprovedOrigin::Tracked => Provenance::TrackedApproved,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum FrameState {
    Unvisited,
    Pending {
        boxes: Vec<BoundingBox>,
        confidence: f64,
    },
    Approved {
        boxes: Vec<BoundingBox>,
        origin: ApprovedOrigin,
    },
    Committed {
        boxes: Vec<BoundingBox>,
        origin: ApprovedOrigin,
        params: GacParams,
    },
    Negative,
    Discarded,
}

impl FrameState {
    pub fn name(&self) -> &'static str {
        match self {
            FrameState::Unvisited => "unvisited",
            FrameState::Pending { .. } => "pending",
            FrameState::Approved { .. } => "approved",
            FrameState::Committed { .. } => "committed",
            FrameState::Negative => "negative",
            FrameState::Discarded => "discarded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Approve,
    Reject,
    Negative,
    Discard,
}

/// A frame that entered review after propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagated {
    pub frame_idx: usize,
    pub boxes: Vec<BoundingBox>,
    /// Minimum tracker peak over the boxes.
    pub confidence: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Seed {
    frame_idx: usize,
    boxes: Vec<BoundingBox>,
}

/// Per-video annotation state machine.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotationSession {
    video_id: String,
    dims: (u32, u32),
    kcf: KcfParams,
    seeds: Vec<Seed>,
    states: Vec<FrameState>,
    trackers: Vec<KcfModel>,
    /// Frame the active trackers were last updated on.
    cursor: Option<usize>,
    direction: Direction,
    /// Frames waiting for a second reviewer.
    review_queue: BTreeSet<usize>,
    #[serde(skip)]
    log: Option<EventLog>,
}

impl AnnotationSession {
    pub fn new(
        video_id: impl Into<String>,
        frames: &impl FrameSource,
        kcf: KcfParams,
    ) -> Result<Self> {
        kcf.validate()?;
        Ok(Self {
            video_id: video_id.into(),
            dims: frames.dims(),
            kcf,
            seeds: Vec::new(),
            states: vec![FrameState::Unvisited; frames.n_frames()],
            trackers: Vec::new(),
            cursor: None,
            direction: Direction::Forward,
            review_queue: BTreeSet::new(),
            log: None,
        })
    }

    /// Records every subsequent operation in `log`. An empty log first gets
    /// the open event.
    pub fn attach_log(&mut self, mut log: EventLog) -> Result<()> {
        if log.is_empty()? {
            log.append(&SessionEvent::open(
                &self.video_id,
                self.states.len(),
                &self.kcf,
            ))?;
        }
        self.log = Some(log);
        Ok(())
    }

    fn emit(&mut self, event: SessionEvent) -> Result<()> {
        if let Some(log) = self.log.as_mut() {
            log.append(&event)?;
        }
        Ok(())
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn n_frames(&self) -> usize {
        self.states.len()
    }

    pub fn dims(&self) -> (u32, u32) {
        self.dims
    }

    pub fn kcf_params(&self) -> &KcfParams {
        &self.kcf
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn state(&self, idx: usize) -> Option<&FrameState> {
        self.states.get(idx)
    }

    pub fn states(&self) -> &[FrameState] {
        &self.states
    }

    pub fn cursor(&self) -> Option<usize> {
        self.cursor
    }

    pub fn active_trackers(&self) -> usize {
        self.trackers.len()
    }

    pub fn review_queue(&self) -> &BTreeSet<usize> {
        &self.review_queue
    }

    pub fn pending(&self) -> Vec<(usize, &FrameState)> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, FrameState::Pending { .. }))
            .collect()
    }

    fn check_idx(&self, idx: usize) -> Result<()> {
        if idx >= self.states.len() {
            return Err(Error::State(format!(
                "frame {idx} out of range for {} frames",
                self.states.len()
            )));
        }
        Ok(())
    }

    fn clear_pending(&mut self, pred: impl Fn(usize) -> bool) {
        for (i, s) in self.states.iter_mut().enumerate() {
            if matches!(s, FrameState::Pending { .. }) && pred(i) {
                *s = FrameState::Unvisited;
            }
        }
    }

    /// Draws seed boxes on a frame: one tracker per box, frame approved,
    /// and every pending frame from earlier trackers invalidated.
    pub fn set_seed(
        &mut self,
        frames: &impl FrameSource,
        sink: &mut impl LabelSink,
        idx: usize,
        boxes: &[BoundingBox],
    ) -> Result<()> {
        if boxes.is_empty() {
            return Err(Error::Seed("a seed needs at least one box".into()));
        }
        self.check_idx(idx)?;
        for b in boxes {
            b.validate(self.dims.0, self.dims.1)
                .map_err(|e| Error::Seed(e.to_string()))?;
        }
        let frame = frames.frame(idx)?;
        let trackers = boxes
            .iter()
            .map(|b| KcfModel::init(&frame, *b, self.kcf.clone()))
            .collect::<Result<Vec<_>>>()?;
        sink.record_seed(idx)?;
        self.trackers = trackers;
        self.cursor = Some(idx);
        self.direction = Direction::Forward;
        self.clear_pending(|_| true);
        self.states[idx] = FrameState::Approved {
            boxes: boxes.to_vec(),
            origin: ApprovedOrigin::Seed,
        };
        self.seeds.push(Seed {
            frame_idx: idx,
            boxes: boxes.to_vec(),
        });
        self.emit(SessionEvent::seed(idx, boxes))
    }

    /// Tracks the active boxes through the next `count` frames forward.
    pub fn propagate(
        &mut self,
        frames: &impl FrameSource,
        count: usize,
    ) -> Result<Vec<Propagated>> {
        self.propagate_in(frames, count, Direction::Forward)
    }

    /// Tracks in `direction`. Switching direction restarts the trackers from
    /// the latest seed.
    pub fn propagate_in(
        &mut self,
        frames: &impl FrameSource,
        count: usize,
        direction: Direction,
    ) -> Result<Vec<Propagated>> {
        if self.trackers.is_empty() {
            return Err(Error::State("no active trackers; draw a seed first".into()));
        }
        if direction != self.direction {
            let seed = self
                .seeds
                .last()
                .cloned()
                .ok_or_else(|| Error::State("no seed to restart tracking from".into()))?;
            let frame = frames.frame(seed.frame_idx)?;
            self.trackers = seed
                .boxes
                .iter()
                .map(|b| KcfModel::init(&frame, *b, self.kcf.clone()))
                .collect::<Result<_>>()?;
            self.cursor = Some(seed.frame_idx);
            self.direction = direction;
        }
        let mut out = Vec::new();
        let mut at = self.cursor.expect("trackers imply a cursor");
        for _ in 0..count {
            let next = match direction {
                Direction::Forward if at + 1 < self.states.len() => at + 1,
                Direction::Backward if at > 0 => at - 1,
                _ => break,
            };
            let frame = frames.frame(next)?;
            let mut boxes = Vec::with_capacity(self.trackers.len());
            let mut confidence = f64::INFINITY;
            for t in &mut self.trackers {
                let step = t.step(&frame)?;
                boxes.push(step.bbox);
                confidence = confidence.min(step.peak);
            }
            at = next;
            // Reviewed frames keep their verdicts; trackers just pass through.
            if matches!(
                self.states[next],
                FrameState::Unvisited | FrameState::Pending { .. }
            ) {
                let low_confidence = confidence < LOW_CONFIDENCE_PEAK;
                if low_confidence {
                    self.review_queue.insert(next);
                }
                self.states[next] = FrameState::Pending {
                    boxes: boxes.clone(),
                    confidence,
                };
                out.push(Propagated {
                    frame_idx: next,
                    boxes,
                    confidence,
                    low_confidence,
                });
            }
        }
        self.cursor = Some(at);
        self.emit(SessionEvent::propagate(count, direction))?;
        Ok(out)
    }

    /// Applies a reviewer verdict.
    ///
    /// Approve and reject need a pending frame. Rejecting clears the rest of
    /// the pending run and stops the trackers; the caller reseeds. Negative
    /// and discard apply to any frame and are written to the store.
    pub fn review(
        &mut self,
        sink: &mut impl LabelSink,
        idx: usize,
        verdict: Verdict,
    ) -> Result<FrameState> {
        self.check_idx(idx)?;
        let new_state = match verdict {
            Verdict::Approve | Verdict::Reject => {
                let FrameState::Pending { boxes, .. } = &self.states[idx] else {
                    return Err(Error::State(format!(
                        "frame {idx} is {}, only pending frames can be approved or rejected",
                        self.states[idx].name()
                    )));
                };
                if verdict == Verdict::Approve {
                    FrameState::Approved {
                        boxes: boxes.clone(),
                        origin: ApprovedOrigin::Tracked,
                    }
                } else {
                    let direction = self.direction;
                    let end = self.pending_run_end(idx);
                    self.clear_pending(|i| match direction {
                        Direction::Forward => i > idx && i <= end,
                        Direction::Backward => i < idx && i >= end,
                    });
                    self.trackers.clear();
                    self.cursor = None;
                    FrameState::Unvisited
                }
            }
            Verdict::Negative => {
                sink.set_status(idx, FrameStatus::Negative, Provenance::Manual)?;
                FrameState::Negative
            }
            Verdict::Discard => {
                sink.set_status(idx, FrameStatus::Discarded, Provenance::Manual)?;
                self.review_queue.remove(&idx);
                FrameState::Discarded
            }
        };
        self.states[idx] = new_state.clone();
        self.emit(SessionEvent::review(idx, verdict))?;
        Ok(new_state)
    }

    /// Last frame of the contiguous pending run starting at `idx`, in the
    /// propagation direction.
    fn pending_run_end(&self, idx: usize) -> usize {
        let is_pending = |i: usize| matches!(self.states[i], FrameState::Pending { .. });
        let mut end = idx;
        match self.direction {
            Direction::Forward => {
                while end + 1 < self.states.len() && is_pending(end + 1) {
                    end += 1;
                }
            }
            Direction::Backward => {
                while end > 0 && is_pending(end - 1) {
                    end -= 1;
                }
            }
        }
        end
    }

    /// Queues a frame for a second reviewer.
    pub fn flag_for_review(&mut self, idx: usize) -> Result<()> {
        self.check_idx(idx)?;
        self.review_queue.insert(idx);
        self.emit(SessionEvent::flag(idx))
    }

    fn approved(&self, idx: usize) -> Result<(&[BoundingBox], ApprovedOrigin)> {
        self.check_idx(idx)?;
        match &self.states[idx] {
            FrameState::Approved { boxes, origin } => Ok((boxes, *origin)),
            other => Err(Error::State(format!(
                "frame {idx} is {}, only approved frames can be refined",
                other.name()
            ))),
        }
    }

    /// Fused-box mask of an approved frame.
    pub fn fused_mask(&self, idx: usize) -> Result<BinaryMask> {
        let (boxes, _) = self.approved(idx)?;
        fuse_boxes(boxes, self.dims)
    }

    /// Contour proposals for an approved frame, one per grid entry.
    pub fn proposals(
        &mut self,
        frames: &impl FrameSource,
        idx: usize,
        grid: &[GacParams],
    ) -> Result<Vec<(GacParams, BinaryMask)>> {
        let init = self.fused_mask(idx)?;
        let frame = frames.frame(idx)?;
        let out = propose_contours(&frame, &init, grid)?;
        self.emit(SessionEvent::proposals(idx, grid))?;
        Ok(out)
    }

    fn contour_for(
        &self,
        frames: &impl FrameSource,
        idx: usize,
        params: &GacParams,
    ) -> Result<BinaryMask> {
        let init = self.fused_mask(idx)?;
        let frame = frames.frame(idx)?;
        let edge = inverse_gaussian_gradient(&frame, params.edge_alpha, params.edge_sigma)?;
        morph_gac(&edge, &init, params)
    }

    /// Commits a chosen proposal as ground truth. The mask must be the one
    /// `params` produces from this frame's fused boxes.
    pub fn refine_and_commit(
        &mut self,
        frames: &impl FrameSource,
        sink: &mut impl LabelSink,
        idx: usize,
        params: &GacParams,
        mask: &BinaryMask,
    ) -> Result<()> {
        let expected = self.contour_for(frames, idx, params)?;
        if &expected != mask {
            return Err(Error::Mask(format!(
                "chosen mask for frame {idx} is not the contour produced by its parameters"
            )));
        }
        self.commit_mask(sink, idx, params, mask)
    }

    /// Refines and commits with `params`, computing the contour here.
    pub fn commit_with_params(
        &mut self,
        frames: &impl FrameSource,
        sink: &mut impl LabelSink,
        idx: usize,
        params: &GacParams,
    ) -> Result<BinaryMask> {
        let mask = self.contour_for(frames, idx, params)?;
        self.commit_mask(sink, idx, params, &mask)?;
        Ok(mask)
    }

    /// Commits every approved frame in `range` with the same parameters;
    /// returns the committed indices.
    pub fn commit_range(
        &mut self,
        frames: &impl FrameSource,
        sink: &mut impl LabelSink,
        range: std::ops::RangeInclusive<usize>,
        params: &GacParams,
    ) -> Result<Vec<usize>> {
        let targets: Vec<usize> = range
            .filter(|&i| matches!(self.states.get(i), Some(FrameState::Approved { .. })))
            .collect();
        for &i in &targets {
            self.commit_with_params(frames, sink, i, params)?;
        }
        Ok(targets)
    }

    fn commit_mask(
        &mut self,
        sink: &mut impl LabelSink,
        idx: usize,
        params: &GacParams,
        mask: &BinaryMask,
    ) -> Result<()> {
        let (boxes, origin) = self.approved(idx)?;
        let boxes = boxes.to_vec();
        sink.write_ground_truth(idx, mask, params, origin.provenance())?;
        self.states[idx] = FrameState::Committed {
            boxes,
            origin,
            params: params.clone(),
        };
        self.review_queue.remove(&idx);
        self.emit(SessionEvent::commit(idx, params, mask))
    }
}
