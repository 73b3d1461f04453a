//! Human-in-the-loop annotation: seed boxes on a frame, propagate them with
//! trackers, review each tracked frame, fuse the approved boxes, refine the
//! fused mask with an active contour and commit it as ground truth.
//!
//! Every successful operation is recorded as a [`SessionEvent`]; replaying
//! the event log against the same frames reproduces the same labels.

mod events;
mod session;

pub use events::{read_log, replay, EventLog, EventOp, SessionEvent};
pub use session::{
    AnnotationSession, ApprovedOrigin, Direction, FrameState, Propagated, Verdict,
    DEFAULT_PROPAGATE_BATCH,
};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mask::BinaryMask;

/// Rasterizes the union of box interiors, clipped to the frame.
pub fn fuse_boxes(boxes: &[BoundingBox], (width, height): (u32, u32)) -> Result<BinaryMask> {
    if boxes.is_empty() {
        return Err(Error::Geometry("no boxes to fuse".into()));
    }
    let mut mask = BinaryMask::empty(width, height);
    for b in boxes {
        let (x0, y0, x1, y1) = b.clip(width, height).ok_or_else(|| {
            Error::Geometry(format!(
                "box {b:?} does not intersect the {width}x{height} frame"
            ))
        })?;
        for y in y0..y1 {
            for x in x0..x1 {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}
