use crate::error::Result;
use crate::frame::GrayFrame;
use crate::mask::BinaryMask;

/// `|a ∩ b| / |a ∪ b|`; 1.0 when both masks are empty.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (inter, na, nb) = a.overlap_counts(b)?;
    let union = na + nb - inter;
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// `2|a ∩ b| / (|a| + |b|)`; 1.0 when both masks are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let (inter, na, nb) = a.overlap_counts(b)?;
    Ok(if na + nb == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (na + nb) as f64
    })
}

/// Nearest-neighbour resize to the evaluation grid.
pub fn normalize_mask(mask: &BinaryMask, (width, height): (u32, u32)) -> BinaryMask {
    if mask.dims() == (width, height) {
        mask.clone()
    } else {
        mask.resize_nearest(width, height)
    }
}

/// Bilinear resize to the evaluation grid.
pub fn normalize_frame(frame: &GrayFrame, (width, height): (u32, u32)) -> GrayFrame {
    if frame.dims() == (width, height) {
        frame.clone()
    } else {
        frame.resize_bilinear(width, height)
    }
}
