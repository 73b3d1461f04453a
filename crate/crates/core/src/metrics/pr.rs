use serde::{Deserialize, Serialize};

use super::{filter_small_components, outcome_of_filtered, precision_recall_f1, DetectionOutcome};
use crate::error::Result;
use crate::frame::GrayFrame;
use crate::mask::BinaryMask;

/// Binarization thresholds swept for precision-recall curves: 0.05 to 0.95
/// in steps of 0.05.
pub const PR_TAUS: [f64; 19] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80,
    0.85, 0.90, 0.95,
];

/// Probability map and ground truth of one frame at the evaluation grid.
#[derive(Debug, Clone)]
pub struct PrFrame {
    pub prob: GrayFrame,
    pub gt: BinaryMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Dataset-level precision and recall at IoU threshold `iou_threshold` for
/// every binarization threshold in [`PR_TAUS`] (pixels with `p >= tau` are
/// foreground).
pub fn pr_curve(frames: &[PrFrame], iou_threshold: f64, min_area: usize) -> Result<Vec<PrPoint>> {
    PR_TAUS
        .iter()
        .map(|&tau| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for f in frames {
                let (w, h) = f.prob.dims();
                let pred = BinaryMask::from_fn(w, h, |x, y| f.prob.get(x, y) >= tau);
                let pred = filter_small_components(&pred, min_area);
                match outcome_of_filtered(&pred, &f.gt, iou_threshold)? {
                    DetectionOutcome::TruePositive => tp += 1,
                    DetectionOutcome::FalsePositive => fp += 1,
                    DetectionOutcome::FalseNegative => fn_ += 1,
                    DetectionOutcome::TrueNegative => {}
                }
            }
            let (precision, recall, _) = precision_recall_f1(tp, fp, fn_);
            Ok(PrPoint {
                tau,
                precision,
                recall,
            })
        })
        .collect()
}
