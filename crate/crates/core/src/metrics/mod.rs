//! Detection and segmentation scoring of prediction masks against ground
//! truth.
//!
//! Every frame of a class gets exactly one [`DetectionOutcome`] per IoU
//! threshold. The prediction is the union of its components that survive
//! min-area filtering and is compared with the whole ground-truth mask.
//! Dice is reported three ways:
//!
//! * `all_videos`: every frame of every video, with empty-vs-empty scoring 1;
//! * `class_videos`: the same, restricted to videos of the class;
//! * `positive_frames`: class videos, ground-truth-positive frames only.
//!
//! Per-video values are averaged over frames; aggregates are unweighted
//! means (and population standard deviations) over videos.

mod components;
mod disk;
mod overlap;
mod pr;
mod video;

pub use components::{filter_small_components, label_components};
pub use disk::{
    evaluate_dataset, ground_truth_areas, load_eval_frames, load_prob_map, pr_curves_from_disk,
    pred_mask_path, pred_prob_path, save_prob_map, write_pr_csv, ClassSelection, EvalVideo,
};
pub use overlap::{dice, iou, normalize_frame, normalize_mask};
pub use pr::{pr_curve, PrFrame, PrPoint, PR_TAUS};
pub use video::{
    aggregate, evaluate_video, Aggregate, DetectionAggregate, DetectionCounts, DiceAggregate,
    DiceScores, EvalFrame, MetricsReport, VideoMetrics,
};

use serde::{Deserialize, Serialize};

use crate::dataset::Plexus;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionOutcome {
    TruePositive,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

/// Minimum component area per class, in pixels at the evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinArea {
    pub scbp: usize,
    pub isc: usize,
}

impl Default for MinArea {
    fn default() -> Self {
        Self {
            scbp: 3240,
            isc: 914,
        }
    }
}

impl MinArea {
    pub fn for_class(&self, class: Plexus) -> Result<usize> {
        match class {
            Plexus::Scbp => Ok(self.scbp),
            Plexus::Isc => Ok(self.isc),
            Plexus::None => Err(Error::Param("no evaluation class `none`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub iou_thresholds: Vec<f64>,
    pub min_area: MinArea,
    pub eval_width: u32,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: vec![0.25, 0.5],
            min_area: MinArea::default(),
            eval_width: crate::dataset::EVAL_WIDTH,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() {
            return Err(Error::Param(
                "at least one IoU threshold is required".into(),
            ));
        }
        if let Some(t) = self
            .iou_thresholds
            .iter()
            .find(|t| !(**t > 0.0 && **t < 1.0))
        {
            return Err(Error::Param(format!("IoU threshold {t} outside (0, 1)")));
        }
        if self.min_area.scbp == 0 || self.min_area.isc == 0 {
            return Err(Error::Param("min_area must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome for a prediction that has already been min-area filtered.
pub(crate) fn outcome_of_filtered(
    filtered: &BinaryMask,
    gt: &BinaryMask,
    threshold: f64,
) -> Result<DetectionOutcome> {
    let score = iou(filtered, gt)?;
    Ok(match (gt.is_empty(), filtered.is_empty()) {
        (true, true) => DetectionOutcome::TrueNegative,
        (true, false) => DetectionOutcome::FalsePositive,
        (false, true) => DetectionOutcome::FalseNegative,
        (false, false) if score >= threshold => DetectionOutcome::TruePositive,
        (false, false) => DetectionOutcome::FalsePositive,
    })
}

/// Filters `pred` by `min_area` and scores it against `gt` at IoU
/// threshold `threshold`.
pub fn classify_frame(
    pred: &BinaryMask,
    gt: &BinaryMask,
    threshold: f64,
    min_area: usize,
) -> Result<DetectionOutcome> {
    outcome_of_filtered(&filter_small_components(pred, min_area), gt, threshold)
}

/// 20% of the median ground-truth area, rounded to the nearest pixel.
/// Areas are per positive frame, at the evaluation grid.
pub fn derive_min_area(areas: &[usize]) -> Result<usize> {
    if areas.is_empty() {
        return Err(Error::Param(
            "no ground-truth areas to derive a minimum from".into(),
        ));
    }
    let mut sorted = areas.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    Ok((0.2 * median).round() as usize)
}

/// Precision, recall and F1 from outcome counts. A video without any
/// positive or predicted frame scores 1.0 on all three; other undefined
/// ratios are 0.0.
pub fn precision_recall_f1(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    if tp + fp + fn_ == 0 {
        return (1.0, 1.0, 1.0);
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: u32, y0: u32, w: u32, h: u32) -> BinaryMask {
        BinaryMask::from_fn(64, 64, |x, y| {
            (x0..x0 + w).contains(&x) && (y0..y0 + h).contains(&y)
        })
    }

    #[test]
    fn threshold_decides_between_tp_and_fp() {
        // Overlap 60 px, union 140 px.
        let gt = rect(10, 10, 10, 10);
        let pred = rect(14, 10, 10, 10);
        let s = iou(&pred, &gt).unwrap();
        assert!(s > 0.25 && s < 0.5);
        assert_eq!(
            classify_frame(&pred, &gt, 0.25, 1).unwrap(),
            DetectionOutcome::TruePositive
        );
        assert_eq!(
            classify_frame(&pred, &gt, 0.5, 1).unwrap(),
            DetectionOutcome::FalsePositive
        );
    }

    #[test]
    fn empty_cases() {
        let gt = rect(10, 10, 10, 10);
        let e = BinaryMask::empty(64, 64);
        assert_eq!(
            classify_frame(&e, &gt, 0.5, 1).unwrap(),
            DetectionOutcome::FalseNegative
        );
        assert_eq!(
            classify_frame(&e, &e, 0.5, 1).unwrap(),
            DetectionOutcome::TrueNegative
        );
        assert_eq!(
            classify_frame(&gt, &e, 0.5, 1).unwrap(),
            DetectionOutcome::FalsePositive
        );
        // A prediction too small to count is a miss.
        assert_eq!(
            classify_frame(&gt, &gt, 0.5, 101).unwrap(),
            DetectionOutcome::FalseNegative
        );
    }

    #[test]
    fn min_area_derivation() {
        assert_eq!(derive_min_area(&[16200]).unwrap(), 3240);
        assert_eq!(derive_min_area(&[100, 16200, 20000]).unwrap(), 3240);
        assert_eq!(derive_min_area(&[4000, 5140]).unwrap(), 914);
        assert!(derive_min_area(&[]).is_err());
    }

    #[test]
    fn prf_conventions() {
        assert_eq!(precision_recall_f1(0, 0, 0), (1.0, 1.0, 1.0));
        assert_eq!(precision_recall_f1(0, 3, 0), (0.0, 0.0, 0.0));
        assert_eq!(precision_recall_f1(3, 1, 0), (0.75, 1.0, 2.0 * 0.75 / 1.75));
        assert_eq!(precision_recall_f1(0, 0, 2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(MetricsConfig::default().validate().is_ok());
        let c = MetricsConfig {
            iou_thresholds: vec![1.0],
            ..MetricsConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(MinArea::default().for_class(Plexus::None).is_err());
    }
}
