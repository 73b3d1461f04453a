use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{dice, DetectionOutcome, MetricsConfig};
use super::{filter_small_components, outcome_of_filtered, precision_recall_f1};
use crate::dataset::Plexus;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::summary::MeanSd;

/// One evaluable frame at the evaluation grid. Discarded frames are left
/// out by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFrame {
    pub pred: BinaryMask,
    pub gt: BinaryMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl DetectionCounts {
    fn from_outcomes(threshold: f64, outcomes: &[DetectionOutcome]) -> Self {
        let count = |o| outcomes.iter().filter(|&&x| x == o).count();
        let tp = count(DetectionOutcome::TruePositive);
        let fp = count(DetectionOutcome::FalsePositive);
        let fn_ = count(DetectionOutcome::FalseNegative);
        let tn = count(DetectionOutcome::TrueNegative);
        let (precision, recall, f1) = precision_recall_f1(tp, fp, fn_);
        Self {
            threshold,
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }
}

/// Mean per-frame dice of one video under each inclusion rule. A rule that
/// excludes the video entirely leaves its value unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceScores {
    pub all_videos: f64,
    pub class_videos: Option<f64>,
    pub positive_frames: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub video_id: String,
    pub class: Plexus,
    /// Whether the video shows the evaluated class.
    pub class_video: bool,
    pub n_frames: usize,
    pub positive_frames: usize,
    pub detection: Vec<DetectionCounts>,
    pub dice: DiceScores,
}

/// Scores one video for one class.
pub fn evaluate_video(
    video_id: &str,
    class: Plexus,
    class_video: bool,
    frames: &[EvalFrame],
    cfg: &MetricsConfig,
) -> Result<VideoMetrics> {
    if frames.is_empty() {
        return Err(Error::EmptyVideo(video_id.to_string()));
    }
    let min_area = cfg.min_area.for_class(class)?;
    let filtered: Vec<BinaryMask> = frames
        .iter()
        .map(|f| filter_small_components(&f.pred, min_area))
        .collect();
    let mut detection = Vec::with_capacity(cfg.iou_thresholds.len());
    for &t in &cfg.iou_thresholds {
        let outcomes = filtered
            .iter()
            .zip(frames)
            .map(|(p, f)| outcome_of_filtered(p, &f.gt, t))
            .collect::<Result<Vec<_>>>()?;
        detection.push(DetectionCounts::from_outcomes(t, &outcomes));
    }
    let scores = filtered
        .iter()
        .zip(frames)
        .map(|(p, f)| Ok((dice(p, &f.gt)?, !f.gt.is_empty())))
        .collect::<Result<Vec<(f64, bool)>>>()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let all: Vec<f64> = scores.iter().map(|s| s.0).collect();
    let positive: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let all_videos = mean(&all);
    let dice = DiceScores {
        all_videos,
        class_videos: class_video.then_some(all_videos),
        positive_frames: (class_video && !positive.is_empty()).then(|| mean(&positive)),
    };
    Ok(VideoMetrics {
        video_id: video_id.to_string(),
        class,
        class_video,
        n_frames: frames.len(),
        positive_frames: positive.len(),
        detection,
        dice,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionAggregate {
    pub threshold: f64,
    pub precision: MeanSd,
    pub recall: MeanSd,
    pub f1: MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceAggregate {
    pub all_videos: MeanSd,
    pub class_videos: MeanSd,
    pub positive_frames: MeanSd,
}

/// Across-video summary for one class. Detection scores average over the
/// class's own videos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub videos: usize,
    pub class_videos: usize,
    pub detection: Vec<DetectionAggregate>,
    pub dice: DiceAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: MetricsConfig,
    pub per_video: Vec<VideoMetrics>,
    pub aggregate: BTreeMap<Plexus, Aggregate>,
}

/// Summarizes per-video results. Input order does not matter: videos are
/// sorted by class and id first.
pub fn aggregate(mut per_video: Vec<VideoMetrics>, cfg: &MetricsConfig) -> Result<MetricsReport> {
    if per_video.is_empty() {
        return Err(Error::EmptyReport);
    }
    per_video.sort_by(|a, b| (a.class, &a.video_id).cmp(&(b.class, &b.video_id)));
    let mut by_class: BTreeMap<Plexus, Vec<&VideoMetrics>> = BTreeMap::new();
    for v in &per_video {
        by_class.entry(v.class).or_default().push(v);
    }
    let mut out = BTreeMap::new();
    for (class, videos) in by_class {
        let own: Vec<&&VideoMetrics> = videos.iter().filter(|v| v.class_video).collect();
        let detection = cfg
            .iou_thresholds
            .iter()
            .enumerate()
            .map(|(i, &threshold)| {
                let pick = |f: fn(&DetectionCounts) -> f64| {
                    MeanSd::of(own.iter().map(|v| f(&v.detection[i])))
                };
                DetectionAggregate {
                    threshold,
                    precision: pick(|d| d.precision),
                    recall: pick(|d| d.recall),
                    f1: pick(|d| d.f1),
                }
            })
            .collect();
        let dice = DiceAggregate {
            all_videos: MeanSd::of(videos.iter().map(|v| v.dice.all_videos)),
            class_videos: MeanSd::of(videos.iter().filter_map(|v| v.dice.class_videos)),
            positive_frames: MeanSd::of(videos.iter().filter_map(|v| v.dice.positive_frames)),
        };
        out.insert(
            class,
            Aggregate {
                videos: videos.len(),
                class_videos: own.len(),
                detection,
                dice,
            },
        );
    }
    Ok(MetricsReport {
        config: cfg.clone(),
        per_video,
        aggregate: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> MetricsConfig {
        MetricsConfig {
            min_area: super::super::MinArea { scbp: 1, isc: 1 },
            ..MetricsConfig::default()
        }
    }

    fn block(x0: u32, w: u32) -> BinaryMask {
        BinaryMask::from_fn(16, 16, |x, y| (x0..x0 + w).contains(&x) && y < 4)
    }

    fn frame(pred: BinaryMask, gt: BinaryMask) -> EvalFrame {
        EvalFrame { pred, gt }
    }

    #[test]
    fn tp_and_tn_dice_variants() {
        // pred 8 px, gt 12 px, overlap 8 -> dice 16/20 = 0.8
        let tp = frame(block(0, 2), block(0, 3));
        let tn = frame(BinaryMask::empty(16, 16), BinaryMask::empty(16, 16));
        let m = evaluate_video("v", Plexus::Scbp, true, &[tp, tn], &cfg()).unwrap();
        assert_eq!(m.dice.class_videos, Some((0.8 + 1.0) / 2.0));
        assert_eq!(m.dice.positive_frames, Some(0.8));
        let d = &m.detection[0];
        assert_eq!((d.tp, d.fp, d.fn_, d.tn), (1, 0, 0, 1));
        assert_eq!((d.precision, d.recall, d.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_video_is_an_error() {
        assert!(matches!(
            evaluate_video("v", Plexus::Isc, true, &[], &cfg()),
            Err(Error::EmptyVideo(_))
        ));
    }

    #[test]
    fn two_video_aggregate() {
        let mk = |id: &str, d: f64| VideoMetrics {
            video_id: id.into(),
            class: Plexus::Scbp,
            class_video: true,
            n_frames: 1,
            positive_frames: 1,
            detection: vec![],
            dice: DiceScores {
                all_videos: d,
                class_videos: Some(d),
                positive_frames: Some(d),
            },
        };
        let c = MetricsConfig {
            iou_thresholds: vec![],
            ..cfg()
        };
        let r = aggregate(vec![mk("a", 0.6), mk("b", 0.8)], &c).unwrap();
        let a = &r.aggregate[&Plexus::Scbp];
        assert!((a.dice.positive_frames.mean - 0.7).abs() < 1e-12);
        assert!((a.dice.positive_frames.sd - 0.1).abs() < 1e-12);
        let swapped = aggregate(vec![mk("b", 0.8), mk("a", 0.6)], &c).unwrap();
        assert_eq!(swapped, r);
        let single = aggregate(vec![mk("a", 0.6)], &c).unwrap();
        assert_eq!(single.aggregate[&Plexus::Scbp].dice.all_videos.sd, 0.0);
        assert!(matches!(aggregate(vec![], &c), Err(Error::EmptyReport)));
    }
}
