use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{ImageBuffer, Luma};
use rayon::prelude::*;

use super::{aggregate, evaluate_video, pr_curve, EvalFrame, MetricsConfig, MetricsReport};
use super::{normalize_frame, normalize_mask, PrFrame, PrPoint};
use crate::dataset::{frame_file_name, Dataset, FrameStatus, Plexus, VideoRecord};
use crate::error::{Error, IoContext, Result};
use crate::frame::GrayFrame;
use crate::mask::BinaryMask;

/// Which classes an evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassSelection {
    Scbp,
    Isc,
    Both,
}

impl ClassSelection {
    pub fn classes(self) -> Vec<Plexus> {
        match self {
            ClassSelection::Scbp => vec![Plexus::Scbp],
            ClassSelection::Isc => vec![Plexus::Isc],
            ClassSelection::Both => vec![Plexus::Scbp, Plexus::Isc],
        }
    }
}

impl FromStr for ClassSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scbp" => Ok(ClassSelection::Scbp),
            "isc" => Ok(ClassSelection::Isc),
            "both" => Ok(ClassSelection::Both),
            other => Err(Error::Param(format!(
                "unknown class {other:?}, expected scbp, isc or both"
            ))),
        }
    }
}

impl fmt::Display for ClassSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassSelection::Scbp => "scbp",
            ClassSelection::Isc => "isc",
            ClassSelection::Both => "both",
        })
    }
}

fn pred_video_dir(pred_root: &Path, class: Plexus, video_id: &str) -> PathBuf {
    let class_dir = pred_root.join(class.as_str());
    if class_dir.is_dir() {
        class_dir.join(video_id)
    } else {
        pred_root.join(video_id)
    }
}

/// `{pred}/{class}/{video}/{idx:06}.png` when the run has per-class
/// directories, `{pred}/{video}/{idx:06}.png` otherwise.
pub fn pred_mask_path(pred_root: &Path, class: Plexus, video_id: &str, idx: usize) -> PathBuf {
    pred_video_dir(pred_root, class, video_id).join(frame_file_name(idx))
}

/// Probability map beside the mask: `{idx:06}_prob.png`, 16-bit, 0..65535.
pub fn pred_prob_path(pred_root: &Path, class: Plexus, video_id: &str, idx: usize) -> PathBuf {
    pred_video_dir(pred_root, class, video_id).join(format!("{idx:06}_prob.png"))
}

pub fn load_prob_map(path: &Path) -> Result<GrayFrame> {
    let img = image::open(path).at(path)?.to_luma16();
    let data = img.as_raw().iter().map(|&v| v as f64 / 65535.0).collect();
    GrayFrame::new(img.width(), img.height(), data)
}

pub fn save_prob_map(prob: &GrayFrame, path: &Path) -> Result<()> {
    let raw: Vec<u16> = prob
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let img = ImageBuffer::<Luma<u16>, _>::from_raw(prob.width(), prob.height(), raw)
        .expect("buffer length matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png).at(path)
}

/// A video's evaluable frames for one class.
#[derive(Debug, Clone)]
pub struct EvalVideo {
    pub record: VideoRecord,
    /// Frame indices matching `frames`.
    pub indices: Vec<usize>,
    pub frames: Vec<EvalFrame>,
}

/// Ground truth for `class` on a labelled, non-discarded frame: the stored
/// mask on a positive frame of a video of that class, empty otherwise.
fn class_ground_truth(
    ds: &Dataset,
    record: &VideoRecord,
    class: Plexus,
    idx: usize,
    status: FrameStatus,
) -> Result<BinaryMask> {
    let eval = record.eval_resolution;
    if record.plexus == class && status == FrameStatus::Positive {
        let mask = ds.mask(&record.id, idx)?.ok_or_else(|| {
            Error::Mask(format!("positive frame {idx} of {} has no mask", record.id))
        })?;
        Ok(normalize_mask(&mask, eval))
    } else {
        Ok(BinaryMask::empty(eval.0, eval.1))
    }
}

fn labelled_frames(ds: &Dataset, record: &VideoRecord) -> Result<Vec<(usize, FrameStatus)>> {
    let labels = ds.labels(&record.id)?;
    let usable: Vec<(usize, FrameStatus)> = labels
        .usable_frames()
        .filter(|l| l.idx < record.n_frames)
        .map(|l| (l.idx, l.status))
        .collect();
    let unlabelled = record.n_frames
        - labels
            .frames
            .iter()
            .filter(|l| l.idx < record.n_frames)
            .count();
    if unlabelled > 0 {
        log::warn!("{}: {unlabelled} unlabelled frames skipped", record.id);
    }
    Ok(usable)
}

/// Loads ground truth and predictions of one video for `class`, both at the
/// video's evaluation resolution. Missing prediction files count as empty
/// predictions.
pub fn load_eval_frames(
    ds: &Dataset,
    pred_root: &Path,
    record: &VideoRecord,
    class: Plexus,
) -> Result<EvalVideo> {
    let eval = record.eval_resolution;
    let mut indices = Vec::new();
    let mut frames = Vec::new();
    let mut missing = 0;
    for (idx, status) in labelled_frames(ds, record)? {
        let gt = class_ground_truth(ds, record, class, idx, status)?;
        let path = pred_mask_path(pred_root, class, &record.id, idx);
        let pred = if path.exists() {
            normalize_mask(&BinaryMask::load(&path)?, eval)
        } else {
            missing += 1;
            BinaryMask::empty(eval.0, eval.1)
        };
        indices.push(idx);
        frames.push(EvalFrame { pred, gt });
    }
    if missing > 0 {
        log::warn!(
            "{}: {missing} prediction masks missing for {class}, scored as empty",
            record.id
        );
    }
    Ok(EvalVideo {
        record: record.clone(),
        indices,
        frames,
    })
}

fn selected_videos(ds: &Dataset, videos: Option<&[String]>) -> Result<Vec<VideoRecord>> {
    let manifest = ds.manifest()?;
    match videos {
        None => Ok(manifest.videos),
        Some(ids) => ids
            .iter()
            .map(|id| {
                manifest
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownVideo(id.clone()))
            })
            .collect(),
    }
}

/// Scores a prediction directory against a dataset. `videos` restricts the
/// evaluation, e.g. to one fold's test set.
pub fn evaluate_dataset(
    ds: &Dataset,
    pred_root: &Path,
    selection: ClassSelection,
    cfg: &MetricsConfig,
    videos: Option<&[String]>,
) -> Result<MetricsReport> {
    cfg.validate()?;
    let records = selected_videos(ds, videos)?;
    let jobs: Vec<(Plexus, &VideoRecord)> = selection
        .classes()
        .into_iter()
        .flat_map(|c| records.iter().map(move |r| (c, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(class, record)| {
            let v = load_eval_frames(ds, pred_root, record, class)?;
            if v.frames.is_empty() {
                log::warn!("{}: no evaluable frames, skipped", record.id);
                return Ok(None);
            }
            evaluate_video(&record.id, class, record.plexus == class, &v.frames, cfg).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(results.into_iter().flatten().collect(), cfg)
}

/// Precision-recall curves for `class` over its own videos, one per IoU
/// threshold of `cfg`. Missing probability maps count as all-zero.
pub fn pr_curves_from_disk(
    ds: &Dataset,
    pred_root: &Path,
    class: Plexus,
    cfg: &MetricsConfig,
    videos: Option<&[String]>,
) -> Result<Vec<(f64, Vec<PrPoint>)>> {
    cfg.validate()?;
    let min_area = cfg.min_area.for_class(class)?;
    let mut frames = Vec::new();
    let mut missing = 0;
    for record in selected_videos(ds, videos)?
        .iter()
        .filter(|r| r.plexus == class)
    {
        let eval = record.eval_resolution;
        for (idx, status) in labelled_frames(ds, record)? {
            let gt = class_ground_truth(ds, record, class, idx, status)?;
            let path = pred_prob_path(pred_root, class, &record.id, idx);
            let prob = if path.exists() {
                normalize_frame(&load_prob_map(&path)?, eval)
            } else {
                missing += 1;
                GrayFrame::filled(eval.0, eval.1, 0.0)
            };
            frames.push(PrFrame { prob, gt });
        }
    }
    if missing > 0 {
        log::warn!("{missing} probability maps missing for {class}, scored as empty");
    }
    cfg.iou_thresholds
        .iter()
        .map(|&t| Ok((t, pr_curve(&frames, t, min_area)?)))
        .collect()
}

/// Writes `tau,precision,recall` rows.
pub fn write_pr_csv(path: &Path, points: &[PrPoint]) -> Result<()> {
    let mut out = String::from("tau,precision,recall\n");
    for p in points {
        out.push_str(&format!("{:.2},{},{}\n", p.tau, p.precision, p.recall));
    }
    std::fs::write(path, out).at(path)
}

/// Ground-truth areas of every positive frame of `class`, measured at each
/// video's evaluation resolution; input to [`super::derive_min_area`].
pub fn ground_truth_areas(ds: &Dataset, class: Plexus) -> Result<Vec<usize>> {
    let mut areas = Vec::new();
    for record in ds.manifest()?.videos.iter().filter(|r| r.plexus == class) {
        for label in ds.labels(&record.id)?.frames {
            if label.status == FrameStatus::Positive {
                areas.push(class_ground_truth(ds, record, class, label.idx, label.status)?.area());
            }
        }
    }
    Ok(areas)
}
