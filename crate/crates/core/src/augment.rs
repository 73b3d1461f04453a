//! Training-time augmentation of frame/mask pairs: horizontal flip, a small
//! rotation, and a gamma curve whose range depends on the clip's gain.
//!
//! Flip is drawn with probability `flip_probability`; rotation and gamma are
//! drawn for every sample. Geometric transforms hit frame and mask alike,
//! gamma only the frame.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FrameStatus, Gain, VideoMeta};
use crate::error::{Error, IoContext, Result};
use crate::frame::GrayFrame;
use crate::mask::BinaryMask;

/// Closed gamma interval per gain class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRanges {
    pub low: (f64, f64),
    pub medium: (f64, f64),
    pub high: (f64, f64),
}

impl Default for GammaRanges {
    fn default() -> Self {
        Self {
            low: (0.5, 0.75),
            medium: (0.75, 1.33),
            high: (1.5, 2.0),
        }
    }
}

impl GammaRanges {
    pub fn for_gain(&self, gain: Gain) -> (f64, f64) {
        match gain {
            Gain::Low => self.low,
            Gain::Medium => self.medium,
            Gain::High => self.high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub flip_probability: f64,
    /// Degrees, counterclockwise positive.
    pub rotation_range: (f64, f64),
    pub gamma_ranges: GammaRanges,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            flip_probability: 0.5,
            rotation_range: (-10.0, 10.0),
            gamma_ranges: GammaRanges::default(),
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::Param(format!(
                "flip probability {} outside [0, 1]",
                self.flip_probability
            )));
        }
        let (a, b) = self.rotation_range;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::Param(format!(
                "rotation range {a}..{b} is not ordered"
            )));
        }
        for gain in [Gain::Low, Gain::Medium, Gain::High] {
            let (lo, hi) = self.gamma_ranges.for_gain(gain);
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Param(format!(
                    "gamma range {lo}..{hi} for {gain:?} gain must be positive and ordered"
                )));
            }
        }
        Ok(())
    }

    /// Independent generator for sample `index`; the same (seed, index) pair
    /// always yields the same stream.
    pub fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Parameters drawn for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Applied {
    pub flipped: bool,
    pub angle_deg: f64,
    pub gamma: f64,
}

impl Applied {
    pub const IDENTITY: Applied = Applied {
        flipped: false,
        angle_deg: 0.0,
        gamma: 1.0,
    };

    pub fn sample(cfg: &AugmentConfig, gain: Gain, rng: &mut impl Rng) -> Self {
        let flipped = rng.random_bool(cfg.flip_probability);
        let angle_deg = uniform(rng, cfg.rotation_range);
        let gamma = uniform(rng, cfg.gamma_ranges.for_gain(gain));
        Self {
            flipped,
            angle_deg,
            gamma,
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// `out = in^gamma` on intensities clamped to [0, 1].
pub fn gamma_transform(image: &GrayFrame, gamma: f64) -> Result<GrayFrame> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Param(format!("gamma must be positive, got {gamma}")));
    }
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = v.clamp(0.0, 1.0).powf(gamma);
    }
    Ok(out)
}

pub fn flip_frame(frame: &GrayFrame) -> GrayFrame {
    let w = frame.width();
    GrayFrame::from_fn(w, frame.height(), |x, y| frame.get(w - 1 - x, y))
}

pub fn flip_mask(mask: &BinaryMask) -> BinaryMask {
    let w = mask.width();
    BinaryMask::from_fn(w, mask.height(), |x, y| mask.get(w - 1 - x, y))
}

/// Maps an output pixel back to its source position for a counterclockwise
/// rotation (as displayed, y down) about the image center.
fn rotation_source(w: u32, h: u32, angle_deg: f64) -> impl Fn(u32, u32) -> (f64, f64) {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    move |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        (cx + c * dx - s * dy, cy + s * dx + c * dy)
    }
}

/// Bilinear rotation; pixels mapped from outside the frame become 0.
pub fn rotate_frame(frame: &GrayFrame, angle_deg: f64) -> GrayFrame {
    if angle_deg == 0.0 {
        return frame.clone();
    }
    let (w, h) = frame.dims();
    let src = rotation_source(w, h, angle_deg);
    let (maxx, maxy) = (w as f64 - 1.0, h as f64 - 1.0);
    const EPS: f64 = 1e-9;
    GrayFrame::from_fn(w, h, |x, y| {
        let (sx, sy) = src(x, y);
        if sx < -EPS || sy < -EPS || sx > maxx + EPS || sy > maxy + EPS {
            0.0
        } else {
            frame.sample_bilinear(sx.clamp(0.0, maxx), sy.clamp(0.0, maxy))
        }
    })
}

/// Nearest-neighbour rotation; pixels mapped from outside the mask are off.
pub fn rotate_mask(mask: &BinaryMask, angle_deg: f64) -> BinaryMask {
    if angle_deg == 0.0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let src = rotation_source(w, h, angle_deg);
    BinaryMask::from_fn(w, h, |x, y| {
        let (sx, sy) = src(x, y);
        let (nx, ny) = (sx.round(), sy.round());
        nx >= 0.0 && ny >= 0.0 && nx < w as f64 && ny < h as f64 && mask.get(nx as u32, ny as u32)
    })
}

/// Applies flip, then rotation, then gamma.
pub fn apply(
    frame: &GrayFrame,
    mask: &BinaryMask,
    applied: &Applied,
) -> Result<(GrayFrame, BinaryMask)> {
    if frame.dims() != mask.dims() {
        return Err(Error::Geometry(format!(
            "frame is {:?} but mask is {:?}",
            frame.dims(),
            mask.dims()
        )));
    }
    let (mut f, mut m) = if applied.flipped {
        (flip_frame(frame), flip_mask(mask))
    } else {
        (frame.clone(), mask.clone())
    };
    if applied.angle_deg != 0.0 {
        f = rotate_frame(&f, applied.angle_deg);
        m = rotate_mask(&m, applied.angle_deg);
    }
    let f = gamma_transform(&f, applied.gamma)?;
    Ok((f, m))
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub frame: GrayFrame,
    pub mask: BinaryMask,
    pub applied: Applied,
}

/// Draws parameters from `rng` and applies them.
pub fn augment(
    frame: &GrayFrame,
    mask: &BinaryMask,
    gain: Gain,
    cfg: &AugmentConfig,
    rng: &mut impl Rng,
) -> Result<Augmented> {
    let applied = Applied::sample(cfg, gain, rng);
    let (frame, mask) = apply(frame, mask, &applied)?;
    Ok(Augmented {
        frame,
        mask,
        applied,
    })
}

/// Sidecar entry written next to a materialized dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedRecord {
    pub idx: usize,
    #[serde(flatten)]
    pub applied: Applied,
}

/// Writes one augmented copy of every usable frame of `source` into `out`
/// using the standard layout, plus `applied.json` mapping video id to the
/// parameters drawn per frame. Discarded frames are copied unchanged so
/// frame indices and labels stay aligned.
pub fn materialize(
    source: &Dataset,
    out: &Path,
    cfg: &AugmentConfig,
) -> Result<BTreeMap<String, Vec<AppliedRecord>>> {
    cfg.validate()?;
    let target = Dataset::open(out);
    let manifest = source.manifest()?;
    let mut sidecar = BTreeMap::new();
    for (vi, record) in manifest.videos.iter().enumerate() {
        let labels = source.labels(&record.id)?;
        let mut frames = Vec::with_capacity(record.n_frames);
        let mut masks = Vec::with_capacity(record.n_frames);
        let mut applied = Vec::new();
        for idx in 0..record.n_frames {
            let frame = source.frame(&record.id, idx)?;
            let status = labels.get(idx).map(|l| l.status);
            if status == Some(FrameStatus::Discarded) {
                frames.push(frame);
                masks.push(None);
                continue;
            }
            let mask = source
                .mask(&record.id, idx)?
                .unwrap_or_else(|| BinaryMask::empty(record.width, record.height));
            let mut rng = cfg.rng_for(((vi as u64) << 32) | idx as u64);
            let a = augment(&frame, &mask, record.gain, cfg, &mut rng)?;
            frames.push(a.frame);
            masks.push((status == Some(FrameStatus::Positive)).then_some(a.mask));
            applied.push(AppliedRecord {
                idx,
                applied: a.applied,
            });
        }
        target.ingest_frames(&frames, VideoMeta::from(record))?;
        for (idx, mask) in masks.iter().enumerate() {
            if let Some(mask) = mask {
                let path = target.mask_path(&record.id, idx);
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir).at(dir)?;
                }
                mask.save_png(&path)?;
            }
        }
        crate::dataset::write_json_atomic(&target.labels_path(&record.id), &labels)?;
        sidecar.insert(record.id.clone(), applied);
    }
    crate::dataset::write_json_atomic(&out.join("applied.json"), &sidecar)?;
    Ok(sidecar)
}
