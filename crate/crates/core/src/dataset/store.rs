use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use image::AnimationDecoder;

use super::frame_file_name;
use super::stats::{dataset_stats, StatsReport};
use super::types::{
    validate_id, FrameLabel, FrameStatus, Manifest, Provenance, VideoLabels, VideoMeta, VideoRecord,
};
use crate::contour::GacParams;
use crate::error::{Error, IoContext, Result};
use crate::frame::GrayFrame;
use crate::mask::BinaryMask;

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp", "tif", "tiff"];

/// Random-access frame provider for tracking and contour refinement.
pub trait FrameSource {
    fn n_frames(&self) -> usize;
    fn dims(&self) -> (u32, u32);
    fn frame(&self, idx: usize) -> Result<GrayFrame>;
}

/// Writes annotation outcomes for one video.
pub trait LabelSink {
    fn write_ground_truth(
        &mut self,
        idx: usize,
        mask: &BinaryMask,
        params: &GacParams,
        provenance: Provenance,
    ) -> Result<()>;

    /// Marks a frame negative or discarded, deleting any stored mask.
    fn set_status(&mut self, idx: usize, status: FrameStatus, provenance: Provenance)
        -> Result<()>;

    fn record_seed(&mut self, idx: usize) -> Result<()>;
}

/// Frames held in memory; handy for synthetic sequences.
#[derive(Debug, Clone)]
pub struct InMemoryFrames(pub Vec<GrayFrame>);

impl FrameSource for InMemoryFrames {
    fn n_frames(&self) -> usize {
        self.0.len()
    }

    fn dims(&self) -> (u32, u32) {
        self.0.first().map(GrayFrame::dims).unwrap_or((0, 0))
    }

    fn frame(&self, idx: usize) -> Result<GrayFrame> {
        self.0
            .get(idx)
            .cloned()
            .ok_or_else(|| Error::Geometry(format!("frame {idx} out of range")))
    }
}

/// A dataset rooted at a directory following the canonical layout.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
}

impl Dataset {
    /// Opens (or lazily creates) a dataset root. A missing manifest reads as
    /// empty.
    pub fn open(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn frame_path(&self, video_id: &str, idx: usize) -> PathBuf {
        self.root
            .join("frames")
            .join(video_id)
            .join(frame_file_name(idx))
    }

    pub fn mask_path(&self, video_id: &str, idx: usize) -> PathBuf {
        self.root
            .join("masks")
            .join(video_id)
            .join(frame_file_name(idx))
    }

    pub fn labels_path(&self, video_id: &str) -> PathBuf {
        self.root.join("labels").join(format!("{video_id}.json"))
    }

    pub fn session_log_path(&self, video_id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{video_id}.jsonl"))
    }

    fn lock_path(&self, video_id: &str) -> PathBuf {
        self.root.join("labels").join(format!("{video_id}.lock"))
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let path = self.manifest_path();
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).at(&path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(e).at(&path),
        }
    }

    fn write_manifest(&self, manifest: &Manifest) -> Result<()> {
        write_json_atomic(&self.manifest_path(), manifest)
    }

    pub fn video(&self, video_id: &str) -> Result<VideoRecord> {
        self.manifest()?
            .get(video_id)
            .cloned()
            .ok_or_else(|| Error::UnknownVideo(video_id.to_string()))
    }

    pub fn labels(&self, video_id: &str) -> Result<VideoLabels> {
        let path = self.labels_path(video_id);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).at(&path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(VideoLabels::default()),
            Err(e) => Err(e).at(&path),
        }
    }

    pub fn frame(&self, video_id: &str, idx: usize) -> Result<GrayFrame> {
        GrayFrame::load(&self.frame_path(video_id, idx))
    }

    /// Ground-truth mask of a positive frame, if one is stored.
    pub fn mask(&self, video_id: &str, idx: usize) -> Result<Option<BinaryMask>> {
        let path = self.mask_path(video_id, idx);
        if path.exists() {
            BinaryMask::load(&path).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn frames(&self, video_id: &str) -> Result<VideoFrames> {
        Ok(VideoFrames {
            dataset: self.clone(),
            record: self.video(video_id)?,
        })
    }

    /// Ingests a directory of frame images (sorted by file name) or an
    /// animated GIF.
    pub fn ingest_video(&self, source: &Path, meta: VideoMeta) -> Result<VideoRecord> {
        meta.check_required()?;
        let frames = read_source_frames(source)?;
        self.ingest_luma(frames, meta)
    }

    /// Ingests already-decoded frames.
    pub fn ingest_frames(&self, frames: &[GrayFrame], meta: VideoMeta) -> Result<VideoRecord> {
        meta.check_required()?;
        self.ingest_luma(frames.iter().map(GrayFrame::to_luma8).collect(), meta)
    }

    fn ingest_luma(&self, frames: Vec<image::GrayImage>, meta: VideoMeta) -> Result<VideoRecord> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Ingest("source contains no frames".into()))?;
        let (w, h) = first.dimensions();
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.dimensions() != (w, h))
        {
            return Err(Error::Ingest(format!(
                "frame {i} is {:?}, expected {:?}",
                f.dimensions(),
                (w, h)
            )));
        }
        let record = meta.into_record(w, h, frames.len())?;
        let mut manifest = self.manifest()?;
        if manifest.get(&record.id).is_some() {
            return Err(Error::Ingest(format!(
                "video {} already ingested",
                record.id
            )));
        }
        let _lock = self.writer(&record.id)?;
        let dir = self.root.join("frames").join(&record.id);
        fs::create_dir_all(&dir).at(&dir)?;
        for (idx, f) in frames.iter().enumerate() {
            let path = dir.join(frame_file_name(idx));
            f.save_with_format(&path, image::ImageFormat::Png)
                .at(&path)?;
        }
        manifest.videos.push(record.clone());
        self.write_manifest(&manifest)?;
        log::info!(
            "ingested {} ({} frames, {w}x{h})",
            record.id,
            record.n_frames
        );
        Ok(record)
    }

    /// Takes the per-video advisory write lock.
    pub fn writer(&self, video_id: &str) -> Result<VideoWriter> {
        validate_id(video_id)?;
        let path = self.lock_path(video_id);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).at(dir)?;
        }
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(VideoWriter {
                    dataset: self.clone(),
                    video_id: video_id.to_string(),
                    lock: path,
                })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(video_id.to_string()))
            }
            Err(e) => Err(e).at(&path),
        }
    }

    /// One-shot write under a transient lock.
    pub fn write_ground_truth(
        &self,
        video_id: &str,
        idx: usize,
        mask: &BinaryMask,
        params: &GacParams,
    ) -> Result<()> {
        self.writer(video_id)?
            .write_ground_truth(idx, mask, params, Provenance::Manual)
    }

    pub fn stats(&self) -> Result<StatsReport> {
        let manifest = self.manifest()?;
        let entries = manifest
            .videos
            .into_iter()
            .map(|v| {
                let labels = self.labels(&v.id)?;
                Ok((v, labels))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(dataset_stats(&entries))
    }
}

/// Frames of one stored video.
#[derive(Debug, Clone)]
pub struct VideoFrames {
    dataset: Dataset,
    record: VideoRecord,
}

impl VideoFrames {
    pub fn record(&self) -> &VideoRecord {
        &self.record
    }
}

impl FrameSource for VideoFrames {
    fn n_frames(&self) -> usize {
        self.record.n_frames
    }

    fn dims(&self) -> (u32, u32) {
        (self.record.width, self.record.height)
    }

    fn frame(&self, idx: usize) -> Result<GrayFrame> {
        if idx >= self.record.n_frames {
            return Err(Error::Geometry(format!(
                "frame {idx} out of range for {} frames",
                self.record.n_frames
            )));
        }
        self.dataset.frame(&self.record.id, idx)
    }
}

/// Exclusive writer for one video; the lock file is removed on drop.
#[derive(Debug)]
pub struct VideoWriter {
    dataset: Dataset,
    video_id: String,
    lock: PathBuf,
}

impl VideoWriter {
    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    fn update_labels(&self, f: impl FnOnce(&mut VideoLabels)) -> Result<()> {
        let mut labels = self.dataset.labels(&self.video_id)?;
        f(&mut labels);
        write_json_atomic(&self.dataset.labels_path(&self.video_id), &labels)
    }

    fn record(&self) -> Result<VideoRecord> {
        self.dataset.video(&self.video_id)
    }

    fn check_idx(&self, rec: &VideoRecord, idx: usize) -> Result<()> {
        if idx >= rec.n_frames {
            return Err(Error::Geometry(format!(
                "frame {idx} out of range for {} frames",
                rec.n_frames
            )));
        }
        Ok(())
    }
}

impl LabelSink for VideoWriter {
    fn write_ground_truth(
        &mut self,
        idx: usize,
        mask: &BinaryMask,
        params: &GacParams,
        provenance: Provenance,
    ) -> Result<()> {
        let rec = self.record()?;
        self.check_idx(&rec, idx)?;
        if mask.dims() != (rec.width, rec.height) {
            return Err(Error::Mask(format!(
                "mask is {:?}, video {} is {}x{}",
                mask.dims(),
                rec.id,
                rec.width,
                rec.height
            )));
        }
        let path = self.dataset.mask_path(&self.video_id, idx);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).at(dir)?;
        }
        let tmp = path.with_extension("png.tmp");
        mask.to_luma8()
            .save_with_format(&tmp, image::ImageFormat::Png)
            .at(&tmp)?;
        fs::rename(&tmp, &path).at(&path)?;
        self.update_labels(|labels| {
            labels.upsert(FrameLabel {
                idx,
                status: FrameStatus::Positive,
                provenance,
                gac_params: Some(params.clone()),
            })
        })
    }

    fn set_status(
        &mut self,
        idx: usize,
        status: FrameStatus,
        provenance: Provenance,
    ) -> Result<()> {
        if status == FrameStatus::Positive {
            return Err(Error::State(
                "positive labels are written with a ground-truth mask".into(),
            ));
        }
        let rec = self.record()?;
        self.check_idx(&rec, idx)?;
        let path = self.dataset.mask_path(&self.video_id, idx);
        match fs::remove_file(&path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e).at(&path),
        }
        self.update_labels(|labels| {
            labels.upsert(FrameLabel {
                idx,
                status,
                provenance,
                gac_params: None,
            })
        })
    }

    fn record_seed(&mut self, idx: usize) -> Result<()> {
        let rec = self.record()?;
        self.check_idx(&rec, idx)?;
        self.update_labels(|labels| {
            if let Err(i) = labels.seed_frames.binary_search(&idx) {
                labels.seed_frames.insert(i, idx);
            }
        })
    }
}

impl Drop for VideoWriter {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

pub(crate) fn write_json_atomic<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).at(dir)?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).at(path)?;
    bytes.push(b'\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes).at(&tmp)?;
    fs::rename(&tmp, path).at(path)
}

fn read_source_frames(source: &Path) -> Result<Vec<image::GrayImage>> {
    if source.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(source)
            .at(source)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        paths.sort();
        return paths
            .iter()
            .map(|p| Ok(image::open(p).at(p)?.to_luma8()))
            .collect();
    }
    let ext = source
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("gif") => {
            let file = fs::File::open(source).at(source)?;
            let decoder =
                image::codecs::gif::GifDecoder::new(std::io::BufReader::new(file)).at(source)?;
            let frames = decoder.into_frames().collect_frames().at(source)?;
            Ok(frames
                .into_iter()
                .map(|f| image::DynamicImage::ImageRgba8(f.into_buffer()).to_luma8())
                .collect())
        }
        _ if !source.exists() => Err(Error::Ingest(format!(
            "source {} does not exist",
            source.display()
        ))),
        _ => Err(Error::Ingest(format!(
            "unsupported video container {}; extract frames to a directory first",
            source.display()
        ))),
    }
}
