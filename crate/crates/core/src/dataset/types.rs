use std::fmt;

use serde::{Deserialize, Serialize};

use crate::contour::GacParams;
use crate::error::{Error, Result};

/// Evaluation width every machine is normalized to.
pub const EVAL_WIDTH: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Machine {
    Esaote,
    Sonosite,
    Butterfly,
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plexus {
    Scbp,
    Isc,
    None,
}

impl Plexus {
    pub fn as_str(self) -> &'static str {
        match self {
            Plexus::Scbp => "scbp",
            Plexus::Isc => "isc",
            Plexus::None => "none",
        }
    }
}

impl fmt::Display for Plexus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Plexus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scbp" => Ok(Plexus::Scbp),
            "isc" => Ok(Plexus::Isc),
            "none" => Ok(Plexus::None),
            _ => Err(Error::Metadata(format!("unknown plexus {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gain {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientMeta {
    pub age: f64,
    pub sex: Sex,
    /// Centimetres.
    pub height: f64,
    pub bmi: f64,
}

impl PatientMeta {
    pub fn validate(&self) -> Result<()> {
        if !(20.0..=80.0).contains(&self.age) {
            return Err(Error::Metadata(format!(
                "patient age {} outside the 20-80 inclusion range",
                self.age
            )));
        }
        if self.bmi.is_nan() || self.bmi <= 0.0 {
            return Err(Error::Metadata(format!(
                "bmi must be positive, got {}",
                self.bmi
            )));
        }
        Ok(())
    }
}

/// One ultrasound clip as recorded in `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    pub machine: Machine,
    pub plexus: Plexus,
    pub side: Side,
    pub gain: Gain,
    pub depth_setting: String,
    pub width: u32,
    pub height: u32,
    pub n_frames: usize,
    pub eval_resolution: (u32, u32),
    pub patient: PatientMeta,
}

impl VideoRecord {
    pub fn validate(&self) -> Result<()> {
        validate_id(&self.id)?;
        if self.n_frames == 0 {
            return Err(Error::Ingest(format!("video {} has no frames", self.id)));
        }
        if self.width < 64 || self.height < 64 {
            return Err(Error::Ingest(format!(
                "video {} is {}x{}, both sides must be at least 64px",
                self.id, self.width, self.height
            )));
        }
        if self.eval_resolution.0 != EVAL_WIDTH || self.eval_resolution.1 == 0 {
            return Err(Error::Metadata(format!(
                "eval resolution {:?} must have width {EVAL_WIDTH}",
                self.eval_resolution
            )));
        }
        self.patient.validate()
    }
}

/// Normalized evaluation size per machine: 256x192 for Sonosite, 256x256
/// otherwise.
pub fn default_eval_resolution(machine: &Machine) -> (u32, u32) {
    match machine {
        Machine::Sonosite => (EVAL_WIDTH, 192),
        _ => (EVAL_WIDTH, 256),
    }
}

pub(crate) fn validate_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Metadata(format!("invalid video id {id:?}")))
    }
}

/// Ingest-time metadata. Everything except `depth_setting` and
/// `eval_resolution` is required; missing fields surface as
/// [`Error::Metadata`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VideoMeta {
    pub id: String,
    pub machine: Option<Machine>,
    pub plexus: Option<Plexus>,
    pub side: Option<Side>,
    pub gain: Option<Gain>,
    #[serde(default)]
    pub depth_setting: Option<String>,
    pub patient: Option<PatientMeta>,
    #[serde(default)]
    pub eval_resolution: Option<(u32, u32)>,
}

impl From<&VideoRecord> for VideoMeta {
    fn from(r: &VideoRecord) -> Self {
        Self {
            id: r.id.clone(),
            machine: Some(r.machine.clone()),
            plexus: Some(r.plexus),
            side: Some(r.side),
            gain: Some(r.gain),
            depth_setting: Some(r.depth_setting.clone()),
            patient: Some(r.patient.clone()),
            eval_resolution: Some(r.eval_resolution),
        }
    }
}

impl VideoMeta {
    pub(crate) fn into_record(
        self,
        width: u32,
        height: u32,
        n_frames: usize,
    ) -> Result<VideoRecord> {
        fn req<T>(v: Option<T>, name: &str) -> Result<T> {
            v.ok_or_else(|| Error::Metadata(format!("missing required field `{name}`")))
        }
        validate_id(&self.id)?;
        let machine = req(self.machine, "machine")?;
        let eval_resolution = self
            .eval_resolution
            .unwrap_or_else(|| default_eval_resolution(&machine));
        let record = VideoRecord {
            id: self.id,
            plexus: req(self.plexus, "plexus")?,
            side: req(self.side, "side")?,
            gain: req(self.gain, "gain")?,
            patient: req(self.patient, "patient")?,
            depth_setting: self.depth_setting.unwrap_or_default(),
            machine,
            width,
            height,
            n_frames,
            eval_resolution,
        };
        record.validate()?;
        Ok(record)
    }

    /// Checks required fields before any frame is touched.
    pub(crate) fn check_required(&self) -> Result<()> {
        self.clone().into_record(64, 64, 1).map(|_| ())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub videos: Vec<VideoRecord>,
}

impl Manifest {
    pub fn get(&self, id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Positive,
    Negative,
    Discarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Seed,
    TrackedApproved,
    Manual,
}

/// Label of one frame. A positive frame always has a mask file at
/// `masks/{video_id}/{idx:06}.png`; no other status has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLabel {
    pub idx: usize,
    pub status: FrameStatus,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gac_params: Option<GacParams>,
}

/// Contents of `labels/{video_id}.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoLabels {
    pub frames: Vec<FrameLabel>,
    pub seed_frames: Vec<usize>,
    pub tracker: String,
}

impl Default for VideoLabels {
    fn default() -> Self {
        Self {
            frames: Vec::new(),
            seed_frames: Vec::new(),
            tracker: "kcf".to_string(),
        }
    }
}

impl VideoLabels {
    pub fn get(&self, idx: usize) -> Option<&FrameLabel> {
        self.frames
            .binary_search_by_key(&idx, |f| f.idx)
            .ok()
            .map(|i| &self.frames[i])
    }

    /// Inserts or replaces the label for `label.idx`, keeping frames sorted.
    pub fn upsert(&mut self, label: FrameLabel) {
        match self.frames.binary_search_by_key(&label.idx, |f| f.idx) {
            Ok(i) => self.frames[i] = label,
            Err(i) => self.frames.insert(i, label),
        }
    }

    pub fn count(&self, status: FrameStatus) -> usize {
        self.frames.iter().filter(|f| f.status == status).count()
    }

    /// Frame indices usable for training or evaluation (labeled and not
    /// discarded).
    pub fn usable_frames(&self) -> impl Iterator<Item = &FrameLabel> {
        self.frames
            .iter()
            .filter(|f| f.status != FrameStatus::Discarded)
    }
}
