//! On-disk dataset layout, ground-truth persistence and summary statistics.
//!
//! ```text
//! manifest.json
//! frames/{video_id}/{idx:06}.png   8-bit grayscale
//! masks/{video_id}/{idx:06}.png    0 = background, 255 = structure
//! labels/{video_id}.json           {frames, seed_frames, tracker}
//! sessions/{video_id}.jsonl        annotation event log
//! pred/{run_name}/{video_id}/...   prediction masks, same naming
//! ```

mod stats;
mod store;
mod types;

pub use stats::{dataset_stats, GroupStats, StatsReport};
pub(crate) use store::write_json_atomic;
pub use store::{Dataset, FrameSource, InMemoryFrames, LabelSink, VideoFrames, VideoWriter};
pub use types::{
    default_eval_resolution, FrameLabel, FrameStatus, Gain, Machine, Manifest, PatientMeta, Plexus,
    Provenance, Sex, Side, VideoLabels, VideoMeta, VideoRecord, EVAL_WIDTH,
};

/// File name used for frame `idx` under `frames/`, `masks/` and `pred/`.
pub fn frame_file_name(idx: usize) -> String {
    format!("{idx:06}.png")
}
