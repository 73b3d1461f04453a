use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{FrameStatus, Plexus, Sex, VideoLabels, VideoRecord};
use crate::summary::MeanSd;

/// Demographic and frame counts for one group of videos.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub videos: usize,
    /// Non-discarded frames.
    pub frames: usize,
    pub positive_frames: usize,
    pub male: usize,
    pub female: usize,
    pub age: MeanSd,
    pub height: MeanSd,
    pub bmi: MeanSd,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: GroupStats,
    pub by_plexus: BTreeMap<Plexus, GroupStats>,
}

fn group<'a>(entries: impl Iterator<Item = &'a (VideoRecord, VideoLabels)> + Clone) -> GroupStats {
    let mut g = GroupStats::default();
    for (rec, labels) in entries.clone() {
        g.videos += 1;
        g.frames += rec
            .n_frames
            .saturating_sub(labels.count(FrameStatus::Discarded));
        g.positive_frames += labels.count(FrameStatus::Positive);
        match rec.patient.sex {
            Sex::Male => g.male += 1,
            Sex::Female => g.female += 1,
        }
    }
    g.age = MeanSd::of(entries.clone().map(|(r, _)| r.patient.age));
    g.height = MeanSd::of(entries.clone().map(|(r, _)| r.patient.height));
    g.bmi = MeanSd::of(entries.map(|(r, _)| r.patient.bmi));
    g
}

/// Per-plexus and overall summary of a dataset. Every plexus class appears
/// in `by_plexus`, zero-filled when it has no videos.
pub fn dataset_stats(entries: &[(VideoRecord, VideoLabels)]) -> StatsReport {
    let by_plexus = [Plexus::Scbp, Plexus::Isc, Plexus::None]
        .into_iter()
        .map(|p| (p, group(entries.iter().filter(move |(r, _)| r.plexus == p))))
        .collect();
    StatsReport {
        total: group(entries.iter()),
        by_plexus,
    }
}
