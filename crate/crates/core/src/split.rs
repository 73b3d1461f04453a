//! Stratified k-fold splits at video level.
//!
//! Videos are stratified by (side, gain, sex). Each stratum is shuffled with
//! the seed and dealt round-robin into `k` test groups; fold `i` tests on
//! group `i` and divides the rest between train and validation at 61:19.
//! Strata with fewer than `k` videos are pooled and regrouped by
//! (side, gain), then by side, then all together. Videos without any plexus
//! are training-only.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Gain, Plexus, Sex, Side, VideoRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub k: usize,
    /// Train, validation and test percentages.
    pub proportions: (u32, u32, u32),
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            k: 5,
            proportions: (61, 19, 20),
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.proportions;
        if a + b + c != 100 {
            return Err(Error::Param(format!(
                "split proportions {a}:{b}:{c} must sum to 100"
            )));
        }
        if a + b == 0 {
            return Err(Error::Param(
                "train and validation cannot both be empty".into(),
            ));
        }
        if self.k < 2 {
            return Err(Error::Param(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Contents of `splits.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl Splits {
    /// Checks that every fold partitions `videos` and that each video with a
    /// plexus is tested exactly once.
    pub fn check(&self, videos: &[VideoRecord]) -> Result<()> {
        let all: BTreeSet<&str> = videos.iter().map(|v| v.id.as_str()).collect();
        let mut tested = BTreeMap::new();
        for (i, fold) in self.folds.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for id in fold.train.iter().chain(&fold.val).chain(&fold.test) {
                if !seen.insert(id.as_str()) {
                    return Err(Error::Param(format!("fold {i}: {id} is in two sets")));
                }
            }
            if seen != all {
                return Err(Error::Param(format!("fold {i} does not cover every video")));
            }
            for id in &fold.test {
                *tested.entry(id.as_str()).or_insert(0) += 1;
            }
        }
        for v in videos {
            let n = tested.get(v.id.as_str()).copied().unwrap_or(0);
            let expected = usize::from(v.plexus != Plexus::None);
            if n != expected {
                return Err(Error::Param(format!("{} is tested {n} times", v.id)));
            }
        }
        Ok(())
    }
}

type StratumKey = (Option<Side>, Option<Gain>, Option<Sex>);

fn key_at(v: &VideoRecord, level: usize) -> StratumKey {
    match level {
        0 => (Some(v.side), Some(v.gain), Some(v.patient.sex)),
        1 => (Some(v.side), Some(v.gain), None),
        2 => (Some(v.side), None, None),
        _ => (None, None, None),
    }
}

/// Groups videos into strata of at least `k` members where possible.
fn strata<'a>(videos: &[&'a VideoRecord], k: usize) -> Vec<Vec<&'a VideoRecord>> {
    let mut out = Vec::new();
    let mut pool: Vec<&VideoRecord> = videos.to_vec();
    for level in 0..=3 {
        if pool.is_empty() {
            break;
        }
        let mut groups: BTreeMap<StratumKey, Vec<&VideoRecord>> = BTreeMap::new();
        for v in pool.drain(..) {
            groups.entry(key_at(v, level)).or_default().push(v);
        }
        for (key, group) in groups {
            if group.len() >= k || level == 3 {
                out.push(group);
            } else {
                log::warn!(
                    "stratum {key:?} has {} videos, fewer than {k} folds; pooling with a coarser stratification",
                    group.len()
                );
                pool.extend(group);
            }
        }
    }
    for s in &mut out {
        s.sort_by(|a, b| a.id.cmp(&b.id));
    }
    out
}

/// Validation-count constraints for one stratum in one fold.
#[derive(Debug, Clone, Copy)]
struct Band {
    /// Count that splits the stratum's test deviation evenly between
    /// validation and train.
    ideal: f64,
    /// Counts keeping both validation and train within one video of target.
    lo: usize,
    hi: usize,
    remaining: usize,
}

impl Band {
    fn new(val_target: f64, train_target: f64, remaining: usize) -> Self {
        const EPS: f64 = 1e-9;
        let r = remaining as f64;
        let ideal = (val_target + r - train_target) / 2.0;
        let lo = (val_target - 1.0).max(r - train_target - 1.0).max(0.0);
        let hi = (val_target + 1.0).min(r - train_target + 1.0).min(r);
        let (lo, hi) = ((lo - EPS).ceil() as usize, (hi + EPS).floor() as usize);
        if lo <= hi {
            Self {
                ideal,
                lo,
                hi,
                remaining,
            }
        } else {
            Self {
                ideal,
                lo: 0,
                hi: remaining,
                remaining,
            }
        }
    }
}

/// Validation counts per stratum summing to `total`. Counts stay inside
/// each band when the bands allow it and move toward the ideal otherwise.
fn apportion(bands: &[Band], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = bands
        .iter()
        .map(|b| (b.ideal.max(0.0).round() as usize).clamp(b.lo, b.hi))
        .collect();
    let mut sum: usize = counts.iter().sum();
    for relaxed in [false, true] {
        let lo = |b: &Band| if relaxed { 0 } else { b.lo };
        let hi = |b: &Band| if relaxed { b.remaining } else { b.hi };
        while sum < total {
            let Some(i) = (0..bands.len())
                .filter(|&i| counts[i] < hi(&bands[i]))
                .max_by(|&a, &b| {
                    let gap = |i: usize| bands[i].ideal - counts[i] as f64;
                    gap(a).total_cmp(&gap(b)).then(b.cmp(&a))
                })
            else {
                break;
            };
            counts[i] += 1;
            sum += 1;
        }
        while sum > total {
            let Some(i) = (0..bands.len())
                .filter(|&i| counts[i] > lo(&bands[i]))
                .max_by(|&a, &b| {
                    let gap = |i: usize| counts[i] as f64 - bands[i].ideal;
                    gap(a).total_cmp(&gap(b)).then(b.cmp(&a))
                })
            else {
                break;
            };
            counts[i] -= 1;
            sum -= 1;
        }
    }
    counts
}

/// Share of `total` for part `a` when split `a:b` by largest remainder;
/// an exact tie goes to `b`.
fn first_share(total: usize, a: u32, b: u32) -> usize {
    let exact = total as f64 * a as f64 / (a + b) as f64;
    let floor = exact.floor();
    if exact - floor > 0.5 {
        floor as usize + 1
    } else {
        floor as usize
    }
}

/// Builds `spec.k` folds over `videos`.
pub fn stratified_kfold(videos: &[VideoRecord], spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut ids = BTreeSet::new();
    if let Some(v) = videos.iter().find(|v| !ids.insert(v.id.as_str())) {
        return Err(Error::Param(format!("video {} listed twice", v.id)));
    }
    let k = spec.k;
    let (train_pct, val_pct, _) = spec.proportions;
    let negative_only: Vec<&str> = videos
        .iter()
        .filter(|v| v.plexus == Plexus::None)
        .map(|v| v.id.as_str())
        .collect();
    let eligible: Vec<&VideoRecord> = videos.iter().filter(|v| v.plexus != Plexus::None).collect();
    if eligible.len() < k {
        return Err(Error::Param(format!(
            "{} videos with a plexus cannot fill {k} test folds",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut strata: Vec<Vec<&VideoRecord>> = strata(&eligible, k);
    for s in &mut strata {
        s.shuffle(&mut rng);
    }
    // Group per video, dealt with one counter across strata so groups differ
    // in size by at most one.
    let mut group: Vec<Vec<usize>> = Vec::with_capacity(strata.len());
    let mut counter = 0usize;
    for s in &strata {
        group.push(
            s.iter()
                .map(|_| {
                    let g = counter % k;
                    counter += 1;
                    g
                })
                .collect(),
        );
    }
    let n = eligible.len() as f64;
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let test_size = group.iter().flatten().filter(|&&g| g == fold).count();
        let rest = eligible.len() - test_size;
        let val_total = first_share(rest, val_pct, train_pct);
        let train_total = rest - val_total;
        let mut bands = Vec::with_capacity(strata.len());
        for (s, g) in strata.iter().zip(&group) {
            let size = s.len() as f64;
            let remaining = s.len() - g.iter().filter(|&&x| x == fold).count();
            bands.push(Band::new(
                val_total as f64 * size / n,
                train_total as f64 * size / n,
                remaining,
            ));
        }
        let val_counts = apportion(&bands, val_total);
        let mut f = Fold::default();
        for ((s, g), &val_count) in strata.iter().zip(&group).zip(&val_counts) {
            let mut taken = 0;
            for (v, &gi) in s.iter().zip(g) {
                if gi == fold {
                    f.test.push(v.id.clone());
                } else if taken < val_count {
                    f.val.push(v.id.clone());
                    taken += 1;
                } else {
                    f.train.push(v.id.clone());
                }
            }
        }
        f.train.extend(negative_only.iter().map(|s| s.to_string()));
        f.train.sort();
        f.val.sort();
        f.test.sort();
        folds.push(f);
    }
    Ok(Splits {
        seed: spec.seed,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Machine, PatientMeta};

    pub(crate) fn video(id: &str, side: Side, gain: Gain, sex: Sex, plexus: Plexus) -> VideoRecord {
        VideoRecord {
            id: id.into(),
            machine: Machine::Esaote,
            plexus,
            side,
            gain,
            depth_setting: String::new(),
            width: 128,
            height: 128,
            n_frames: 10,
            eval_resolution: (256, 256),
            patient: PatientMeta {
                age: 40.0,
                sex,
                height: 170.0,
                bmi: 24.0,
            },
        }
    }

    fn uniform(n: usize) -> Vec<VideoRecord> {
        let sides = [Side::Left, Side::Right];
        let gains = [Gain::Low, Gain::Medium, Gain::High];
        let sexes = [Sex::Male, Sex::Female];
        (0..n)
            .map(|i| {
                video(
                    &format!("v{i:03}"),
                    sides[i % 2],
                    gains[(i / 2) % 3],
                    sexes[(i / 6) % 2],
                    Plexus::Scbp,
                )
            })
            .collect()
    }

    #[test]
    fn two_way_largest_remainder() {
        assert_eq!(first_share(80, 19, 61), 19);
        // 19 * 81 / 80 = 19.2375, the train share's remainder is larger.
        assert_eq!(first_share(81, 19, 61), 19);
        // 19 * 83 / 80 = 19.7125
        assert_eq!(first_share(83, 19, 61), 20);
        assert_eq!(first_share(0, 19, 61), 0);
    }

    #[test]
    fn apportion_respects_total_and_bands() {
        let bands = [
            Band::new(2.09, 6.71, 8),
            Band::new(2.09, 6.71, 9),
            Band::new(1.52, 4.88, 6),
        ];
        let counts = apportion(&bands, 6);
        assert_eq!(counts.iter().sum::<usize>(), 6);
        for (c, b) in counts.iter().zip(&bands) {
            assert!((b.lo..=b.hi).contains(c));
        }
    }

    #[test]
    fn fold_sizes_for_100_videos() {
        let videos = uniform(100);
        let splits = stratified_kfold(&videos, &SplitSpec::with_seed(1)).unwrap();
        splits.check(&videos).unwrap();
        for f in &splits.folds {
            assert_eq!((f.train.len(), f.val.len(), f.test.len()), (61, 19, 20));
        }
    }

    #[test]
    fn negative_only_videos_always_train() {
        let mut videos = uniform(30);
        videos.push(video("neg", Side::Left, Gain::Low, Sex::Male, Plexus::None));
        let splits = stratified_kfold(&videos, &SplitSpec::with_seed(4)).unwrap();
        splits.check(&videos).unwrap();
        assert!(splits
            .folds
            .iter()
            .all(|f| f.train.iter().any(|id| id == "neg")));
    }

    #[test]
    fn tiny_strata_are_pooled_not_rejected() {
        let mut videos = uniform(20);
        videos.push(video(
            "odd",
            Side::Left,
            Gain::High,
            Sex::Female,
            Plexus::Isc,
        ));
        let splits = stratified_kfold(&videos, &SplitSpec::with_seed(2)).unwrap();
        splits.check(&videos).unwrap();
    }

    #[test]
    fn seeds_control_the_shuffle() {
        let videos = uniform(50);
        let a = stratified_kfold(&videos, &SplitSpec::with_seed(7)).unwrap();
        let b = stratified_kfold(&videos, &SplitSpec::with_seed(7)).unwrap();
        let c = stratified_kfold(&videos, &SplitSpec::with_seed(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.folds, c.folds);
    }

    #[test]
    fn input_order_does_not_matter() {
        let videos = uniform(40);
        let mut reversed = videos.clone();
        reversed.reverse();
        let spec = SplitSpec::with_seed(3);
        assert_eq!(
            stratified_kfold(&videos, &spec).unwrap(),
            stratified_kfold(&reversed, &spec).unwrap()
        );
    }

    #[test]
    fn invalid_specs() {
        let videos = uniform(10);
        let spec = SplitSpec {
            proportions: (60, 20, 30),
            ..SplitSpec::default()
        };
        assert!(stratified_kfold(&videos, &spec).is_err());
        let spec = SplitSpec {
            k: 1,
            ..SplitSpec::default()
        };
        assert!(stratified_kfold(&videos, &spec).is_err());
        assert!(stratified_kfold(&uniform(3), &SplitSpec::default()).is_err());
    }
}
