use std::collections::BTreeMap;

use nervetrace::dataset::{Gain, Machine, PatientMeta, Plexus, Sex, Side, VideoRecord};
use nervetrace::split::{stratified_kfold, SplitSpec, Splits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(i: usize, side: Side, gain: Gain, sex: Sex) -> VideoRecord {
    VideoRecord {
        id: format!("vid{i:03}"),
        machine: Machine::Esaote,
        plexus: if i.is_multiple_of(3) {
            Plexus::Isc
        } else {
            Plexus::Scbp
        },
        side,
        gain,
        depth_setting: "4cm".into(),
        width: 128,
        height: 128,
        n_frames: 40,
        eval_resolution: (256, 256),
        patient: PatientMeta {
            age: 30.0 + (i % 40) as f64,
            sex,
            height: 170.0,
            bmi: 24.0,
        },
    }
}

fn random_manifest(seed: u64, n: usize) -> Vec<VideoRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let side = if rng.random_bool(0.5) {
                Side::Left
            } else {
                Side::Right
            };
            let gain = [Gain::Low, Gain::Medium, Gain::High][rng.random_range(0..3)];
            let sex = if rng.random_bool(0.5) {
                Sex::Male
            } else {
                Sex::Female
            };
            record(i, side, gain, sex)
        })
        .collect()
}

type Key = (Side, Gain, Sex);

fn strata(videos: &[VideoRecord]) -> BTreeMap<Key, Vec<&str>> {
    let mut out: BTreeMap<Key, Vec<&str>> = BTreeMap::new();
    for v in videos {
        out.entry((v.side, v.gain, v.patient.sex))
            .or_default()
            .push(&v.id);
    }
    out
}

/// Every stratum's share of every split is within one video of
/// `stratum size × split fraction`.
fn assert_stratum_balance(videos: &[VideoRecord], splits: &Splits) {
    for (key, members) in strata(videos) {
        let n = members.len() as f64;
        for (i, fold) in splits.folds.iter().enumerate() {
            for (name, set, frac) in [
                ("train", &fold.train, 0.61),
                ("val", &fold.val, 0.19),
                ("test", &fold.test, 0.20),
            ] {
                let got = members
                    .iter()
                    .filter(|m| set.iter().any(|s| s == *m))
                    .count() as f64;
                assert!(
                    (got - n * frac).abs() <= 1.0 + 1e-9,
                    "fold {i} {name} {key:?}: {got} of {n}"
                );
            }
        }
    }
}

#[test]
fn balanced_across_seeds_and_manifests() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let videos = random_manifest(seed, 100);
        let splits = stratified_kfold(&videos, &SplitSpec::with_seed(seed)).unwrap();
        splits.check(&videos).unwrap();
        for f in &splits.folds {
            assert!((f.train.len() as i64 - 61).abs() <= 1);
            assert!((f.val.len() as i64 - 19).abs() <= 1);
            assert!((f.test.len() as i64 - 20).abs() <= 1);
        }
        if strata(&videos).values().all(|m| m.len() >= 5) {
            assert_stratum_balance(&videos, &splits);
            checked += 1;
        }
    }
    assert!(
        checked >= 10,
        "only {checked} manifests had every stratum filled"
    );
}

#[test]
fn no_test_video_leaks_into_training() {
    let videos = random_manifest(99, 57);
    let splits = stratified_kfold(&videos, &SplitSpec::with_seed(5)).unwrap();
    for f in &splits.folds {
        for id in &f.test {
            assert!(!f.train.contains(id) && !f.val.contains(id));
        }
    }
}

#[test]
fn splits_json_shape() {
    let videos = random_manifest(1, 12);
    let splits = stratified_kfold(&videos, &SplitSpec::with_seed(11)).unwrap();
    let v: serde_json::Value = serde_json::to_value(&splits).unwrap();
    assert_eq!(v["seed"], 11);
    let fold = &v["folds"][0];
    let mut keys: Vec<&str> = fold
        .as_object()
        .unwrap()
        .keys()
        .map(|s| s.as_str())
        .collect();
    keys.sort();
    assert_eq!(keys, ["test", "train", "val"]);
    assert_eq!(v["folds"].as_array().unwrap().len(), 5);
}
