mod common;

use common::meta;
use nervetrace::augment::{apply, materialize, AppliedRecord, AugmentConfig};
use nervetrace::contour::GacParams;
use nervetrace::dataset::{Dataset, FrameStatus, LabelSink, Provenance};
use nervetrace::{BinaryMask, GrayFrame};

fn source() -> (tempfile::TempDir, Dataset) {
    let tmp = tempfile::tempdir().unwrap();
    let ds = Dataset::open(tmp.path().join("src"));
    let frames: Vec<GrayFrame> = (0..4)
        .map(|i| {
            GrayFrame::from_fn(80, 64, move |x, y| {
                ((x * 3 + y + i * 11) % 64) as f64 / 63.0
            })
        })
        .collect();
    ds.ingest_frames(&frames, meta("clip")).unwrap();
    let mut w = ds.writer("clip").unwrap();
    let mask = BinaryMask::from_fn(80, 64, |x, y| {
        (20..50).contains(&x) && (15..45).contains(&y)
    });
    w.write_ground_truth(0, &mask, &GacParams::default(), Provenance::Seed)
        .unwrap();
    w.write_ground_truth(1, &mask, &GacParams::default(), Provenance::TrackedApproved)
        .unwrap();
    w.set_status(2, FrameStatus::Negative, Provenance::Manual)
        .unwrap();
    w.set_status(3, FrameStatus::Discarded, Provenance::Manual)
        .unwrap();
    drop(w);
    (tmp, ds)
}

#[test]
fn materialized_copy_matches_recorded_parameters() {
    let (tmp, ds) = source();
    let out = tmp.path().join("aug");
    let cfg = AugmentConfig::with_seed(5);
    let sidecar = materialize(&ds, &out, &cfg).unwrap();
    let aug = Dataset::open(&out);
    assert_eq!(aug.labels("clip").unwrap(), ds.labels("clip").unwrap());
    let applied = &sidecar["clip"];
    assert_eq!(
        applied.iter().map(|a| a.idx).collect::<Vec<_>>(),
        vec![0, 1, 2]
    );

    // The sidecar on disk matches the returned map.
    let text = std::fs::read_to_string(out.join("applied.json")).unwrap();
    let on_disk: std::collections::BTreeMap<String, Vec<AppliedRecord>> =
        serde_json::from_str(&text).unwrap();
    assert_eq!(&on_disk, &sidecar);

    // Re-applying the recorded parameters to the source reproduces the copy
    // (up to 8-bit storage of the frame).
    for rec in applied {
        let frame = ds.frame("clip", rec.idx).unwrap();
        let mask = ds
            .mask("clip", rec.idx)
            .unwrap()
            .unwrap_or_else(|| BinaryMask::empty(80, 64));
        let (f, m) = apply(&frame, &mask, &rec.applied).unwrap();
        let stored = aug.frame("clip", rec.idx).unwrap();
        let worst = f
            .data()
            .iter()
            .zip(stored.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(
            worst <= 0.5 / 255.0 + 1e-12,
            "frame {} off by {worst}",
            rec.idx
        );
        match aug.mask("clip", rec.idx).unwrap() {
            Some(stored_mask) => assert_eq!(stored_mask, m),
            None => assert_ne!(rec.idx, 0),
        }
    }
    assert!(aug.mask("clip", 2).unwrap().is_none());
}

#[test]
fn same_seed_same_output() {
    let (tmp, ds) = source();
    let a = materialize(&ds, &tmp.path().join("a"), &AugmentConfig::with_seed(9)).unwrap();
    let b = materialize(&ds, &tmp.path().join("b"), &AugmentConfig::with_seed(9)).unwrap();
    assert_eq!(a, b);
    for idx in 0..3 {
        let fa =
            std::fs::read(Dataset::open(tmp.path().join("a")).frame_path("clip", idx)).unwrap();
        let fb =
            std::fs::read(Dataset::open(tmp.path().join("b")).frame_path("clip", idx)).unwrap();
        assert_eq!(fa, fb);
    }
}
