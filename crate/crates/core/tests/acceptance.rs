//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::{disk_frame, mean_boundary_distance, meta, moving_square, MemorySink};
use nervetrace::annotation::{read_log, replay, AnnotationSession, EventLog, Verdict};
use nervetrace::augment::{Applied, AugmentConfig};
use nervetrace::contour::{inverse_gaussian_gradient, GacParams, MorphGac};
use nervetrace::dataset::{
    Dataset, FrameStatus, Gain, InMemoryFrames, Machine, PatientMeta, Plexus, Sex, Side, VideoMeta,
    VideoRecord,
};
use nervetrace::metrics::{
    aggregate, classify_frame, derive_min_area, dice, evaluate_video, filter_small_components,
    ground_truth_areas, iou, DetectionOutcome, EvalFrame, MetricsConfig, MinArea,
};
use nervetrace::split::{stratified_kfold, SplitSpec};
use nervetrace::tracker::{KcfModel, KcfParams, LOW_CONFIDENCE_PEAK};
use nervetrace::{BinaryMask, BoundingBox, GrayFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// ---------------------------------------------------------------------------
// Metrics oracle

fn random_mask(rng: &mut ChaCha8Rng) -> BinaryMask {
    let mut m = BinaryMask::empty(64, 64);
    match rng.random_range(0..6) {
        0 => return m,
        1 => {
            let density: f64 = rng.random_range(0.05..0.6);
            for v in m.data_mut() {
                *v = rng.random_bool(density);
            }
            return m;
        }
        _ => {}
    }
    for _ in 0..rng.random_range(1..6) {
        let (cx, cy) = (rng.random_range(0..64i64), rng.random_range(0..64i64));
        let r = rng.random_range(1..18i64);
        let disk = rng.random_bool(0.5);
        for y in 0..64i64 {
            for x in 0..64i64 {
                let (dx, dy) = (x - cx, y - cy);
                let inside = if disk {
                    dx * dx + dy * dy <= r * r
                } else {
                    dx.abs() <= r && dy.abs() <= r / 2
                };
                if inside {
                    m.set(x as u32, y as u32, true);
                }
            }
        }
    }
    for _ in 0..rng.random_range(0..40) {
        m.set(rng.random_range(0..64), rng.random_range(0..64), true);
    }
    m
}

fn pixel_counts(a: &BinaryMask, b: &BinaryMask) -> (usize, usize, usize) {
    let (mut inter, mut na, mut nb) = (0, 0, 0);
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (pa, pb) = (a.get(x, y), b.get(x, y));
            na += pa as usize;
            nb += pb as usize;
            inter += (pa && pb) as usize;
        }
    }
    (inter, na, nb)
}

fn oracle_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (i, na, nb) = pixel_counts(a, b);
    if na + nb - i == 0 {
        1.0
    } else {
        i as f64 / (na + nb - i) as f64
    }
}

fn oracle_dice(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let (i, na, nb) = pixel_counts(a, b);
    if na + nb == 0 {
        1.0
    } else {
        2.0 * i as f64 / (na + nb) as f64
    }
}

/// Minimum-label propagation over 8-neighbourhoods until nothing changes.
fn oracle_filter(m: &BinaryMask, min_area: usize) -> BinaryMask {
    let (w, h) = (m.width() as i64, m.height() as i64);
    let idx = |x: i64, y: i64| (y * w + x) as usize;
    let mut label: Vec<usize> = (0..(w * h) as usize).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if !m.get(x as u32, y as u32) {
                    continue;
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w || ny >= h || !m.get(nx as u32, ny as u32) {
                            continue;
                        }
                        if label[idx(nx, ny)] < label[idx(x, y)] {
                            label[idx(x, y)] = label[idx(nx, ny)];
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for y in 0..h {
        for x in 0..w {
            if m.get(x as u32, y as u32) {
                *sizes.entry(label[idx(x, y)]).or_default() += 1;
            }
        }
    }
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        m.get(x, y) && sizes[&label[idx(x as i64, y as i64)]] >= min_area
    })
}

fn oracle_classify(
    pred: &BinaryMask,
    gt: &BinaryMask,
    t: f64,
    min_area: usize,
) -> DetectionOutcome {
    let p = oracle_filter(pred, min_area);
    let (_, np, ng) = pixel_counts(&p, gt);
    match (ng == 0, np == 0) {
        (true, true) => DetectionOutcome::TrueNegative,
        (true, false) => DetectionOutcome::FalsePositive,
        (false, true) => DetectionOutcome::FalseNegative,
        _ if oracle_iou(&p, gt) >= t => DetectionOutcome::TruePositive,
        _ => DetectionOutcome::FalsePositive,
    }
}

fn metrics_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = Vec::new();
    for pair in 0..200 {
        let a = random_mask(&mut rng);
        // Half the pairs are perturbed copies so high-IoU cases occur.
        let b = if rng.random_bool(0.5) {
            let mut b = a.clone();
            for _ in 0..rng.random_range(0..300) {
                let (x, y) = (rng.random_range(0..64), rng.random_range(0..64));
                b.set(x, y, !b.get(x, y));
            }
            b
        } else {
            random_mask(&mut rng)
        };
        let min_area = rng.random_range(1..120);
        let t = [0.25, 0.5, rng.random_range(0.01..0.99)][pair % 3];
        if iou(&a, &b).unwrap() != oracle_iou(&a, &b) {
            mismatches.push(format!("iou #{pair}"));
        }
        if dice(&a, &b).unwrap() != oracle_dice(&a, &b) {
            mismatches.push(format!("dice #{pair}"));
        }
        if filter_small_components(&a, min_area) != oracle_filter(&a, min_area) {
            mismatches.push(format!("filter #{pair}"));
        }
        if classify_frame(&a, &b, t, min_area).unwrap() != oracle_classify(&a, &b, t, min_area) {
            mismatches.push(format!("classify #{pair}"));
        }
    }
    let elapsed = secs(start.elapsed());
    check(
        mismatches.is_empty() && elapsed < 10.0,
        format!(
            "200 random 64x64 pairs, {} mismatches {:?}, {elapsed:.2} s (limit 10 s)",
            mismatches.len(),
            mismatches.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------------------
// Dice variants

fn rect(x0: u32, y0: u32, w: u32, h: u32) -> BinaryMask {
    BinaryMask::from_fn(64, 64, |x, y| {
        (x0..x0 + w).contains(&x) && (y0..y0 + h).contains(&y)
    })
}

fn dice_variants() -> Outcome {
    let empty = || BinaryMask::empty(64, 64);
    let cfg = MetricsConfig {
        min_area: MinArea { scbp: 1, isc: 1 },
        ..MetricsConfig::default()
    };
    // Video A (SCBP): TP with dice 100/150, TN, FP on an empty frame.
    let a = vec![
        EvalFrame {
            pred: rect(0, 0, 10, 10),
            gt: rect(0, 0, 10, 5),
        },
        EvalFrame {
            pred: empty(),
            gt: empty(),
        },
        EvalFrame {
            pred: rect(30, 30, 5, 5),
            gt: empty(),
        },
    ];
    // Video B (SCBP): exact TP, TP with dice 64/96.
    let b = vec![
        EvalFrame {
            pred: rect(5, 5, 20, 20),
            gt: rect(5, 5, 20, 20),
        },
        EvalFrame {
            pred: rect(0, 0, 8, 4),
            gt: rect(0, 0, 8, 8),
        },
    ];
    // Video C (ISC clip scored for SCBP): TN and FP.
    let c = vec![
        EvalFrame {
            pred: empty(),
            gt: empty(),
        },
        EvalFrame {
            pred: rect(40, 40, 6, 6),
            gt: empty(),
        },
    ];
    let va = evaluate_video("a", Plexus::Scbp, true, &a, &cfg).unwrap();
    let vb = evaluate_video("b", Plexus::Scbp, true, &b, &cfg).unwrap();
    let vc = evaluate_video("c", Plexus::Scbp, false, &c, &cfg).unwrap();
    let report = aggregate(vec![vc.clone(), va.clone(), vb.clone()], &cfg).unwrap();
    let agg = &report.aggregate[&Plexus::Scbp].dice;

    let (d1, d3) = (100.0 / 150.0, 64.0 / 96.0);
    let a_all = (d1 + 1.0 + 0.0) / 3.0;
    let b_all = (1.0 + d3) / 2.0;
    let c_all = (1.0 + 0.0) / 2.0;
    let expected = [
        ("A all", va.dice.all_videos, a_all),
        ("A class", va.dice.class_videos.unwrap_or(f64::NAN), a_all),
        (
            "A positive",
            va.dice.positive_frames.unwrap_or(f64::NAN),
            d1,
        ),
        ("B all", vb.dice.all_videos, b_all),
        (
            "B positive",
            vb.dice.positive_frames.unwrap_or(f64::NAN),
            (1.0 + d3) / 2.0,
        ),
        ("C all", vc.dice.all_videos, c_all),
        (
            "mean all_videos",
            agg.all_videos.mean,
            (a_all + b_all + c_all) / 3.0,
        ),
        (
            "mean class_videos",
            agg.class_videos.mean,
            (a_all + b_all) / 2.0,
        ),
        (
            "mean positive_frames",
            agg.positive_frames.mean,
            (d1 + (1.0 + d3) / 2.0) / 2.0,
        ),
    ];
    let mut bad: Vec<String> = expected
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > 1e-12)
        .map(|(name, got, want)| format!("{name}: {got} != {want}"))
        .collect();
    if vc.dice.class_videos.is_some() || vc.dice.positive_frames.is_some() {
        bad.push("C must be excluded from class_videos and positive_frames".into());
    }
    if agg.class_videos.n != 2 || agg.positive_frames.n != 2 || agg.all_videos.n != 3 {
        bad.push("variant video counts".into());
    }
    check(
        bad.is_empty(),
        format!(
            "3-video fixture, {} values checked to 1e-12 {:?}",
            expected.len(),
            bad
        ),
    )
}

// ---------------------------------------------------------------------------
// Min-area constants

fn raster_mask(area: usize) -> BinaryMask {
    let mut m = BinaryMask::empty(256, 256);
    for i in 0..area {
        m.set((i % 256) as u32, (i / 256) as u32, true);
    }
    m
}

fn fixture_video(ds: &Dataset, id: &str, plexus: Plexus, areas: &[usize]) {
    let frames = vec![GrayFrame::filled(256, 256, 0.3); areas.len()];
    ds.ingest_frames(
        &frames,
        VideoMeta {
            plexus: Some(plexus),
            ..meta(id)
        },
    )
    .unwrap();
    let mut w = ds.writer(id).unwrap();
    for (i, &a) in areas.iter().enumerate() {
        use nervetrace::dataset::{LabelSink, Provenance};
        w.write_ground_truth(
            i,
            &raster_mask(a),
            &GacParams::default(),
            Provenance::Manual,
        )
        .unwrap();
    }
}

fn min_area_constants() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let ds = Dataset::open(tmp.path());
    fixture_video(&ds, "scbp1", Plexus::Scbp, &[9000, 16200, 21000]);
    fixture_video(&ds, "scbp2", Plexus::Scbp, &[12000, 16200, 30000, 16200]);
    fixture_video(&ds, "isc1", Plexus::Isc, &[4560, 3000]);
    fixture_video(&ds, "isc2", Plexus::Isc, &[4580, 6000]);
    let scbp = ground_truth_areas(&ds, Plexus::Scbp).unwrap();
    let isc = ground_truth_areas(&ds, Plexus::Isc).unwrap();
    let s = derive_min_area(&scbp).unwrap();
    let i = derive_min_area(&isc).unwrap();
    check(
        s == 3240 && i.abs_diff(914) <= 1,
        format!("SCBP median 16200 -> {s} (want 3240), ISC median 4570 -> {i} (want 914 +/- 1)"),
    )
}

// ---------------------------------------------------------------------------
// Tracker

fn tracker_accuracy() -> Outcome {
    let start = Instant::now();
    let mut worst_mean: f64 = 0.0;
    let mut worst_error: f64 = 0.0;
    let mut lost = Vec::new();
    for seed in 0..20u64 {
        let speed = 2.0 + 2.0 * seed as f64 / 19.0;
        let seq = moving_square(seed, 256, 32, 50, speed, 0.05);
        let mut model =
            KcfModel::init(&seq.frames[0], seq.seed_box(), KcfParams::default()).unwrap();
        let mut total = 0.0;
        for i in 1..50 {
            let step = model.step(&seq.frames[i]).unwrap();
            let (cx, cy) = step.bbox.center();
            let (tx, ty) = seq.true_center(i);
            let err = (cx - tx).hypot(cy - ty);
            total += err;
            worst_error = worst_error.max(err);
            if err > seq.side as f64 / 2.0 || step.peak < LOW_CONFIDENCE_PEAK {
                lost.push((seed, i));
            }
        }
        worst_mean = worst_mean.max(total / 49.0);
    }
    let elapsed = secs(start.elapsed());
    check(
        worst_mean <= 2.0 && lost.is_empty() && elapsed < 30.0,
        format!(
            "20 sequences x 50 frames, worst per-sequence mean error {worst_mean:.2} px (limit 2), \
             max error {worst_error:.2} px, {} lost frames, {elapsed:.2} s (limit 30 s)",
            lost.len()
        ),
    )
}

fn tracker_throughput() -> Outcome {
    let seq = moving_square(77, 256, 64, 2, 2.0, 0.05);
    let bbox = BoundingBox::new(96, 96, 64, 64);
    let mut model = KcfModel::init(&seq.frames[0], bbox, KcfParams::default()).unwrap();
    let template = model.template_dims();
    let frames = [&seq.frames[1], &seq.frames[0]];
    for i in 0..20 {
        model.step(frames[i % 2]).unwrap();
    }
    let n = 300;
    let start = Instant::now();
    for i in 0..n {
        model.step(frames[i % 2]).unwrap();
    }
    let rate = n as f64 / secs(start.elapsed());
    check(
        rate >= 100.0 && template.0.max(template.1) == 96,
        format!("{rate:.0} steps/s on 256x256, template {template:?} (limit 100 steps/s)"),
    )
}

// ---------------------------------------------------------------------------
// Contours

fn contour_convergence() -> Outcome {
    let frame = disk_frame(160, 80.0, 80.0, 40.0);
    let init = BinaryMask::from_fn(160, 160, |x, y| {
        (30..130).contains(&x) && (30..130).contains(&y)
    });
    let params = GacParams {
        iterations: 200,
        smoothing: 1,
        threshold: 0.3,
        balloon: -1.0,
        edge_alpha: 100.0,
        edge_sigma: 2.0,
    };
    let edge = inverse_gaussian_gradient(&frame, params.edge_alpha, params.edge_sigma).unwrap();
    let mut evo = MorphGac::new(&edge, &init, &params).unwrap();
    let mut reached = None;
    for it in 1..=200 {
        evo.step();
        if reached.is_none() && mean_boundary_distance(evo.mask(), 80.0, 80.0, 40.0) <= 2.0 {
            reached = Some(it);
        }
    }
    let final_distance = mean_boundary_distance(evo.mask(), 80.0, 80.0, 40.0);

    // Pure erosion: flat image, shrinking balloon, no smoothing.
    let flat = GrayFrame::filled(64, 64, 0.5);
    let flat_edge = inverse_gaussian_gradient(&flat, 100.0, 2.0).unwrap();
    let erosion = GacParams {
        iterations: 100,
        smoothing: 0,
        threshold: 0.5,
        balloon: -1.0,
        ..GacParams::default()
    };
    let start = BinaryMask::from_fn(64, 64, |x, y| (8..56).contains(&x) && (10..50).contains(&y));
    let mut evo = MorphGac::new(&flat_edge, &start, &erosion).unwrap();
    let mut areas = vec![start.area()];
    while !evo.mask().is_empty() && areas.len() < 100 {
        evo.step();
        areas.push(evo.mask().area());
    }
    let strictly = areas.windows(2).all(|w| w[1] < w[0]) && *areas.last().unwrap() == 0;
    check(
        reached.is_some() && final_distance <= 2.0 && strictly,
        format!(
            "disk r=40: mean boundary distance <= 2 px from iteration {reached:?}, {final_distance:.2} px \
             after 200; flat erosion strictly decreasing over {} steps: {strictly}",
            areas.len() - 1
        ),
    )
}

// ---------------------------------------------------------------------------
// Augmentation

fn augmentation_ranges() -> Outcome {
    let cfg = AugmentConfig::with_seed(31);
    let n = 10_000u64;
    // 99% two-sided normal interval for Binomial(n, 0.5).
    let half = 2.575_829_303_548_901 * (n as f64 * 0.25).sqrt();
    let (lo, hi) = (n as f64 / 2.0 - half, n as f64 / 2.0 + half);
    let mut bad = Vec::new();
    let mut flips_seen = Vec::new();
    for (gain, (glo, ghi)) in [
        (Gain::High, (1.5, 2.0)),
        (Gain::Low, (0.5, 0.75)),
        (Gain::Medium, (0.75, 1.33)),
    ] {
        let mut flips = 0u64;
        let mut rng = cfg.rng_for(gain as u64);
        for _ in 0..n {
            let a = Applied::sample(&cfg, gain, &mut rng);
            flips += a.flipped as u64;
            if !(a.gamma >= glo && a.gamma <= ghi) {
                bad.push(format!("{gain:?} gamma {}", a.gamma));
            }
            if !(-10.0..=10.0).contains(&a.angle_deg) {
                bad.push(format!("angle {}", a.angle_deg));
            }
        }
        if !((flips as f64) >= lo && (flips as f64) <= hi) {
            bad.push(format!("{gain:?} flips {flips}"));
        }
        flips_seen.push(flips);
    }
    check(
        bad.is_empty(),
        format!(
            "3 x 10000 samples, flips {flips_seen:?} within [{lo:.1}, {hi:.1}], {} violations {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------------------
// Splits

fn split_protocol() -> Outcome {
    let sides = [Side::Left, Side::Right];
    let gains = [Gain::Low, Gain::Medium, Gain::High];
    let sexes = [Sex::Male, Sex::Female];
    let videos: Vec<VideoRecord> = (0..100)
        .map(|i| VideoRecord {
            id: format!("video{i:03}"),
            machine: Machine::Esaote,
            plexus: if i % 4 == 0 {
                Plexus::Isc
            } else {
                Plexus::Scbp
            },
            side: sides[i % 2],
            gain: gains[(i / 2) % 3],
            depth_setting: "4cm".into(),
            width: 640,
            height: 480,
            n_frames: 60,
            eval_resolution: (256, 256),
            patient: PatientMeta {
                age: 25.0 + (i % 50) as f64,
                sex: sexes[(i / 6) % 2],
                height: 170.0,
                bmi: 24.0,
            },
        })
        .collect();
    let splits = stratified_kfold(&videos, &SplitSpec::with_seed(42)).unwrap();
    let mut bad = Vec::new();
    if let Err(e) = splits.check(&videos) {
        bad.push(e.to_string());
    }
    let mut sizes = Vec::new();
    for f in &splits.folds {
        let s = (f.train.len(), f.val.len(), f.test.len());
        sizes.push(s);
        if s.0.abs_diff(61) > 1 || s.1.abs_diff(19) > 1 || s.2.abs_diff(20) > 1 {
            bad.push(format!("fold sizes {s:?}"));
        }
    }
    let mut strata: BTreeMap<(Side, Gain, Sex), Vec<&str>> = BTreeMap::new();
    for v in &videos {
        strata
            .entry((v.side, v.gain, v.patient.sex))
            .or_default()
            .push(&v.id);
    }
    let mut worst: f64 = 0.0;
    for members in strata.values() {
        let n = members.len() as f64;
        for f in &splits.folds {
            for (set, frac) in [(&f.train, 0.61), (&f.val, 0.19), (&f.test, 0.20)] {
                let got = members
                    .iter()
                    .filter(|m| set.iter().any(|s| s == *m))
                    .count() as f64;
                worst = worst.max((got - n * frac).abs());
            }
        }
    }
    if worst > 1.0 + 1e-9 {
        bad.push(format!("stratum deviation {worst:.2}"));
    }
    check(
        bad.is_empty(),
        format!(
            "100 videos, 5 folds sized {:?}, {} strata, worst stratum deviation {worst:.2} videos (limit 1) {:?}",
            sizes,
            strata.len(),
            bad
        ),
    )
}

// ---------------------------------------------------------------------------
// End-to-end replay

fn record_session(ds: &Dataset, id: &str) {
    let frames = ds.frames(id).unwrap();
    let mut writer = ds.writer(id).unwrap();
    let mut s = AnnotationSession::new(id, &frames, KcfParams::default()).unwrap();
    s.attach_log(EventLog::open(ds.session_log_path(id)).unwrap())
        .unwrap();
    let seq = moving_square(5, 128, 28, 30, 1.2, 0.03);
    s.set_seed(&frames, &mut writer, 0, &[seq.seed_box()])
        .unwrap();
    s.propagate(&frames, 10).unwrap();
    for i in 1..=6 {
        s.review(&mut writer, i, Verdict::Approve).unwrap();
    }
    s.review(&mut writer, 7, Verdict::Reject).unwrap();
    let (x, y) = seq.positions[7];
    let reseed = BoundingBox::new(x.round() as i32, y.round() as i32, 28, 28);
    s.set_seed(&frames, &mut writer, 7, &[reseed]).unwrap();
    s.propagate(&frames, 10).unwrap();
    for i in 8..=15 {
        s.review(&mut writer, i, Verdict::Approve).unwrap();
    }
    s.review(&mut writer, 16, Verdict::Discard).unwrap();
    s.review(&mut writer, 29, Verdict::Negative).unwrap();
    let grid = nervetrace::contour::default_proposal_grid();
    for i in [0usize, 3, 7, 12] {
        let proposals = s.proposals(&frames, i, &grid).unwrap();
        let pick = &proposals[i % proposals.len()];
        s.refine_and_commit(&frames, &mut writer, i, &pick.0, &pick.1)
            .unwrap();
    }
    let batch = GacParams {
        iterations: 25,
        ..GacParams::default()
    };
    s.commit_range(&frames, &mut writer, 0..=15, &batch)
        .unwrap();
}

fn end_to_end_replay() -> Outcome {
    let seq = moving_square(5, 128, 28, 30, 1.2, 0.03);
    let original = tempfile::tempdir().unwrap();
    let fresh = tempfile::tempdir().unwrap();
    let a = Dataset::open(original.path());
    let b = Dataset::open(fresh.path());
    a.ingest_frames(&seq.frames, meta("clip")).unwrap();
    b.ingest_frames(&seq.frames, meta("clip")).unwrap();
    record_session(&a, "clip");

    let events = read_log(&a.session_log_path("clip")).unwrap();
    {
        let frames = b.frames("clip").unwrap();
        let mut writer = b.writer("clip").unwrap();
        if let Err(e) = replay(&events, &frames, &mut writer) {
            return Err(format!("replay failed: {e}"));
        }
    }
    // Replaying into memory over the stored (8-bit) frames must agree too.
    let stored: Vec<GrayFrame> = (0..30).map(|i| a.frame("clip", i).unwrap()).collect();
    let mut sink = MemorySink::default();
    if let Err(e) = replay(&events, &InMemoryFrames(stored), &mut sink) {
        return Err(format!("in-memory replay failed: {e}"));
    }

    let la = a.labels("clip").unwrap();
    let lb = b.labels("clip").unwrap();
    let mut differing = Vec::new();
    let mut positives = 0;
    for idx in 0..30 {
        let pa = a.mask_path("clip", idx);
        let pb = b.mask_path("clip", idx);
        let ba = std::fs::read(&pa).ok();
        let bb = std::fs::read(&pb).ok();
        if ba != bb {
            differing.push(idx);
        }
        if ba.is_some() {
            positives += 1;
            let mem = sink.masks.get(&idx).map(|m| &m.0);
            let disk = a.mask("clip", idx).unwrap();
            if mem != disk.as_ref() {
                differing.push(idx);
            }
        }
    }
    let labels_equal = la == lb;
    check(
        differing.is_empty() && labels_equal && positives == 16 && la.count(FrameStatus::Discarded) == 1,
        format!(
            "30-frame clip, {} events, {positives} committed masks, byte-identical: {}, labels equal: {labels_equal}",
            events.len(),
            differing.is_empty()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("metrics_oracle_equivalence", metrics_oracle),
        ("dice_variant_semantics", dice_variants),
        ("min_area_constants", min_area_constants),
        ("tracker_accuracy", tracker_accuracy),
        ("tracker_throughput", tracker_throughput),
        ("contour_convergence", contour_convergence),
        ("augmentation_ranges", augmentation_ranges),
        ("split_protocol", split_protocol),
        ("end_to_end_replay", end_to_end_replay),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = std::panic::catch_unwind(run)
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
