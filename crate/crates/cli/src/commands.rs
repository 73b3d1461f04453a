use std::error::Error;
use std::fs;
use std::path::Path;

use nervetrace::annotation::{fuse_boxes, read_log, replay};
use nervetrace::augment::{materialize, AugmentConfig};
use nervetrace::contour::{inverse_gaussian_gradient, morph_gac, GacParams};
use nervetrace::dataset::{Dataset, FrameSource, LabelSink, Provenance, VideoMeta};
use nervetrace::metrics::{evaluate_dataset, pr_curves_from_disk, write_pr_csv, MetricsConfig};
use nervetrace::split::{stratified_kfold, SplitSpec};
use nervetrace::tracker::{KcfModel, KcfParams, LOW_CONFIDENCE_PEAK};
use nervetrace::BoundingBox;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::Command;

type CmdResult = Result<(), Box<dyn Error>>;

pub fn run(command: Command) -> CmdResult {
    match command {
        Command::Ingest {
            dataset,
            source,
            meta,
            id,
        } => {
            let mut meta: VideoMeta = read_json(&meta)?;
            if let Some(id) = id {
                meta.id = id;
            }
            let record = Dataset::open(dataset.dataset).ingest_video(&source, meta)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
            Ok(())
        }
        Command::AnnotateReplay {
            dataset,
            video,
            log,
        } => {
            let ds = Dataset::open(dataset.dataset);
            let log = log.unwrap_or_else(|| ds.session_log_path(&video));
            let events = read_log(&log)?;
            let frames = ds.frames(&video)?;
            let mut writer = ds.writer(&video)?;
            let session = replay(&events, &frames, &mut writer)?;
            let committed = session
                .states()
                .iter()
                .filter(|s| s.name() == "committed")
                .count();
            log::info!(
                "replayed {} events on {video}: {committed} committed frames",
                events.len()
            );
            Ok(())
        }
        Command::Track {
            dataset,
            video,
            frame,
            boxes,
            count,
            out,
        } => track(
            &Dataset::open(dataset.dataset),
            &video,
            frame,
            &boxes,
            count,
            &out,
        ),
        Command::Refine {
            dataset,
            video,
            frame,
            boxes,
            params,
            out,
        } => {
            let params: GacParams = match params {
                Some(p) => read_json(&p)?,
                None => GacParams::default(),
            };
            params.validate()?;
            let ds = Dataset::open(dataset.dataset);
            let frames = ds.frames(&video)?;
            let image = frames.frame(frame)?;
            let init = fuse_boxes(&boxes, frames.dims())?;
            let edge = inverse_gaussian_gradient(&image, params.edge_alpha, params.edge_sigma)?;
            let mask = morph_gac(&edge, &init, &params)?;
            ds.writer(&video)?
                .write_ground_truth(frame, &mask, &params, Provenance::Manual)?;
            if let Some(out) = out {
                mask.save_png(&out)?;
            }
            log::info!("{video} frame {frame}: {} px committed", mask.area());
            Ok(())
        }
        Command::Augment {
            dataset,
            out,
            seed,
            config,
        } => {
            let mut cfg: AugmentConfig = match config {
                Some(p) => read_json(&p)?,
                None => AugmentConfig::default(),
            };
            cfg.seed = seed;
            let applied = materialize(&Dataset::open(dataset.dataset), &out, &cfg)?;
            let frames: usize = applied.values().map(Vec::len).sum();
            log::info!("augmented {frames} frames from {} videos", applied.len());
            Ok(())
        }
        Command::Split {
            dataset,
            seed,
            k,
            out,
        } => {
            let manifest = Dataset::open(dataset.dataset).manifest()?;
            let spec = SplitSpec {
                k,
                seed,
                ..SplitSpec::default()
            };
            let splits = stratified_kfold(&manifest.videos, &spec)?;
            write_json(&out, &splits)
        }
        Command::Evaluate {
            gt,
            pred,
            class,
            out,
            config,
            videos,
            pr_dir,
        } => {
            let cfg: MetricsConfig = match config {
                Some(p) => read_json(&p)?,
                None => MetricsConfig::default(),
            };
            let ds = Dataset::open(gt);
            let only = (!videos.is_empty()).then_some(videos.as_slice());
            let report = evaluate_dataset(&ds, &pred, class, &cfg, only)?;
            write_json(&out, &report)?;
            if let Some(dir) = pr_dir {
                fs::create_dir_all(&dir)?;
                for c in class.classes() {
                    for (t, points) in pr_curves_from_disk(&ds, &pred, c, &cfg, only)? {
                        write_pr_csv(&dir.join(format!("pr_{c}_iou{t:.2}.csv")), &points)?;
                    }
                }
            }
            Ok(())
        }
        Command::Stats { dataset, out } => {
            let report = Dataset::open(dataset.dataset).stats()?;
            match out {
                Some(path) => write_json(&path, &report),
                None => {
                    println!("{}", serde_json::to_string_pretty(&report)?);
                    Ok(())
                }
            }
        }
        Command::Serve {
            dataset,
            addr,
            origins,
        } => {
            let ds = Dataset::open(dataset.dataset);
            ds.manifest()?;
            let config = nervetrace_server::ServerConfig {
                allowed_origins: origins,
                ..Default::default()
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(nervetrace_server::serve(addr, ds, config))?;
            Ok(())
        }
    }
}

/// Tracks each seed box independently and writes one entry per frame.
fn track(
    ds: &Dataset,
    video: &str,
    seed_frame: usize,
    boxes: &[BoundingBox],
    count: Option<usize>,
    out: &Path,
) -> CmdResult {
    let frames = ds.frames(video)?;
    let first = frames.frame(seed_frame)?;
    let mut trackers = boxes
        .iter()
        .map(|b| {
            b.validate(first.width(), first.height())?;
            KcfModel::init(&first, *b, KcfParams::default())
        })
        .collect::<nervetrace::Result<Vec<_>>>()?;
    let last = match count {
        Some(n) => (seed_frame + n).min(frames.n_frames() - 1),
        None => frames.n_frames() - 1,
    };
    let mut rows = Vec::new();
    for idx in seed_frame + 1..=last {
        let frame = frames.frame(idx)?;
        let mut step_boxes = Vec::with_capacity(trackers.len());
        let mut confidence = f64::INFINITY;
        for t in &mut trackers {
            let step = t.step(&frame)?;
            confidence = confidence.min(step.peak);
            step_boxes.push(step.bbox);
        }
        rows.push(json!({
            "frame_idx": idx,
            "boxes": step_boxes,
            "confidence": confidence,
            "low_confidence": confidence < LOW_CONFIDENCE_PEAK,
        }));
    }
    log::info!(
        "tracked {} boxes through {} frames",
        boxes.len(),
        rows.len()
    );
    write_json(
        out,
        &json!({ "video_id": video, "seed_frame": seed_frame, "seed_boxes": boxes, "frames": rows }),
    )
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Box<dyn Error>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}
