//! Synthetic fixtures shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nervetrace::contour::GacParams;
use nervetrace::dataset::{
    FrameStatus, Gain, LabelSink, Machine, PatientMeta, Plexus, Provenance, Sex, Side, VideoMeta,
};
use nervetrace::{BinaryMask, BoundingBox, GrayFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// A textured square moving at constant velocity over a flat, noisy
/// background. Positions are the square's top-left corner per frame.
pub struct MovingSquare {
    pub frames: Vec<GrayFrame>,
    pub positions: Vec<(f64, f64)>,
    pub side: u32,
}

impl MovingSquare {
    pub fn true_center(&self, i: usize) -> (f64, f64) {
        let (x, y) = self.positions[i];
        (x + self.side as f64 / 2.0, y + self.side as f64 / 2.0)
    }

    pub fn seed_box(&self) -> BoundingBox {
        let (x, y) = self.positions[0];
        BoundingBox::new(x.round() as i32, y.round() as i32, self.side, self.side)
    }
}

pub fn moving_square(
    seed: u64,
    size: u32,
    side: u32,
    n_frames: usize,
    speed: f64,
    noise_sd: f64,
) -> MovingSquare {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texture: Vec<f64> = (0..side * side)
        .map(|_| rng.random_range(0.35..1.0))
        .collect();
    let tex = GrayFrame::new(side, side, texture).unwrap();
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (vx, vy) = (speed * angle.cos(), speed * angle.sin());
    let travel = (n_frames - 1) as f64;
    let margin = 12.0;
    let span = size as f64 - side as f64 - 2.0 * margin;
    let mut start = |v: f64| {
        let extent = (v * travel).abs();
        let room = (span - extent).max(0.0);
        let offset = margin + rng.random_range(0.0..=room);
        if v >= 0.0 {
            offset
        } else {
            offset + extent
        }
    };
    let x0 = start(vx);
    let y0 = start(vy);
    let normal = Normal::new(0.0, noise_sd).unwrap();
    let mut frames = Vec::with_capacity(n_frames);
    let mut positions = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let (px, py) = (x0 + vx * i as f64, y0 + vy * i as f64);
        positions.push((px, py));
        let frame = GrayFrame::from_fn(size, size, |x, y| {
            let (tx, ty) = (x as f64 - px, y as f64 - py);
            let base =
                if tx >= 0.0 && ty >= 0.0 && tx <= (side - 1) as f64 && ty <= (side - 1) as f64 {
                    tex.sample_bilinear(tx, ty)
                } else {
                    0.2
                };
            base + normal.sample(&mut rng)
        });
        frames.push(frame);
    }
    MovingSquare {
        frames,
        positions,
        side,
    }
}

/// Bright disk on a dark background.
pub fn disk_frame(size: u32, cx: f64, cy: f64, r: f64) -> GrayFrame {
    GrayFrame::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        if dx * dx + dy * dy <= r * r {
            1.0
        } else {
            0.0
        }
    })
}

/// Mean distance from the mask's boundary pixels to a circle.
pub fn mean_boundary_distance(mask: &BinaryMask, cx: f64, cy: f64, r: f64) -> f64 {
    let (w, h) = mask.dims();
    let mut total = 0.0;
    let mut n = 0usize;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let boundary = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1);
            if boundary {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                total += (d - r).abs();
                n += 1;
            }
        }
    }
    if n == 0 {
        f64::INFINITY
    } else {
        total / n as f64
    }
}

/// Complete metadata for a synthetic video.
pub fn meta(id: &str) -> VideoMeta {
    VideoMeta {
        id: id.into(),
        machine: Some(Machine::Esaote),
        plexus: Some(Plexus::Scbp),
        side: Some(Side::Right),
        gain: Some(Gain::Medium),
        depth_setting: Some("4cm".into()),
        patient: Some(PatientMeta {
            age: 41.0,
            sex: Sex::Female,
            height: 165.0,
            bmi: 22.0,
        }),
        eval_resolution: None,
    }
}

/// Label sink that keeps everything in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub masks: BTreeMap<usize, (BinaryMask, GacParams, Provenance)>,
    pub statuses: BTreeMap<usize, FrameStatus>,
    pub seeds: Vec<usize>,
}

impl LabelSink for MemorySink {
    fn write_ground_truth(
        &mut self,
        idx: usize,
        mask: &BinaryMask,
        params: &GacParams,
        provenance: Provenance,
    ) -> nervetrace::Result<()> {
        self.statuses.insert(idx, FrameStatus::Positive);
        self.masks
            .insert(idx, (mask.clone(), params.clone(), provenance));
        Ok(())
    }

    fn set_status(
        &mut self,
        idx: usize,
        status: FrameStatus,
        _provenance: Provenance,
    ) -> nervetrace::Result<()> {
        self.masks.remove(&idx);
        self.statuses.insert(idx, status);
        Ok(())
    }

    fn record_seed(&mut self, idx: usize) -> nervetrace::Result<()> {
        self.seeds.push(idx);
        Ok(())
    }
}
