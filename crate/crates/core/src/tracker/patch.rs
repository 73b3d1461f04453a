use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::GrayFrame;

/// Feature patch on the template grid. Grayscale features use one channel;
/// additional channels (e.g. gradient features) share the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Vec<f64>>,
}

impl Patch {
    pub fn single(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Geometry(format!(
                "{} values do not fill a {width}x{height} patch",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels: vec![data],
        })
    }

    /// Total number of feature values across channels.
    pub fn len(&self) -> usize {
        self.width * self.height * self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn squared_norm(&self) -> f64 {
        self.channels.iter().flatten().map(|v| v * v).sum()
    }

    pub(crate) fn same_shape(&self, other: &Patch) -> Result<()> {
        if (self.width, self.height, self.channels.len())
            != (other.width, other.height, other.channels.len())
        {
            return Err(Error::Geometry(format!(
                "patch shapes differ: {}x{}x{} vs {}x{}x{}",
                self.width,
                self.height,
                self.channels.len(),
                other.width,
                other.height,
                other.channels.len()
            )));
        }
        Ok(())
    }
}

/// Real-valued map over cyclic shifts; index `(0, 0)` is zero displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ResponseMap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// `(x, y, value)` of the maximum; first occurrence wins on ties.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let (i, v) =
            self.values
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                });
        (i % self.width, i / self.width, v)
    }

    /// Maximum as a signed displacement: shifts past half the grid wrap to
    /// negative offsets.
    pub fn peak_displacement(&self) -> (i64, i64, f64) {
        let (x, y, v) = self.argmax();
        (wrap(x, self.width), wrap(y, self.height), v)
    }
}

pub(crate) fn wrap(i: usize, n: usize) -> i64 {
    if i > n / 2 {
        i as i64 - n as i64
    } else {
        i as i64
    }
}

/// Samples a `out_w`×`out_h` grid covering the window of size
/// `window_w`×`window_h` centered at `(cx, cy)` (pixel-edge coordinates:
/// pixel `k` spans `[k, k+1)`). Bilinear interpolation; pixels beyond the
/// frame replicate the nearest edge.
pub fn extract_patch(
    frame: &GrayFrame,
    (cx, cy): (f64, f64),
    (window_w, window_h): (f64, f64),
    (out_w, out_h): (usize, usize),
) -> Vec<f64> {
    let sx = window_w / out_w as f64;
    let sy = window_h / out_h as f64;
    let left = cx - window_w / 2.0;
    let top = cy - window_h / 2.0;
    let xs: Vec<f64> = (0..out_w)
        .map(|i| left + (i as f64 + 0.5) * sx - 0.5)
        .collect();
    let mut out = Vec::with_capacity(out_w * out_h);
    for j in 0..out_h {
        let y = top + (j as f64 + 0.5) * sy - 0.5;
        out.extend(xs.iter().map(|&x| frame.sample_bilinear(x, y)));
    }
    out
}

/// Separable raised-cosine taper, zero at the borders.
pub(crate) fn cosine_window(width: usize, height: usize) -> Vec<f64> {
    let hann = |n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        (0..n)
            .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()))
            .collect()
    };
    let wx = hann(width);
    let wy = hann(height);
    wy.iter()
        .flat_map(|a| wx.iter().map(move |b| a * b))
        .collect()
}
