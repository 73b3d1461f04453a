use crate::error::{Error, Result};
use crate::frame::GrayFrame;

/// Stopping function `g ∈ (0, 1]`, same size as its source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl EdgeMap {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma + 0.5) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i * i) as f64 / (sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur truncated at 4σ, edge-replicating borders.
fn gaussian_blur(frame: &GrayFrame, sigma: f64) -> Vec<f64> {
    let (w, h) = (frame.width() as i64, frame.height() as i64);
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let src = frame.data();
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        let row = &src[(y * w) as usize..((y + 1) * w) as usize];
        for x in 0..w {
            tmp[(y * w + x) as usize] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * row[(x + i as i64 - r).clamp(0, w - 1) as usize])
                .sum();
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            out[(y * w + x) as usize] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[((y + i as i64 - r).clamp(0, h - 1) * w + x) as usize])
                .sum();
        }
    }
    out
}

/// Central differences inside, one-sided differences on the border;
/// returns `(∂/∂x, ∂/∂y)`.
pub(crate) fn gradient(values: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = axis_diff(values, i, x, w, 1);
            gy[i] = axis_diff(values, i, y, h, w);
        }
    }
    (gx, gy)
}

#[inline]
pub(crate) fn axis_diff(values: &[f64], i: usize, pos: usize, len: usize, stride: usize) -> f64 {
    if len < 2 {
        0.0
    } else if pos == 0 {
        values[i + stride] - values[i]
    } else if pos == len - 1 {
        values[i] - values[i - stride]
    } else {
        (values[i + stride] - values[i - stride]) / 2.0
    }
}

/// `g = 1 / sqrt(1 + α·|∇(G_σ ∗ I)|)`.
pub fn inverse_gaussian_gradient(image: &GrayFrame, alpha: f64, sigma: f64) -> Result<EdgeMap> {
    if !(alpha > 0.0 && sigma > 0.0) {
        return Err(Error::Param(format!(
            "alpha and sigma must be > 0, got {alpha} and {sigma}"
        )));
    }
    let (w, h) = (image.width() as usize, image.height() as usize);
    let smooth = gaussian_blur(image, sigma);
    let (gx, gy) = gradient(&smooth, w, h);
    let values = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| 1.0 / (1.0 + alpha * (a * a + b * b).sqrt()).sqrt())
        .collect();
    Ok(EdgeMap {
        width: image.width(),
        height: image.height(),
        values,
    })
}
