//! Kernelized correlation filter.
//!
//! The filter is a ridge regression over every cyclic shift of a template
//! patch. With a Gaussian kernel the shift structure makes the kernel matrix
//! circulant, so training and detection are element-wise in the Fourier
//! domain:
//!
//! * training: `α̂ = ŷ / (k̂ˣˣ + λ)` where `y` is a Gaussian regression target
//!   peaked at zero shift and `kˣˣ` the kernel auto-correlation of the
//!   template;
//! * detection: `r = F⁻¹(k̂ˣᶻ ⊙ α̂)`; the argmax of `r` is the translation of
//!   the target between the template and the new patch `z`.
//!
//! Features are mean-subtracted grayscale intensities under a cosine taper.
//! Scale is fixed for the lifetime of a model.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::Fft2;
use super::patch::{cosine_window, extract_patch, wrap, Patch, ResponseMap};
use super::{TrackStep, Tracker};
use crate::error::{Error, Result};
use crate::frame::GrayFrame;
use crate::geometry::BoundingBox;

/// Peaks below this flag a tracked frame for a second look.
pub const LOW_CONFIDENCE_PEAK: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KcfParams {
    /// Context around the box, as a fraction of its size.
    pub padding: f64,
    pub lambda: f64,
    pub kernel_sigma: f64,
    pub learning_rate: f64,
    pub output_sigma_factor: f64,
    /// Template length along the longest side of the padded window.
    pub template_size: usize,
}

impl Default for KcfParams {
    fn default() -> Self {
        Self {
            padding: 1.5,
            lambda: 1e-4,
            kernel_sigma: 0.5,
            learning_rate: 0.02,
            output_sigma_factor: 0.1,
            template_size: 96,
        }
    }
}

impl KcfParams {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::Param(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Param(format!(
                "learning rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.padding.is_nan() || self.padding < 1.0 {
            return Err(Error::Param(format!(
                "padding must be >= 1, got {}",
                self.padding
            )));
        }
        if !(self.kernel_sigma > 0.0 && self.output_sigma_factor > 0.0) {
            return Err(Error::Param("kernel and output sigmas must be > 0".into()));
        }
        if self.template_size < 8 {
            return Err(Error::Param(format!(
                "template size {} is below 8",
                self.template_size
            )));
        }
        Ok(())
    }
}

/// Kernel correlation `exp(−max(0, ‖a‖² + ‖b‖² − 2·(a ⋆ b)) / (σ²·N))` over
/// all cyclic shifts, with the cross-correlation `(a ⋆ b)[d] = Σₚ a[p]·b[p+d]`
/// computed through the FFT. `N` counts every feature value.
pub fn gaussian_correlation(a: &Patch, b: &Patch, sigma: f64) -> Result<ResponseMap> {
    a.same_shape(b)?;
    let fft = Fft2::new(a.width, a.height);
    let af = spectra(&fft, a);
    let bf = spectra(&fft, b);
    let values = kernel_from_spectra(&fft, &af, &bf, a.squared_norm(), b.squared_norm(), sigma);
    Ok(ResponseMap {
        width: a.width,
        height: a.height,
        values,
    })
}

fn spectra(fft: &Fft2, p: &Patch) -> Vec<Vec<Complex64>> {
    p.channels.iter().map(|c| fft.forward_real(c)).collect()
}

fn kernel_from_spectra(
    fft: &Fft2,
    af: &[Vec<Complex64>],
    bf: &[Vec<Complex64>],
    a_norm: f64,
    b_norm: f64,
    sigma: f64,
) -> Vec<f64> {
    let (w, h) = fft.dims();
    let mut cross = vec![Complex64::default(); w * h];
    for (ac, bc) in af.iter().zip(bf) {
        for ((acc, x), y) in cross.iter_mut().zip(ac).zip(bc) {
            *acc += x.conj() * y;
        }
    }
    fft.inverse(&mut cross);
    let n = (w * h * af.len()) as f64;
    let denom = sigma * sigma * n;
    cross
        .iter()
        .map(|c| (-(a_norm + b_norm - 2.0 * c.re).max(0.0) / denom).exp())
        .collect()
}

/// Trained filter state for one tracked box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KcfModel {
    params: KcfParams,
    frame_dims: (u32, u32),
    bbox: BoundingBox,
    /// Box center in pixel-edge coordinates.
    center: (f64, f64),
    /// Padded window size in frame pixels.
    window: (f64, f64),
    /// Template grid size.
    grid: (usize, usize),
    /// Template feature spectra, one per channel.
    template: Vec<Vec<Complex64>>,
    template_norm: f64,
    /// Dual coefficients `α̂`.
    alpha: Vec<Complex64>,
    #[serde(skip)]
    cache: OnceLock<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    fft: Fft2,
    window: Vec<f64>,
    target: Vec<Complex64>,
}

impl KcfModel {
    /// Trains a filter on `box` in `frame` (intensities in `[0, 1]`).
    pub fn init(frame: &GrayFrame, bbox: BoundingBox, params: KcfParams) -> Result<Self> {
        params.validate()?;
        bbox.validate(frame.width(), frame.height())?;
        let window = (
            bbox.w as f64 * (1.0 + params.padding),
            bbox.h as f64 * (1.0 + params.padding),
        );
        let scale = params.template_size as f64 / window.0.max(window.1);
        let grid = (
            ((window.0 * scale).round() as usize).max(1),
            ((window.1 * scale).round() as usize).max(1),
        );
        let mut model = Self {
            params,
            frame_dims: frame.dims(),
            bbox,
            center: bbox.center(),
            window,
            grid,
            template: Vec::new(),
            template_norm: 0.0,
            alpha: Vec::new(),
            cache: OnceLock::new(),
        };
        let x = model.features(frame);
        let (xf, alpha) = model.train(&x);
        model.template = xf;
        model.template_norm = x.squared_norm();
        model.alpha = alpha;
        Ok(model)
    }

    pub fn params(&self) -> &KcfParams {
        &self.params
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    /// Template grid `(width, height)`.
    pub fn template_dims(&self) -> (usize, usize) {
        self.grid
    }

    fn cache(&self) -> &Cache {
        self.cache.get_or_init(|| {
            let (w, h) = self.grid;
            let fft = Fft2::new(w, h);
            let sx = w as f64 / self.window.0;
            let sy = h as f64 / self.window.1;
            let sigma = self.params.output_sigma_factor
                * (self.bbox.w as f64 * self.bbox.h as f64).sqrt()
                * (sx * sy).sqrt();
            let mut target = Vec::with_capacity(w * h);
            for j in 0..h {
                let dy = wrap(j, h) as f64;
                for i in 0..w {
                    let dx = wrap(i, w) as f64;
                    target.push((-0.5 * (dx * dx + dy * dy) / (sigma * sigma)).exp());
                }
            }
            let target = fft.forward_real(&target);
            Cache {
                fft,
                window: cosine_window(w, h),
                target,
            }
        })
    }

    fn features_at(&self, frame: &GrayFrame, center: (f64, f64)) -> Patch {
        let (w, h) = self.grid;
        let mut raw = extract_patch(frame, center, self.window, self.grid);
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        for (v, c) in raw.iter_mut().zip(&self.cache().window) {
            *v = (*v - mean) * c;
        }
        Patch {
            width: w,
            height: h,
            channels: vec![raw],
        }
    }

    fn features(&self, frame: &GrayFrame) -> Patch {
        self.features_at(frame, self.center)
    }

    fn train(&self, x: &Patch) -> (Vec<Vec<Complex64>>, Vec<Complex64>) {
        let cache = self.cache();
        let xf = spectra(&cache.fft, x);
        let norm = x.squared_norm();
        let k = kernel_from_spectra(&cache.fft, &xf, &xf, norm, norm, self.params.kernel_sigma);
        let kf = cache.fft.forward_real(&k);
        let alpha = cache
            .target
            .iter()
            .zip(&kf)
            .map(|(y, k)| y / (k + self.params.lambda))
            .collect();
        (xf, alpha)
    }

    /// Gaussian kernel auto-correlation `kˣˣ` of the current template.
    pub fn template_autocorrelation(&self) -> ResponseMap {
        let cache = self.cache();
        let values = kernel_from_spectra(
            &cache.fft,
            &self.template,
            &self.template,
            self.template_norm,
            self.template_norm,
            self.params.kernel_sigma,
        );
        ResponseMap {
            width: self.grid.0,
            height: self.grid.1,
            values,
        }
    }

    /// Filter response over the patch at the current location, without
    /// updating the model.
    pub fn response(&self, frame: &GrayFrame) -> Result<ResponseMap> {
        if frame.dims() != self.frame_dims {
            return Err(Error::Geometry(format!(
                "frame is {:?}, tracker was initialized on {:?}",
                frame.dims(),
                self.frame_dims
            )));
        }
        let cache = self.cache();
        let z = self.features(frame);
        let zf = spectra(&cache.fft, &z);
        let k = kernel_from_spectra(
            &cache.fft,
            &self.template,
            &zf,
            self.template_norm,
            z.squared_norm(),
            self.params.kernel_sigma,
        );
        let mut r = cache.fft.forward_real(&k);
        for (v, a) in r.iter_mut().zip(&self.alpha) {
            *v *= a;
        }
        cache.fft.inverse(&mut r);
        Ok(ResponseMap {
            width: self.grid.0,
            height: self.grid.1,
            values: r.iter().map(|c| c.re).collect(),
        })
    }

    /// Locates the target in `frame`, moves the box, and blends a model
    /// retrained at the new location into the current one.
    pub fn step(&mut self, frame: &GrayFrame) -> Result<TrackStep> {
        let response = self.response(frame)?;
        let (dx, dy, peak) = response.peak_displacement();
        let (fw, fh) = (self.frame_dims.0 as f64, self.frame_dims.1 as f64);
        let cx = self.center.0 + dx as f64 * self.window.0 / self.grid.0 as f64;
        let cy = self.center.1 + dy as f64 * self.window.1 / self.grid.1 as f64;
        self.center = (cx.clamp(0.0, fw), cy.clamp(0.0, fh));
        self.bbox = BoundingBox::new(
            (self.center.0 - self.bbox.w as f64 / 2.0).round() as i32,
            (self.center.1 - self.bbox.h as f64 / 2.0).round() as i32,
            self.bbox.w,
            self.bbox.h,
        );

        let x = self.features(frame);
        let (xf, alpha) = self.train(&x);
        let eta = self.params.learning_rate;
        for (old, new) in self.template.iter_mut().zip(&xf) {
            for (o, n) in old.iter_mut().zip(new) {
                *o = *o * (1.0 - eta) + n * eta;
            }
        }
        for (o, n) in self.alpha.iter_mut().zip(&alpha) {
            *o = *o * (1.0 - eta) + n * eta;
        }
        // ‖x‖² of the blended template, via Parseval.
        let n = (self.grid.0 * self.grid.1) as f64;
        self.template_norm = self
            .template
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            / n;
        Ok(TrackStep {
            bbox: self.bbox,
            peak,
        })
    }
}

impl Tracker for KcfModel {
    fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    fn step(&mut self, frame: &GrayFrame) -> Result<TrackStep> {
        KcfModel::step(self, frame)
    }
}
