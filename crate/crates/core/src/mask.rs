//! Binary masks: the common currency between tracker, contour engine,
//! predictions and metrics.

use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

/// Two-valued mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![true; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Mask(format!(
                "{} values do not fill a {width}x{height} mask",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }

    /// `true` when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub(crate) fn ensure_same_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Geometry(format!(
                "mask dimensions differ: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    /// `(|a ∩ b|, |a|, |b|)`.
    pub fn overlap_counts(&self, other: &BinaryMask) -> Result<(usize, usize, usize)> {
        self.ensure_same_dims(other)?;
        let mut inter = 0;
        let mut a = 0;
        let mut b = 0;
        for (&p, &q) in self.data.iter().zip(&other.data) {
            inter += (p && q) as usize;
            a += p as usize;
            b += q as usize;
        }
        Ok((inter, a, b))
    }

    /// Nearest-neighbour resize with half-pixel-center alignment.
    pub fn resize_nearest(&self, width: u32, height: u32) -> BinaryMask {
        if (width, height) == self.dims() {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let xs: Vec<u32> = (0..width)
            .map(|x| (((x as f64 + 0.5) * sx).floor() as u32).min(self.width - 1))
            .collect();
        BinaryMask::from_fn(width, height, |x, y| {
            let src_y = (((y as f64 + 0.5) * sy).floor() as u32).min(self.height - 1);
            self.get(xs[x as usize], src_y)
        })
    }

    /// Encodes as 0 = background, 255 = structure.
    pub fn to_luma8(&self) -> GrayImage {
        let raw = self.data.iter().map(|&v| if v { 255 } else { 0 }).collect();
        ImageBuffer::<Luma<u8>, _>::from_raw(self.width, self.height, raw)
            .expect("buffer length matches dimensions")
    }

    /// Decodes a grayscale image, treating any value ≥ 128 as structure.
    pub fn from_luma8(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.as_raw().iter().map(|&v| v >= 128).collect(),
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_luma8()
            .save_with_format(path, image::ImageFormat::Png)
            .at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).at(path)?;
        Ok(Self::from_luma8(&img.to_luma8()))
    }

    pub fn to_rle(&self) -> RlePayload {
        RlePayload::encode(self)
    }
}

/// Run-length mask encoding used on the wire: alternating counts of 0s and
/// 1s in row-major order, always starting with a (possibly zero) run of 0s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RlePayload {
    pub width: u32,
    pub height: u32,
    pub runs: Vec<u64>,
}

impl RlePayload {
    pub fn encode(mask: &BinaryMask) -> Self {
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0u64;
        for &v in mask.data() {
            if v != current {
                runs.push(count);
                current = v;
                count = 0;
            }
            count += 1;
        }
        runs.push(count);
        Self {
            width: mask.width(),
            height: mask.height(),
            runs,
        }
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        let total = self.width as u64 * self.height as u64;
        let sum: u64 = self.runs.iter().sum();
        if sum != total {
            return Err(Error::Mask(format!(
                "runs cover {sum} pixels, expected {total}"
            )));
        }
        let mut data = Vec::with_capacity(total as usize);
        let mut value = false;
        for &run in &self.runs {
            data.extend(std::iter::repeat_n(value, run as usize));
            value = !value;
        }
        BinaryMask::from_vec(self.width, self.height, data)
    }
}
