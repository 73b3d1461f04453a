//! Single-object tracking used to propagate annotator boxes between frames.
//!
//! The annotation workflow depends only on the [`Tracker`] contract; the
//! kernelized correlation filter in [`kcf`] is the shipped implementation.

mod fft;
pub mod kcf;
mod patch;

pub use kcf::{gaussian_correlation, KcfModel, KcfParams, LOW_CONFIDENCE_PEAK};
pub use patch::{extract_patch, Patch, ResponseMap};

use crate::error::Result;
use crate::frame::GrayFrame;
use crate::geometry::BoundingBox;

/// Outcome of tracking one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackStep {
    pub bbox: BoundingBox,
    /// Maximum filter response; low values mean low confidence.
    pub peak: f64,
}

/// Box tracker: initialized on a seed frame, then stepped frame by frame.
pub trait Tracker: Send {
    fn bbox(&self) -> BoundingBox;

    fn step(&mut self, frame: &GrayFrame) -> Result<TrackStep>;
}
