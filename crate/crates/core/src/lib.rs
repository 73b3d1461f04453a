//! Semi-automated annotation of nerve structures in ultrasound video, and
//! evaluation of segmentation predictions against the resulting ground truth.
//!
//! The pieces, bottom-up:
//!
//! * [`dataset`]: canonical on-disk layout, ground-truth persistence, stats;
//! * [`tracker`]: kernelized correlation filter propagating seed boxes;
//! * [`contour`]: morphological geodesic active contours refining fused boxes;
//! * [`annotation`]: the seed → propagate → review → refine → commit workflow;
//! * [`augment`]: training-time flips, rotations and gain-aware gamma;
//! * [`metrics`]: detection and dice evaluation protocol;
//! * [`split`]: stratified k-fold video splits.

pub mod annotation;
pub mod augment;
pub mod contour;
pub mod dataset;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod mask;
pub mod metrics;
pub mod split;
pub mod summary;
pub mod tracker;

pub use error::{Error, Result};
pub use frame::GrayFrame;
pub use geometry::BoundingBox;
pub use mask::{BinaryMask, RlePayload};

/// Guide chapters, compiled so their snippets run as doc-tests.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/dataset.md")]
    pub mod dataset {}
    #[doc = include_str!("../../../book/src/tracking.md")]
    pub mod tracking {}
    #[doc = include_str!("../../../book/src/contours.md")]
    pub mod contours {}
    #[doc = include_str!("../../../book/src/annotation.md")]
    pub mod annotation {}
    #[doc = include_str!("../../../book/src/augmentation.md")]
    pub mod augmentation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/splits.md")]
    pub mod splits {}
    #[doc = include_str!("../../../book/src/http_api.md")]
    pub mod http_api {}
}
