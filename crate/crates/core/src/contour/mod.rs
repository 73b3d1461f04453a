//! Morphological geodesic active contours.
//!
//! Curve evolution is carried out directly on a binary level set `u` with
//! three morphological steps per iteration:
//!
//! 1. **balloon**: where the edge map is above `θ/|ν|`, `u` is eroded
//!    (`ν < 0`) or dilated (`ν > 0`) by a 3×3 square;
//! 2. **attachment**: on the boundary band, `u` is set where `∇u·∇g > 0`
//!    and cleared where `∇u·∇g < 0`, pulling the contour into the valleys
//!    of `g`;
//! 3. **smoothing**: `μ` applications of the curvature operators, alternating
//!    `SI∘IS` and `IS∘SI` over the four 3-pixel line segments.
//!
//! The edge map is an inverse Gaussian gradient, close to 1 in flat regions
//! and small on strong edges.

mod edge;
mod gac;
mod proposals;

pub use edge::{inverse_gaussian_gradient, EdgeMap};
pub use gac::{inf_sup, morph_gac, sup_inf, MorphGac};
pub use proposals::{default_proposal_grid, propose_contours};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contour parameters, persisted per ground-truth frame in `labels.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GacParams {
    pub iterations: usize,
    /// Curvature-smoothing passes per iteration (`μ`, 0–4).
    pub smoothing: usize,
    /// Balloon threshold `θ` on the edge map.
    pub threshold: f64,
    /// Balloon force `ν`; negative shrinks.
    pub balloon: f64,
    pub edge_alpha: f64,
    pub edge_sigma: f64,
}

impl Default for GacParams {
    fn default() -> Self {
        Self {
            iterations: 30,
            smoothing: 1,
            threshold: 0.35,
            balloon: -1.0,
            edge_alpha: 100.0,
            edge_sigma: 2.0,
        }
    }
}

impl GacParams {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing > 4 {
            return Err(Error::Param(format!(
                "smoothing {} exceeds 4",
                self.smoothing
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Param(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if !self.balloon.is_finite() {
            return Err(Error::Param("balloon force must be finite".into()));
        }
        if !(self.edge_alpha > 0.0 && self.edge_sigma > 0.0) {
            return Err(Error::Param("edge alpha and sigma must be > 0".into()));
        }
        Ok(())
    }
}
