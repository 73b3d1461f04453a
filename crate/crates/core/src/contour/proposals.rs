use std::collections::HashMap;

use rayon::prelude::*;

use super::{inverse_gaussian_gradient, morph_gac, EdgeMap, GacParams};
use crate::error::{Error, Result};
use crate::frame::GrayFrame;
use crate::mask::BinaryMask;

/// Starting grid for the contour picker: iterations × threshold × smoothing
/// with a shrinking balloon.
pub fn default_proposal_grid() -> Vec<GacParams> {
    let mut grid = Vec::with_capacity(18);
    for iterations in [15, 30, 60] {
        for threshold in [0.2, 0.35, 0.5] {
            for smoothing in [1, 2] {
                grid.push(GacParams {
                    iterations,
                    smoothing,
                    threshold,
                    balloon: -1.0,
                    edge_alpha: 100.0,
                    edge_sigma: 2.0,
                });
            }
        }
    }
    grid
}

/// Runs every grid entry from the same initial mask. Output order follows
/// the grid; edge maps are shared between entries with equal `(α, σ)`.
pub fn propose_contours(
    frame: &GrayFrame,
    init: &BinaryMask,
    grid: &[GacParams],
) -> Result<Vec<(GacParams, BinaryMask)>> {
    if grid.is_empty() {
        return Err(Error::Param("proposal grid is empty".into()));
    }
    let mut keys: Vec<(u64, u64)> = grid
        .iter()
        .map(|p| (p.edge_alpha.to_bits(), p.edge_sigma.to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let edges: HashMap<(u64, u64), EdgeMap> = keys
        .into_par_iter()
        .map(|k| {
            let g = inverse_gaussian_gradient(frame, f64::from_bits(k.0), f64::from_bits(k.1))?;
            Ok((k, g))
        })
        .collect::<Result<_>>()?;
    grid.par_iter()
        .map(|p| {
            let g = &edges[&(p.edge_alpha.to_bits(), p.edge_sigma.to_bits())];
            Ok((p.clone(), morph_gac(g, init, p)?))
        })
        .collect()
}
