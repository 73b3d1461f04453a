use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest box side accepted anywhere in the pipeline.
pub const MIN_BOX_SIDE: u32 = 8;

/// Axis-aligned box in frame pixels; `(x, y)` is the top-left corner and may
/// lie outside the frame as long as the box still overlaps it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// Overlap with a `width`×`height` frame, as `(x0, y0, x1, y1)` half-open.
    pub fn clip(&self, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
        let x0 = self.x.max(0) as i64;
        let y0 = self.y.max(0) as i64;
        let x1 = (self.x as i64 + self.w as i64).min(width as i64);
        let y1 = (self.y as i64 + self.h as i64).min(height as i64);
        (x1 > x0 && y1 > y0).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
    }

    pub fn intersects_frame(&self, width: u32, height: u32) -> bool {
        self.clip(width, height).is_some()
    }

    /// Checks the size and frame-overlap invariants.
    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        if self.w < MIN_BOX_SIDE || self.h < MIN_BOX_SIDE {
            return Err(Error::Geometry(format!(
                "box {}x{} is smaller than the {MIN_BOX_SIDE}px minimum side",
                self.w, self.h
            )));
        }
        if !self.intersects_frame(width, height) {
            return Err(Error::Geometry(format!(
                "box {self:?} does not intersect the {width}x{height} frame"
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x as i64
            && y >= self.y as i64
            && x < self.x as i64 + self.w as i64
            && y < self.y as i64 + self.h as i64
    }
}

impl std::str::FromStr for BoundingBox {
    type Err = Error;

    /// Parses `x,y,w,h`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Geometry(format!("expected x,y,w,h, got {s:?}")));
        }
        let bad = |p: &str| Error::Geometry(format!("bad box component {p:?} in {s:?}"));
        Ok(Self {
            x: parts[0].parse().map_err(|_| bad(parts[0]))?,
            y: parts[1].parse().map_err(|_| bad(parts[1]))?,
            w: parts[2].parse().map_err(|_| bad(parts[2]))?,
            h: parts[3].parse().map_err(|_| bad(parts[3]))?,
        })
    }
}
