use super::edge::{axis_diff, gradient, EdgeMap};
use super::GacParams;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Offsets of the four 3-pixel line segments through a pixel.
const LINES: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

#[inline]
fn line_values(u: &BinaryMask, x: i64, y: i64, (dx, dy): (i64, i64)) -> [bool; 3] {
    let (w, h) = (u.width() as i64, u.height() as i64);
    let at = |x: i64, y: i64, fallback: bool| {
        if x < 0 || y < 0 || x >= w || y >= h {
            fallback
        } else {
            u.get(x as u32, y as u32)
        }
    };
    let c = u.get(x as u32, y as u32);
    // Out-of-frame neighbours are ignored by substituting the center.
    [at(x - dx, y - dy, c), c, at(x + dx, y + dy, c)]
}

/// Supremum over line orientations of the line erosions.
pub fn sup_inf(u: &BinaryMask) -> BinaryMask {
    BinaryMask::from_fn(u.width(), u.height(), |x, y| {
        LINES
            .iter()
            .any(|&l| line_values(u, x as i64, y as i64, l).iter().all(|&v| v))
    })
}

/// Infimum over line orientations of the line dilations.
pub fn inf_sup(u: &BinaryMask) -> BinaryMask {
    BinaryMask::from_fn(u.width(), u.height(), |x, y| {
        LINES
            .iter()
            .all(|&l| line_values(u, x as i64, y as i64, l).iter().any(|&v| v))
    })
}

/// 3×3 erosion (`shrink`) or dilation; pixels outside the frame count as
/// background.
fn square_morph(u: &BinaryMask, shrink: bool) -> BinaryMask {
    let (w, h) = (u.width() as i64, u.height() as i64);
    BinaryMask::from_fn(u.width(), u.height(), |x, y| {
        let mut all = true;
        let mut any = false;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                let v = nx >= 0 && ny >= 0 && nx < w && ny < h && u.get(nx as u32, ny as u32);
                all &= v;
                any |= v;
            }
        }
        if shrink {
            all
        } else {
            any
        }
    })
}

/// Step-by-step evolution of a binary level set.
#[derive(Debug, Clone)]
pub struct MorphGac<'a> {
    edge: &'a EdgeMap,
    params: GacParams,
    u: BinaryMask,
    balloon_region: Vec<bool>,
    grad_g: (Vec<f64>, Vec<f64>),
    attachment: bool,
    smoothing_phase: usize,
    iteration: usize,
}

impl<'a> MorphGac<'a> {
    pub fn new(edge: &'a EdgeMap, init: &BinaryMask, params: &GacParams) -> Result<Self> {
        params.validate()?;
        if edge.dims() != init.dims() {
            return Err(Error::Geometry(format!(
                "edge map is {:?}, initial mask is {:?}",
                edge.dims(),
                init.dims()
            )));
        }
        let balloon_region = if params.balloon != 0.0 {
            let level = params.threshold / params.balloon.abs();
            edge.values.iter().map(|&g| g > level).collect()
        } else {
            vec![false; edge.values.len()]
        };
        let grad_g = gradient(&edge.values, edge.width as usize, edge.height as usize);
        Ok(Self {
            edge,
            params: params.clone(),
            u: init.clone(),
            balloon_region,
            grad_g,
            attachment: true,
            smoothing_phase: 0,
            iteration: 0,
        })
    }

    /// Disables the image-attachment step (used to isolate the balloon and
    /// smoothing dynamics).
    pub fn without_attachment(mut self) -> Self {
        self.attachment = false;
        self
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.u
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn step(&mut self) {
        if self.params.balloon != 0.0 {
            let moved = square_morph(&self.u, self.params.balloon < 0.0);
            for ((dst, &src), &active) in self
                .u
                .data_mut()
                .iter_mut()
                .zip(moved.data())
                .zip(&self.balloon_region)
            {
                if active {
                    *dst = src;
                }
            }
        }
        if self.attachment {
            self.attach();
        }
        for _ in 0..self.params.smoothing {
            self.u = if self.smoothing_phase.is_multiple_of(2) {
                sup_inf(&inf_sup(&self.u))
            } else {
                inf_sup(&sup_inf(&self.u))
            };
            self.smoothing_phase += 1;
        }
        self.iteration += 1;
    }

    /// `∇u` vanishes off the boundary band, so only band pixels are visited.
    fn attach(&mut self) {
        let (w, h) = (self.edge.width as usize, self.edge.height as usize);
        let data = self.u.data();
        let uf: Vec<f64> = data.iter().map(|&v| v as u8 as f64).collect();
        let mut updates = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let c = data[i];
                let on_band = (x > 0 && data[i - 1] != c)
                    || (x + 1 < w && data[i + 1] != c)
                    || (y > 0 && data[i - w] != c)
                    || (y + 1 < h && data[i + w] != c);
                if !on_band {
                    continue;
                }
                let dux = axis_diff(&uf, i, x, w, 1);
                let duy = axis_diff(&uf, i, y, h, w);
                let dot = dux * self.grad_g.0[i] + duy * self.grad_g.1[i];
                if dot > 0.0 {
                    updates.push((i, true));
                } else if dot < 0.0 {
                    updates.push((i, false));
                }
            }
        }
        let data = self.u.data_mut();
        for (i, v) in updates {
            data[i] = v;
        }
    }

    pub fn run(mut self) -> BinaryMask {
        while self.iteration < self.params.iterations {
            self.step();
        }
        self.u
    }
}

/// Evolves `init` for `params.iterations` rounds over `edge`.
pub fn morph_gac(edge: &EdgeMap, init: &BinaryMask, params: &GacParams) -> Result<BinaryMask> {
    Ok(MorphGac::new(edge, init, params)?.run())
}
