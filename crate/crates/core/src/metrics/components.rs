use crate::mask::BinaryMask;

/// Labels 8-connected foreground components. Returns a label per pixel
/// (0 = background, components numbered from 1 in raster order of their
/// first pixel) and each component's size, indexed by `label - 1`.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let data = mask.data();
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !data[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        let mut size = 0;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if data[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Drops 8-connected components smaller than `min_area` pixels; components
/// of exactly `min_area` survive.
pub fn filter_small_components(mask: &BinaryMask, min_area: usize) -> BinaryMask {
    if min_area <= 1 || mask.is_empty() {
        return mask.clone();
    }
    let (labels, sizes) = label_components(mask);
    let data = labels
        .iter()
        .map(|&l| l != 0 && sizes[l as usize - 1] >= min_area)
        .collect();
    BinaryMask::from_vec(mask.width(), mask.height(), data).expect("same dimensions")
}
