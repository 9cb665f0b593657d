//! Patch lattices, extraction and overlap-averaging aggregation.

use super::ImagePlane;
use crate::error::{invalid, mismatch, Error, Result};
use crate::Real;

/// Stride lattice over `0..=len - patch`, with the last position snapped to
/// `len - patch` so coverage is total.
pub fn lattice_positions(len: usize, patch: usize, stride: usize) -> Vec<usize> {
    assert!(patch <= len && stride > 0);
    let last = len - patch;
    let mut pos: Vec<usize> = (0..=last).step_by(stride).collect();
    if *pos.last().unwrap() != last {
        pos.push(last);
    }
    pos
}

/// Geometry of a patch decomposition: patch size, stride and top-left
/// positions in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchLayout {
    pub patch_size: usize,
    pub stride: usize,
    pub width: usize,
    pub height: usize,
    pub positions: Vec<(usize, usize)>,
}

impl PatchLayout {
    pub fn new(width: usize, height: usize, patch_size: usize, stride: usize) -> Result<Self> {
        if patch_size == 0 || stride == 0 {
            return Err(invalid("patch_size/stride", "must be positive"));
        }
        if stride > patch_size {
            return Err(invalid("stride", format!("{stride} exceeds patch size {patch_size}; coverage would have gaps")));
        }
        if patch_size > width || patch_size > height {
            return Err(Error::PatchTooLarge { patch: patch_size, width, height });
        }
        let xs = lattice_positions(width, patch_size, stride);
        let ys = lattice_positions(height, patch_size, stride);
        let positions = ys
            .iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
            .collect();
        Ok(Self { patch_size, stride, width, height, positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn patch_len(&self) -> usize {
        self.patch_size * self.patch_size
    }

    /// Copies the patch at position `i` of `img` into `out`.
    pub fn read<T: Real>(&self, img: &ImagePlane<T>, i: usize, out: &mut [T]) {
        let (x0, y0) = self.positions[i];
        let p = self.patch_size;
        let w = img.width();
        let src = img.as_slice();
        for dy in 0..p {
            let row = (y0 + dy) * w + x0;
            out[dy * p..(dy + 1) * p].copy_from_slice(&src[row..row + p]);
        }
    }
}

/// Patches of one image, flattened row-major, stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchGrid<T> {
    pub layout: PatchLayout,
    data: Vec<T>,
}

impl<T: Real> PatchGrid<T> {
    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.is_empty()
    }

    pub fn patch(&self, i: usize) -> &[T] {
        let n = self.layout.patch_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.layout.patch_len())
    }
}

pub fn extract_patches<T: Real>(img: &ImagePlane<T>, patch_size: usize, stride: usize) -> Result<PatchGrid<T>> {
    let layout = PatchLayout::new(img.width(), img.height(), patch_size, stride)?;
    Ok(extract_with_layout(img, layout))
}

pub fn extract_with_layout<T: Real>(img: &ImagePlane<T>, layout: PatchLayout) -> PatchGrid<T> {
    let n = layout.patch_len();
    let mut data = vec![T::zero(); layout.len() * n];
    for (i, chunk) in data.chunks_exact_mut(n).enumerate() {
        layout.read(img, i, chunk);
    }
    PatchGrid { layout, data }
}

/// Per-pixel average of every patch value covering it.
///
/// `values` holds one `patch_size^2` vector per layout position, concatenated.
/// Uses an incremental mean, so identical contributions reproduce their value
/// exactly.
pub fn aggregate_patches<T: Real>(layout: &PatchLayout, values: &[T]) -> Result<ImagePlane<T>> {
    let n = layout.patch_len();
    if values.len() != layout.len() * n {
        return Err(mismatch(layout.len() * n, values.len()));
    }
    let (w, h, p) = (layout.width, layout.height, layout.patch_size);
    let mut mean = vec![T::zero(); w * h];
    let mut count = vec![0u32; w * h];
    for (&(x0, y0), v) in layout.positions.iter().zip(values.chunks_exact(n)) {
        for dy in 0..p {
            let row = (y0 + dy) * w + x0;
            for dx in 0..p {
                let idx = row + dx;
                count[idx] += 1;
                let c = count[idx];
                mean[idx] = if c == 1 {
                    v[dy * p + dx]
                } else {
                    mean[idx] + (v[dy * p + dx] - mean[idx]) / T::of(c as f64)
                };
            }
        }
    }
    if let Some(i) = count.iter().position(|&c| c == 0) {
        return Err(Error::UncoveredPixel { x: i % w, y: i / w });
    }
    Ok(ImagePlane::from_raw(w, h, mean))
}
