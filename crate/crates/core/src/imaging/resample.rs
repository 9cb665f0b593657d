//! Catmull-Rom bicubic resampling and benchmark degradation.

use super::ImagePlane;
use crate::error::{invalid, Error, Result};
use crate::Real;

const CUBIC_A: f64 = -0.5;

/// Cubic convolution kernel with `a = -0.5` (Catmull-Rom).
#[inline]
pub fn cubic_kernel(x: f64) -> f64 {
    let a = CUBIC_A;
    let t = x.abs();
    if t <= 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    } else {
        0.0
    }
}

/// Four clamped source taps and weights for one output coordinate.
#[derive(Clone, Copy, Debug)]
struct Taps<T> {
    idx: [usize; 4],
    w: [T; 4],
}

fn axis_taps<T: Real>(src_len: usize, dst_len: usize) -> Vec<Taps<T>> {
    let ratio = dst_len as f64 / src_len as f64;
    (0..dst_len)
        .map(|o| {
            // Pixel-centre alignment.
            let s = (o as f64 + 0.5) / ratio - 0.5;
            let base = s.floor();
            let frac = s - base;
            let mut idx = [0usize; 4];
            let mut w = [T::zero(); 4];
            for (k, off) in (-1i64..=2).enumerate() {
                let i = (base as i64 + off).clamp(0, src_len as i64 - 1);
                idx[k] = i as usize;
                w[k] = T::of(cubic_kernel(frac - off as f64));
            }
            Taps { idx, w }
        })
        .collect()
}

/// Resamples to exactly `width` x `height`, optionally clamping to `[0, 1]`.
pub(crate) fn resample<T: Real>(
    img: &ImagePlane<T>,
    width: usize,
    height: usize,
    clamp: bool,
) -> Result<ImagePlane<T>> {
    if width == 0 || height == 0 {
        return Err(Error::DegenerateSize { width, height });
    }
    let (sw, sh) = img.dims();
    let xt = axis_taps::<T>(sw, width);
    let yt = axis_taps::<T>(sh, height);
    let src = img.as_slice();

    // Horizontal pass: sh rows x width.
    let mut tmp = vec![T::zero(); sh * width];
    for y in 0..sh {
        let row = &src[y * sw..(y + 1) * sw];
        let out = &mut tmp[y * width..(y + 1) * width];
        for (o, t) in out.iter_mut().zip(&xt) {
            *o = t.w[0] * row[t.idx[0]]
                + t.w[1] * row[t.idx[1]]
                + t.w[2] * row[t.idx[2]]
                + t.w[3] * row[t.idx[3]];
        }
    }
    let mut out = vec![T::zero(); width * height];
    for (y, t) in yt.iter().enumerate() {
        let rows = t.idx.map(|i| &tmp[i * width..(i + 1) * width]);
        let dst = &mut out[y * width..(y + 1) * width];
        for (x, d) in dst.iter_mut().enumerate() {
            let v = t.w[0] * rows[0][x]
                + t.w[1] * rows[1][x]
                + t.w[2] * rows[2][x]
                + t.w[3] * rows[3][x];
            *d = if clamp { v.clamp(T::zero(), T::one()) } else { v };
        }
    }
    Ok(ImagePlane::from_raw(width, height, out))
}

/// Bicubic resize to explicit dimensions; samples clamped to `[0, 1]`.
pub fn resize_to<T: Real>(img: &ImagePlane<T>, width: usize, height: usize) -> Result<ImagePlane<T>> {
    resample(img, width, height, true)
}

/// Output size for a scale factor: `round(dim * scale)`.
pub fn scaled_dims(width: usize, height: usize, scale: f64) -> (usize, usize) {
    (
        (width as f64 * scale).round() as usize,
        (height as f64 * scale).round() as usize,
    )
}

/// Bicubic resize by `scale`; output is `round(dims * scale)`.
pub fn bicubic_resize<T: Real>(img: &ImagePlane<T>, scale: f64) -> Result<ImagePlane<T>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("scale", format!("{scale} is not a positive finite number")));
    }
    let (w, h) = scaled_dims(img.width(), img.height(), scale);
    resize_to(img, w, h)
}

/// Synthesises a benchmark LR image: crops to a multiple of `scale` and
/// downsamples with the plain bicubic kernel.
pub fn degrade<T: Real>(hr: &ImagePlane<T>, scale: usize) -> Result<ImagePlane<T>> {
    if scale < 2 {
        return Err(invalid("scale", format!("degradation factor {scale} < 2")));
    }
    let hr = hr.modcrop(scale)?;
    resize_to(&hr, hr.width() / scale, hr.height() / scale)
}
