//! Separable filters: Gaussian low-pass split and derivative feature planes.

use super::ImagePlane;
use crate::error::{invalid, Result};
use crate::Real;

/// Normalised 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Correlates every row with `taps` (centred), replicate borders.
pub(crate) fn correlate_rows<T: Real>(img: &ImagePlane<T>, taps: &[T]) -> ImagePlane<T> {
    let r = (taps.len() / 2) as isize;
    let (w, h) = img.dims();
    ImagePlane::from_fn(w, h, |x, y| {
        taps.iter().enumerate().fold(T::zero(), |acc, (k, &t)| {
            acc + t * img.get_clamped(x as isize + k as isize - r, y as isize)
        })
    })
}

pub(crate) fn correlate_cols<T: Real>(img: &ImagePlane<T>, taps: &[T]) -> ImagePlane<T> {
    let r = (taps.len() / 2) as isize;
    let (w, h) = img.dims();
    ImagePlane::from_fn(w, h, |x, y| {
        taps.iter().enumerate().fold(T::zero(), |acc, (k, &t)| {
            acc + t * img.get_clamped(x as isize, y as isize + k as isize - r)
        })
    })
}

pub fn gaussian_blur<T: Real>(img: &ImagePlane<T>, sigma: f64) -> Result<ImagePlane<T>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("{sigma} must be positive")));
    }
    let taps: Vec<T> = gaussian_taps(sigma).into_iter().map(T::of).collect();
    Ok(correlate_cols(&correlate_rows(img, &taps), &taps))
}

/// Blur width used for the low band at a given zoom step.
pub fn default_blur_sigma(zoom_step: f64) -> f64 {
    1.2 * zoom_step
}

/// Splits `img` into a Gaussian low band and its complement.
///
/// `low + high` reproduces `img` up to one rounding per sample.
pub fn high_pass_decompose<T: Real>(
    img: &ImagePlane<T>,
    sigma: f64,
) -> Result<(ImagePlane<T>, ImagePlane<T>)> {
    let low = gaussian_blur(img, sigma)?;
    let high = img - &low;
    Ok((low, high))
}

/// First and second derivative filters along x and y.
pub const DERIVATIVE_FILTERS: [&[f64]; 2] = [&[-1.0, 0.0, 1.0], &[1.0, 0.0, -2.0, 0.0, 1.0]];

/// The four derivative planes `[dx, dy, dxx, dyy]`, replicate-padded.
pub fn derivative_features<T: Real>(img: &ImagePlane<T>) -> [ImagePlane<T>; 4] {
    let first: Vec<T> = DERIVATIVE_FILTERS[0].iter().map(|&v| T::of(v)).collect();
    let second: Vec<T> = DERIVATIVE_FILTERS[1].iter().map(|&v| T::of(v)).collect();
    [
        correlate_rows(img, &first),
        correlate_cols(img, &first),
        correlate_rows(img, &second),
        correlate_cols(img, &second),
    ]
}
