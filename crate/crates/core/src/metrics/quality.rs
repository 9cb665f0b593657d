//! PSNR and SSIM on the 0-255 convention.

use crate::error::{Error, Result};
use crate::imaging::{gaussian_taps, ImagePlane};
use crate::Real;

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Mean squared error on the 0-255 scale.
pub fn mse<T: Real>(reference: &ImagePlane<T>, test: &ImagePlane<T>) -> Result<T> {
    reference.ensure_same_dims(test)?;
    let peak = T::of(PEAK);
    let sum = reference
        .as_slice()
        .iter()
        .zip(test.as_slice())
        .fold(T::zero(), |acc, (&a, &b)| {
            let d = (a - b) * peak;
            acc + d * d
        });
    Ok(sum / T::of_usize(reference.len()))
}

/// `10 log10(255^2 / MSE)`; identical images give `+inf`.
pub fn psnr<T: Real>(reference: &ImagePlane<T>, test: &ImagePlane<T>) -> Result<T> {
    let mse = mse(reference, test)?;
    if mse == T::zero() {
        return Ok(T::infinity());
    }
    Ok(T::of(10.0) * (T::of(PEAK * PEAK) / mse).log10())
}

/// Valid-mode separable correlation with a square window.
fn filter_valid<T: Real>(src: &[T], w: usize, h: usize, taps: &[T]) -> Vec<T> {
    let n = taps.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![T::zero(); h * ow];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps
                .iter()
                .zip(&line[x..x + n])
                .fold(T::zero(), |acc, (&t, &v)| acc + t * v);
        }
    }
    let mut out = vec![T::zero(); ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &t)| acc + t * rows[(y + k) * ow + x]);
        }
    }
    out
}

/// Windowed SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 255, averaged over all fully-contained windows.
pub fn ssim<T: Real>(reference: &ImagePlane<T>, test: &ImagePlane<T>) -> Result<T> {
    reference.ensure_same_dims(test)?;
    let (w, h) = reference.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidImage(format!(
            "{w}x{h} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let peak = T::of(PEAK);
    let a: Vec<T> = reference.as_slice().iter().map(|&v| v * peak).collect();
    let b: Vec<T> = test.as_slice().iter().map(|&v| v * peak).collect();
    let aa: Vec<T> = a.iter().map(|&v| v * v).collect();
    let bb: Vec<T> = b.iter().map(|&v| v * v).collect();
    let ab: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| x * y).collect();

    let taps: Vec<T> = gaussian_taps(SSIM_SIGMA).into_iter().map(T::of).collect();
    debug_assert_eq!(taps.len(), SSIM_WINDOW);
    let mu_a = filter_valid(&a, w, h, &taps);
    let mu_b = filter_valid(&b, w, h, &taps);
    let e_aa = filter_valid(&aa, w, h, &taps);
    let e_bb = filter_valid(&bb, w, h, &taps);
    let e_ab = filter_valid(&ab, w, h, &taps);

    let c1 = T::of((SSIM_K1 * PEAK).powi(2));
    let c2 = T::of((SSIM_K2 * PEAK).powi(2));
    let two = T::of(2.0);
    let mut total = T::zero();
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (two * (ma * mb) + c1) * (two * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        total += num / den;
    }
    Ok(total / T::of_usize(mu_a.len()))
}
