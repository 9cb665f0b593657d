use super::ImagePlane;
use crate::error::{Error, Result};
use crate::Real;

/// Three-channel RGB raster with samples in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage<T> {
    pub r: ImagePlane<T>,
    pub g: ImagePlane<T>,
    pub b: ImagePlane<T>,
}

/// Full-range BT.601 YCbCr planes (chroma centred on 0.5).
#[derive(Clone, Debug, PartialEq)]
pub struct YCbCr<T> {
    pub y: ImagePlane<T>,
    pub cb: ImagePlane<T>,
    pub cr: ImagePlane<T>,
}

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

impl<T: Real> ColorImage<T> {
    pub fn new(r: ImagePlane<T>, g: ImagePlane<T>, b: ImagePlane<T>) -> Result<Self> {
        r.ensure_same_dims(&g)?;
        r.ensure_same_dims(&b)?;
        Ok(Self { r, g, b })
    }

    pub fn from_gray(y: &ImagePlane<T>) -> Self {
        Self {
            r: y.clone(),
            g: y.clone(),
            b: y.clone(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.r.dims()
    }

    pub fn map_planes(&self, mut f: impl FnMut(&ImagePlane<T>) -> Result<ImagePlane<T>>) -> Result<Self> {
        Self::new(f(&self.r)?, f(&self.g)?, f(&self.b)?)
    }

    pub fn is_gray(&self) -> bool {
        self.r == self.g && self.g == self.b
    }

    pub fn to_ycbcr(&self) -> YCbCr<T> {
        let (w, h) = self.dims();
        let (r, g, b) = (self.r.as_slice(), self.g.as_slice(), self.b.as_slice());
        let (kr, kg, kb) = (T::of(KR), T::of(KG), T::of(KB));
        let half = T::of(0.5);
        let cb_scale = T::of(0.5 / (1.0 - KB));
        let cr_scale = T::of(0.5 / (1.0 - KR));
        let mut y = Vec::with_capacity(w * h);
        let mut cb = Vec::with_capacity(w * h);
        let mut cr = Vec::with_capacity(w * h);
        for i in 0..w * h {
            let luma = kr * r[i] + kg * g[i] + kb * b[i];
            y.push(luma);
            cb.push(half + (b[i] - luma) * cb_scale);
            cr.push(half + (r[i] - luma) * cr_scale);
        }
        YCbCr {
            y: ImagePlane::from_raw(w, h, y),
            cb: ImagePlane::from_raw(w, h, cb),
            cr: ImagePlane::from_raw(w, h, cr),
        }
    }

    pub fn luma(&self) -> ImagePlane<T> {
        self.to_ycbcr().y
    }
}

impl<T: Real> YCbCr<T> {
    pub fn new(y: ImagePlane<T>, cb: ImagePlane<T>, cr: ImagePlane<T>) -> Result<Self> {
        if y.dims() != cb.dims() || y.dims() != cr.dims() {
            return Err(Error::InvalidImage("luma and chroma sizes differ".into()));
        }
        Ok(Self { y, cb, cr })
    }

    /// Recombines into RGB, clamping each channel to `[0, 1]`.
    pub fn to_rgb(&self) -> ColorImage<T> {
        let (w, h) = self.y.dims();
        let half = T::of(0.5);
        let cr_r = T::of(2.0 * (1.0 - KR));
        let cb_b = T::of(2.0 * (1.0 - KB));
        let cb_g = T::of(2.0 * KB * (1.0 - KB) / KG);
        let cr_g = T::of(2.0 * KR * (1.0 - KR) / KG);
        let (y, cb, cr) = (self.y.as_slice(), self.cb.as_slice(), self.cr.as_slice());
        let clamp = |v: T| v.clamp(T::zero(), T::one());
        let mut r = Vec::with_capacity(w * h);
        let mut g = Vec::with_capacity(w * h);
        let mut b = Vec::with_capacity(w * h);
        for i in 0..w * h {
            let (pb, pr) = (cb[i] - half, cr[i] - half);
            r.push(clamp(y[i] + cr_r * pr));
            g.push(clamp(y[i] - cb_g * pb - cr_g * pr));
            b.push(clamp(y[i] + cb_b * pb));
        }
        ColorImage {
            r: ImagePlane::from_raw(w, h, r),
            g: ImagePlane::from_raw(w, h, g),
            b: ImagePlane::from_raw(w, h, b),
        }
    }
}

/// Luma of a color image (BT.601 weights).
pub fn rgb_to_luma<T: Real>(img: &ColorImage<T>) -> ImagePlane<T> {
    img.luma()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(r: f64, g: f64, b: f64) -> ColorImage<f64> {
        ColorImage::new(
            ImagePlane::filled(2, 2, r),
            ImagePlane::filled(2, 2, g),
            ImagePlane::filled(2, 2, b),
        )
        .unwrap()
    }

    #[test]
    fn gray_maps_to_itself() {
        for v in [0.0, 0.2, 0.73, 1.0] {
            let y = solid(v, v, v).luma();
            assert!(y.as_slice().iter().all(|&s| (s - v).abs() < 1e-15));
        }
    }

    #[test]
    fn black_is_zero() {
        assert!(solid(0.0, 0.0, 0.0).luma().as_slice().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn primaries_follow_bt601_table() {
        // Reference: ITU-R BT.601 luma coefficients.
        let table = [((1.0, 0.0, 0.0), 0.299), ((0.0, 1.0, 0.0), 0.587), ((0.0, 0.0, 1.0), 0.114)];
        for ((r, g, b), want) in table {
            let y = solid(r, g, b).luma().get(0, 0);
            assert!((y - want).abs() < 1e-15, "{y} vs {want}");
        }
        // JPEG full-range chroma for pure red.
        let ycc = solid(1.0, 0.0, 0.0).to_ycbcr();
        assert!((ycc.cb.get(0, 0) - (0.5 - 0.168736)).abs() < 1e-6);
        assert!((ycc.cr.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ycbcr_roundtrip() {
        let img = ColorImage::new(
            ImagePlane::from_fn(5, 4, |x, y| (x as f64 * 0.2 + y as f64 * 0.05).min(1.0)),
            ImagePlane::from_fn(5, 4, |x, _| 0.1 * x as f64),
            ImagePlane::from_fn(5, 4, |_, y| 0.3 + 0.1 * y as f64),
        )
        .unwrap();
        let back = img.to_ycbcr().to_rgb();
        for (a, b) in [(&img.r, &back.r), (&img.g, &back.g), (&img.b, &back.b)] {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
