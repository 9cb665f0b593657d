use crate::error::{mismatch, Error, Result};
use crate::Real;

/// Single-channel raster stored row-major.
///
/// Luma planes hold samples in `[0, 1]`; derived planes (high bands, feature
/// responses) may be signed. Every sample is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> ImagePlane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero dimension {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(mismatch(width * height, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(Self { width, height, data })
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics on a zero dimension.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "zero image dimension");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "zero image dimension");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps a buffer whose length and finiteness the caller guarantees.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with replicate (edge clamp) boundary handling.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self::from_raw(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_dims(other)?;
        Ok(Self::from_raw(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(mismatch(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ));
        }
        Ok(())
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(T::zero(), T::one()))
    }

    pub fn mean(&self) -> T {
        let sum = self.data.iter().fold(T::zero(), |acc, &v| acc + v);
        sum / T::of_usize(self.data.len())
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidParameter {
                name: "crop",
                reason: format!(
                    "window {width}x{height}+{x0}+{y0} outside {}x{}",
                    self.width, self.height
                ),
            });
        }
        Ok(Self::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Removes `border` pixels from every side.
    pub fn shave(&self, border: usize) -> Result<Self> {
        if 2 * border >= self.width || 2 * border >= self.height {
            return Err(Error::InvalidParameter {
                name: "border",
                reason: format!("{border} too large for {}x{}", self.width, self.height),
            });
        }
        self.crop(
            border,
            border,
            self.width - 2 * border,
            self.height - 2 * border,
        )
    }

    /// Crops to the largest size divisible by `scale`, anchored top-left.
    pub fn modcrop(&self, scale: usize) -> Result<Self> {
        if scale == 0 {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: "must be positive".into(),
            });
        }
        let w = self.width - self.width % scale;
        let h = self.height - self.height % scale;
        self.crop(0, 0, w, h)
    }

    /// Converts the sample type.
    pub fn cast<U: Real>(&self) -> ImagePlane<U> {
        ImagePlane::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        )
    }
}

impl<T: Real> std::ops::Add for &ImagePlane<T> {
    type Output = ImagePlane<T>;

    /// Panics on mismatched dimensions.
    fn add(self, rhs: Self) -> ImagePlane<T> {
        self.zip_map(rhs, |a, b| a + b).expect("matching dimensions")
    }
}

impl<T: Real> std::ops::Sub for &ImagePlane<T> {
    type Output = ImagePlane<T>;

    fn sub(self, rhs: Self) -> ImagePlane<T> {
        self.zip_map(rhs, |a, b| a - b).expect("matching dimensions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(ImagePlane::<f64>::new(0, 3, vec![]).is_err());
        assert!(ImagePlane::<f64>::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImagePlane::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(ImagePlane::new(2, 1, vec![0.25f32, 0.5]).is_ok());
    }

    #[test]
    fn modcrop_trims_to_multiple() {
        let img = ImagePlane::<f64>::filled(13, 10, 0.5);
        assert_eq!(img.modcrop(3).unwrap().dims(), (12, 9));
        assert_eq!(img.modcrop(2).unwrap().dims(), (12, 10));
    }

    #[test]
    fn clamped_access_replicates_edges() {
        let img = ImagePlane::from_fn(3, 2, |x, y| (x + 10 * y) as f64);
        assert_eq!(img.get_clamped(-4, 0), 0.0);
        assert_eq!(img.get_clamped(7, 9), 12.0);
    }
}
