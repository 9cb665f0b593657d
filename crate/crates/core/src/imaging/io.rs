//! PNG import/export with 8-bit quantisation `round(v * 255)`.

use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use super::{ColorImage, ImagePlane};
use crate::error::Result;
use crate::Real;

#[inline]
pub fn to_u8<T: Real>(v: T) -> u8 {
    (v.as_f64() * 255.0).round().clamp(0.0, 255.0) as u8
}

#[inline]
pub fn from_u8<T: Real>(v: u8) -> T {
    T::of(v as f64 / 255.0)
}

/// Reads any PNG as RGB; grayscale sources are replicated across channels.
pub fn read_png<T: Real>(path: impl AsRef<Path>) -> Result<ColorImage<T>> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let plane = |c: usize| ImagePlane::from_fn(w, h, |x, y| from_u8(img.get_pixel(x as u32, y as u32)[c]));
    Ok(ColorImage { r: plane(0), g: plane(1), b: plane(2) })
}

pub fn write_png_rgb<T: Real>(img: &ColorImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = img.dims();
    let buf: RgbImage = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        Rgb([to_u8(img.r.get(x, y)), to_u8(img.g.get(x, y)), to_u8(img.b.get(x, y))])
    });
    buf.save(path)?;
    Ok(())
}

pub fn write_png_gray<T: Real>(img: &ImagePlane<T>, path: impl AsRef<Path>) -> Result<()> {
    let buf: GrayImage = ImageBuffer::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        Luma([to_u8(img.get(x as usize, y as usize))])
    });
    buf.save(path)?;
    Ok(())
}

/// Writes samples already on the 0-255 scale (error maps, preference maps).
pub fn write_png_levels<T: Real>(img: &ImagePlane<T>, path: impl AsRef<Path>) -> Result<()> {
    let buf: GrayImage = ImageBuffer::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        Luma([img.get(x as usize, y as usize).as_f64().round().clamp(0.0, 255.0) as u8])
    });
    buf.save(path)?;
    Ok(())
}

/// Snaps a plane to the nearest 8-bit level, as saving and reloading would.
pub fn quantize_u8<T: Real>(img: &ImagePlane<T>) -> ImagePlane<T> {
    img.map(|v| from_u8(to_u8(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_roundtrip_is_quantised_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = ColorImage {
            r: ImagePlane::from_fn(6, 4, |x, _| x as f64 / 5.0),
            g: ImagePlane::from_fn(6, 4, |_, y| y as f64 / 3.0),
            b: ImagePlane::<f64>::filled(6, 4, 0.3),
        };
        write_png_rgb(&img, &path).unwrap();
        let back: ColorImage<f64> = read_png(&path).unwrap();
        assert_eq!(back.r, quantize_u8(&img.r));
        assert_eq!(back.g, quantize_u8(&img.g));
        assert_eq!(back.b, quantize_u8(&img.b));
    }

    #[test]
    fn gray_png_reads_as_equal_channels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let img = ImagePlane::from_fn(5, 5, |x, y| ((x + y) % 3) as f64 / 2.0);
        write_png_gray(&img, &path).unwrap();
        let back: ColorImage<f64> = read_png(&path).unwrap();
        assert!(back.is_gray());
        assert_eq!(back.luma().map(|v| (v * 255.0).round() / 255.0), quantize_u8(&img));
    }
}
