use super::ImagePlane;
use crate::Real;

/// Lossless rotation by `quarter_turns` x 90 degrees counter-clockwise.
///
/// Output pixel `(x', y')` of one turn reads input `(w - 1 - y', x')`.
pub fn rotate90<T: Real>(img: &ImagePlane<T>, quarter_turns: u8) -> ImagePlane<T> {
    let (w, h) = img.dims();
    match quarter_turns % 4 {
        0 => img.clone(),
        1 => ImagePlane::from_fn(h, w, |x, y| img.get(w - 1 - y, x)),
        2 => ImagePlane::from_fn(w, h, |x, y| img.get(w - 1 - x, h - 1 - y)),
        _ => ImagePlane::from_fn(h, w, |x, y| img.get(y, h - 1 - x)),
    }
}

/// Undoes [`rotate90`] with the same `quarter_turns`.
pub fn unrotate90<T: Real>(img: &ImagePlane<T>, quarter_turns: u8) -> ImagePlane<T> {
    rotate90(img, (4 - quarter_turns % 4) % 4)
}
