use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ImagePlane;
use crate::error::{invalid, Result};
use crate::Real;

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation `sigma / 255`
/// and clamps to `[0, 1]`.
///
/// The noise field depends only on `seed`, so sweeping `sigma` with a fixed
/// seed scales one realisation.
pub fn add_gaussian_noise<T: Real>(img: &ImagePlane<T>, sigma: f64, seed: u64) -> Result<ImagePlane<T>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("{sigma} must be non-negative")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = sigma / 255.0;
    Ok(img.map(|v| {
        let n: f64 = rng.sample(StandardNormal);
        (v + T::of(std * n)).clamp(T::zero(), T::one())
    }))
}
