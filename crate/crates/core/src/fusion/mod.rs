//! Low-rank + sparse fusion of a preliminary-image bank.

mod godec;
mod project;
mod stack;

pub use godec::{godec, Decomposition, GodecConfig, DECOMPOSITION_KIND};
pub use project::{hard_threshold_card, rank_r_exact, rank_r_project, rank_r_randomized, Projector};
pub use stack::{stack_images, StackedMatrix};

use crate::bank::ImageBank;
use crate::error::{mismatch, Result};
use crate::imaging::ImagePlane;
use crate::Real;

/// Averages the low-rank columns into one image, clamped to `[0, 1]`.
pub fn fuse<T: Real>(dec: &Decomposition<T>, width: usize, height: usize) -> Result<ImagePlane<T>> {
    let l = &dec.low_rank;
    if l.nrows() != width * height {
        return Err(mismatch(width * height, l.nrows()));
    }
    let j = T::of_usize(l.ncols());
    let data = l
        .row_iter()
        .map(|row| (row.iter().fold(T::zero(), |acc, &v| acc + v) / j).clamp(T::zero(), T::one()))
        .collect();
    ImagePlane::new(width, height, data)
}

/// Stack, decompose and fuse a bank in one call.
pub fn fuse_bank<T: Real>(bank: &ImageBank<T>, cfg: &GodecConfig) -> Result<(ImagePlane<T>, Decomposition<T>)> {
    let stacked = stack_images(bank)?;
    let dec = godec(&stacked, cfg)?;
    let img = fuse(&dec, stacked.width, stacked.height)?;
    Ok((img, dec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::{BankEntry, BankLabel, Method};
    use nalgebra::{DMatrix, DVector};

    fn label(j: usize) -> BankLabel {
        BankLabel { method: Method::Internal, index: j, rotation: 0 }
    }

    #[test]
    fn identical_members_fuse_to_themselves() {
        let img = ImagePlane::from_fn(6, 5, |x, y| (x * 5 + y) as f64 / 40.0);
        let bank = ImageBank::new(
            (0..4).map(|j| BankEntry { label: label(j), image: img.clone() }).collect(),
        )
        .unwrap();
        let (out, _) = fuse_bank(&bank, &GodecConfig::default()).unwrap();
        for (a, b) in out.as_slice().iter().zip(img.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_mean_is_scaled_left_vector() {
        let u: DVector<f64> = DVector::from_vec(vec![0.1, 0.3, 0.2, 0.4]);
        let v: DVector<f64> = DVector::from_vec(vec![0.5, 1.0, 1.5]);
        let l = &u * v.transpose();
        let dec = Decomposition {
            low_rank: l.clone(),
            sparse: DMatrix::zeros(4, 3),
            noise: DMatrix::zeros(4, 3),
            rank: 1,
            k_card: 0,
            iterations: 1,
            residual_norm: 0.0,
            history: vec![0.0],
            converged: true,
        };
        let out = fuse(&dec, 2, 2).unwrap();
        for i in 0..4 {
            assert!((out.as_slice()[i] - u[i] * 1.0).abs() < 1e-15);
        }
        assert!(fuse(&dec, 3, 2).is_err());
    }
}
