//! Image representation, resampling, degradation, patches and filters shared
//! by both learning methods.

mod color;
mod filter;
mod geometry;
pub mod io;
mod noise;
mod patch;
mod plane;
mod resample;

pub use color::{rgb_to_luma, ColorImage, YCbCr};
pub use filter::{
    default_blur_sigma, derivative_features, gaussian_blur, gaussian_taps, high_pass_decompose,
    DERIVATIVE_FILTERS,
};
pub use geometry::{rotate90, unrotate90};
pub use noise::add_gaussian_noise;
pub use patch::{
    aggregate_patches, extract_patches, extract_with_layout, lattice_positions, PatchGrid, PatchLayout,
};
pub use plane::ImagePlane;
pub use resample::{bicubic_resize, cubic_kernel, degrade, resize_to, scaled_dims};
