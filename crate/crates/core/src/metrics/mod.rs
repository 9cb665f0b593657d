//! Quality metrics and error-attribute analyses.

mod analysis;
mod quality;

pub use analysis::{
    abs_error_map, overlap_stats, preference_map, sparsity_histogram, ErrorMap, OverlapStats,
    PreferenceMap, SparsityHistogram, DEFAULT_THRESHOLD,
};
pub use quality::{mse, psnr, ssim, PEAK, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
