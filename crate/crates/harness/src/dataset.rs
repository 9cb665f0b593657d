//! Image directories and the synthetic LR/HR cases built from them.

use std::path::Path;

use lrsr_core::imaging::{add_gaussian_noise, degrade, io};
use lrsr_core::{Color, Image};

use crate::error::{HarnessError, Result, StageExt};

pub struct Sample {
    pub name: String,
    pub image: Color,
}

/// Every readable PNG in `dir`, sorted by file name. Unreadable files are
/// skipped with a warning.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        match io::read_png::<f64>(&path) {
            Ok(image) => {
                let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                out.push(Sample { name, image });
            }
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if out.is_empty() {
        return Err(HarnessError::NoImages(dir.to_path_buf()));
    }
    Ok(out)
}

/// One benchmark case on the luma channel.
#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    /// Ground truth, cropped to a multiple of the scale.
    pub hr: Image,
    pub lr: Image,
}

/// Degrades each sample by `scale` and adds noise of `sigma` gray levels to
/// the LR luma. Image `i` uses noise seed `seed + i`, so one realisation is
/// scaled across a sigma sweep.
pub fn make_cases(samples: &[Sample], scale: usize, sigma: f64, seed: u64) -> Result<Vec<Case>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let hr = s.image.luma().modcrop(scale).stage("degrade")?;
            let lr = degrade(&hr, scale).stage("degrade")?;
            let lr = add_gaussian_noise(&lr, sigma, seed.wrapping_add(i as u64)).stage("noise")?;
            Ok(Case { name: s.name.clone(), hr, lr })
        })
        .collect()
}
