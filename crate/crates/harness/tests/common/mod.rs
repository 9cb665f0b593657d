use std::path::Path;

use lrsr_core::external::{ExternalConfig, TrainConfig};
use lrsr_core::imaging::{gaussian_blur, io, ColorImage, ImagePlane};
use lrsr_harness::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn texture(w: usize, h: usize, seed: u64) -> ImagePlane<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = ImagePlane::from_fn(w, h, |_, _| rng.random::<f64>());
    let smooth = gaussian_blur(&noise, 1.2).unwrap();
    let f = 0.3 + 0.1 * seed as f64;
    ImagePlane::from_fn(w, h, |x, y| {
        let s = 0.5 + 2.5 * (smooth.get(x, y) - 0.5);
        (0.5 * s + 0.25 + 0.2 * (x as f64 * f).sin() * (y as f64 * 0.7 * f).cos()).clamp(0.0, 1.0)
    })
}

pub fn color(w: usize, h: usize, seed: u64) -> ColorImage<f64> {
    let y = texture(w, h, seed);
    ColorImage::new(y.map(|v| 0.9 * v + 0.05), y.clone(), y.map(|v| 1.0 - v)).unwrap()
}

/// Writes `n` synthetic colour PNGs into `dir`.
pub fn write_set(dir: &Path, n: usize, size: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        io::write_png_rgb(&color(size, size, seed + i as u64), dir.join(format!("img{i}.png"))).unwrap();
    }
}

/// Small, fast configuration over synthetic test and training sets in
/// `root`.
pub fn tiny_config(root: &Path) -> ExperimentConfig {
    write_set(&root.join("test"), 2, 40, 1);
    write_set(&root.join("train"), 3, 64, 10);
    let mut cfg = ExperimentConfig {
        test_dir: root.join("test"),
        train_dir: root.join("train"),
        out_dir: root.join("out"),
        external: ExternalConfig {
            groups: 2,
            sample_budget: 1500,
            train: TrainConfig { atoms: 16, epochs: 3, ..Default::default() },
            ..Default::default()
        },
        ..Default::default()
    };
    cfg.internal.k_max = 2;
    cfg.bank.internal = 4;
    cfg.bank.external = 4;
    cfg.noise.sigmas = vec![0.0, 10.0];
    cfg.curve.j_values = vec![2, 4, 8];
    cfg
}
