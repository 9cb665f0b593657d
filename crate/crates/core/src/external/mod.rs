//! Coupled-dictionary super-resolution with a depth-one learned ISTA encoder.

mod features;
mod lista;
mod train;

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::{fit_feature_pipeline, raw_features, FeaturePipeline, PcaConfig, PIPELINE_KIND};
pub use lista::{lista_encode, lista_encode_batch, soft_threshold, DictionaryPair, DICTIONARY_KIND};
pub use train::{
    build_training_groups, group_bounds, train_dictionary_pair, PatchPairs, TrainConfig, TrainedDictionary,
    TrainingGroup,
};

use crate::bank::{BankEntry, BankLabel, ImageBank, Method};
use crate::container::Container;
use crate::error::{invalid, mismatch, Error, Result};
use crate::imaging::{
    aggregate_patches, degrade, resize_to, rotate90, scaled_dims, unrotate90, ImagePlane, PatchLayout,
};
use crate::internal::ROTATIONS;
use crate::Real;

/// Side of the feature and HR patches.
pub const PATCH_SIZE: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalConfig {
    /// Integer magnification the dictionaries are trained for.
    pub scale: usize,
    /// Number of dictionary pairs `m`.
    pub groups: usize,
    /// Fraction of a group shared with its neighbour.
    pub overlap: f64,
    /// Maximum number of training patch pairs.
    pub sample_budget: usize,
    pub sample_stride: usize,
    /// Patch stride at inference.
    pub stride: usize,
    pub pca: PcaConfig,
    pub train: TrainConfig,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            scale: 2,
            groups: 8,
            overlap: 0.1,
            sample_budget: 50_000,
            sample_stride: 2,
            stride: 2,
            pca: PcaConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Raw `4 p^2` features of the bicubic base, mean-removed HR residual
/// targets, and HR patch variances for every sampled patch.
pub struct RawPairs<T: Real> {
    pub raw: DMatrix<T>,
    pub targets: DMatrix<T>,
    pub variances: Vec<f64>,
}

fn patch_variance<T: Real>(v: &[T]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().map(|x| x.as_f64()).sum::<f64>() / n;
    v.iter().map(|x| (x.as_f64() - mean).powi(2)).sum::<f64>() / n
}

/// Synthesizes LR/HR pairs from HR luma images: `degrade`, bicubic back to HR
/// size, then patches of both on a `stride` lattice. Subsamples to `budget`
/// with a seeded draw.
pub fn collect_patch_pairs<T: Real>(
    hr_images: &[ImagePlane<T>],
    scale: usize,
    stride: usize,
    budget: usize,
    seed: u64,
) -> Result<RawPairs<T>> {
    let p = PATCH_SIZE;
    let n = p * p;
    let mut raw_cols = Vec::new();
    let mut targets = Vec::new();
    let mut variances = Vec::new();
    let mut hr_patch = vec![T::zero(); n];
    let mut base_patch = vec![T::zero(); n];
    for hr in hr_images {
        let hr = hr.modcrop(scale)?;
        let lr = degrade(&hr, scale)?;
        let base = resize_to(&lr, hr.width(), hr.height())?;
        let layout = PatchLayout::new(hr.width(), hr.height(), p, stride.min(p))?;
        let raw = raw_features(&base, &layout);
        for i in 0..layout.len() {
            layout.read(&hr, i, &mut hr_patch);
            layout.read(&base, i, &mut base_patch);
            let diff: Vec<T> = hr_patch.iter().zip(&base_patch).map(|(&a, &b)| a - b).collect();
            let mean = diff.iter().fold(T::zero(), |acc, &v| acc + v) / T::of_usize(n);
            targets.extend(diff.into_iter().map(|v| v - mean));
            variances.push(patch_variance(&hr_patch));
        }
        raw_cols.push(raw);
    }
    let total = variances.len();
    if total == 0 {
        return Err(Error::InsufficientSamples("no training patches".into()));
    }
    let raw_dim = 4 * n;
    let mut raw = DMatrix::<T>::zeros(raw_dim, total);
    let mut col = 0;
    for block in &raw_cols {
        raw.columns_mut(col, block.ncols()).copy_from(block);
        col += block.ncols();
    }
    let targets = DMatrix::from_vec(n, total, targets);
    if total <= budget {
        return Ok(RawPairs { raw, targets, variances });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = rand::seq::index::sample(&mut rng, total, budget).into_vec();
    keep.sort_unstable();
    Ok(RawPairs {
        raw: raw.select_columns(&keep),
        targets: targets.select_columns(&keep),
        variances: keep.iter().map(|&i| variances[i]).collect(),
    })
}

/// A feature pipeline with its `m` dictionary pairs and training logs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalModel<T: Real> {
    pub scale: usize,
    pub pipeline: FeaturePipeline<T>,
    pub dicts: Vec<DictionaryPair<T>>,
    /// Per group: objective after initialization and after each epoch.
    pub losses: Vec<Vec<f64>>,
}

/// Fits one global PCA pipeline and trains `cfg.groups` dictionary pairs on
/// variance-sorted overlapping groups.
pub fn train_external<T: Real>(hr_images: &[ImagePlane<T>], cfg: &ExternalConfig) -> Result<ExternalModel<T>> {
    if cfg.scale < 2 {
        return Err(invalid("scale", "must be at least 2"));
    }
    let pairs = collect_patch_pairs(hr_images, cfg.scale, cfg.sample_stride, cfg.sample_budget, cfg.train.seed)?;
    let pipeline = fit_feature_pipeline(&pairs.raw, PATCH_SIZE, &cfg.pca)?;
    log::info!(
        "external: {} patch pairs, PCA d = {} ({:.4} of variance)",
        pairs.variances.len(),
        pipeline.dim(),
        pipeline.retained_variance
    );
    let features = pipeline.project(&pairs.raw)?;
    let pairs = PatchPairs::new(features, pairs.targets, pairs.variances)?;
    let groups = build_training_groups(&pairs, cfg.groups, cfg.overlap)?;
    let trained = groups
        .par_iter()
        .map(|g| train_dictionary_pair(g, &cfg.train))
        .collect::<Result<Vec<_>>>()?;
    let (dicts, losses) = trained.into_iter().map(|t| (t.dict, t.losses)).unzip();
    Ok(ExternalModel { scale: cfg.scale, pipeline, dicts, losses })
}

impl<T: Real> ExternalModel<T> {
    /// Writes `pipeline.bin` and `dict_NN.bin` (1-based) into `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut pipe = self.pipeline.to_container();
        pipe.push_attr("scale", self.scale as u64);
        pipe.push_attr("groups", self.dicts.len() as u64);
        pipe.save(dir.join("pipeline.bin"))?;
        for (i, d) in self.dicts.iter().enumerate() {
            d.to_container().save(dir.join(format!("dict_{:02}.bin", i + 1)))?;
        }
        Ok(())
    }

    /// Reads a directory written by [`ExternalModel::save_dir`]; logs are not
    /// persisted and come back empty.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let pipe = Container::load(dir.join("pipeline.bin"))?;
        let pipeline = FeaturePipeline::from_container(&pipe)?;
        let groups = pipe.attr("groups")? as usize;
        let dicts = (1..=groups)
            .map(|i| DictionaryPair::from_container(&Container::load(dir.join(format!("dict_{i:02}.bin")))?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { scale: pipe.attr("scale")? as usize, pipeline, dicts, losses: vec![Vec::new(); groups] })
    }
}

/// Bicubic base plus decoded residual patches, averaged over overlaps.
pub fn external_sr<T: Real>(
    lr: &ImagePlane<T>,
    dict: &DictionaryPair<T>,
    pipeline: &FeaturePipeline<T>,
    target_scale: f64,
    rotation: u8,
    stride: usize,
) -> Result<ImagePlane<T>> {
    let p = pipeline.patch_size;
    if dict.feature_dim() != pipeline.dim() {
        return Err(mismatch(pipeline.dim(), dict.feature_dim()));
    }
    if dict.output_dim() != p * p {
        return Err(mismatch(p * p, dict.output_dim()));
    }
    if stride == 0 || stride > p {
        return Err(invalid("stride", format!("{stride} must lie in 1..={p}")));
    }
    let rotated = rotate90(lr, rotation);
    let (w, h) = scaled_dims(rotated.width(), rotated.height(), target_scale);
    let base = resize_to(&rotated, w, h)?;
    let layout = PatchLayout::new(w, h, p, stride)?;
    let features = pipeline.project(&raw_features(&base, &layout))?;
    let residual = &dict.d_h * lista_encode_batch(&features, dict)?;
    let n = p * p;
    let mut values = vec![T::zero(); layout.len() * n];
    for (i, out) in values.chunks_exact_mut(n).enumerate() {
        layout.read(&base, i, out);
        for (o, &r) in out.iter_mut().zip(residual.column(i).iter()) {
            *o += r;
        }
    }
    let out = aggregate_patches(&layout, &values)?.clamp01();
    Ok(unrotate90(&out, rotation))
}

/// `m x 4` images labeled by dictionary index (1-based) and rotation.
pub fn generate_external_bank<T: Real>(
    lr: &ImagePlane<T>,
    model: &ExternalModel<T>,
    target_scale: f64,
    stride: usize,
) -> Result<ImageBank<T>> {
    if model.dicts.is_empty() {
        return Err(Error::Empty("dictionaries"));
    }
    let jobs: Vec<(usize, u8)> = (0..model.dicts.len())
        .flat_map(|i| ROTATIONS.iter().map(move |&r| (i, r)))
        .collect();
    let entries = jobs
        .into_par_iter()
        .map(|(i, rotation)| {
            let image = external_sr(lr, &model.dicts[i], &model.pipeline, target_scale, rotation, stride)?;
            Ok(BankEntry { label: BankLabel { method: Method::External, index: i + 1, rotation }, image })
        })
        .collect::<Result<Vec<_>>>()?;
    ImageBank::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{bicubic_resize, gaussian_blur};
    use nalgebra::DVector;
    use rand::Rng;

    fn texture(w: usize, h: usize, seed: u64) -> ImagePlane<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = ImagePlane::from_fn(w, h, |_, _| rng.random::<f64>());
        let smooth = gaussian_blur(&noise, 1.0).unwrap();
        ImagePlane::from_fn(w, h, |x, y| {
            let s = 0.5 + 2.0 * (smooth.get(x, y) - 0.5);
            (0.5 * s + 0.25 + 0.2 * ((x as f64) * 0.9).sin() * ((y as f64) * 0.7).sin()).clamp(0.0, 1.0)
        })
    }

    fn small_cfg() -> ExternalConfig {
        ExternalConfig {
            groups: 2,
            sample_budget: 3000,
            train: TrainConfig { atoms: 32, epochs: 5, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn zero_decoder_reproduces_base() {
        let lr = texture(20, 16, 1);
        let model = train_external(&[texture(40, 40, 2)], &small_cfg()).unwrap();
        let mut dict = model.dicts[0].clone();
        dict.d_h.fill(0.0);
        for rot in ROTATIONS {
            let out = external_sr(&lr, &dict, &model.pipeline, 2.0, rot, 2).unwrap();
            let base = unrotate90(&bicubic_resize(&rotate90(&lr, rot), 2.0).unwrap(), rot);
            assert_eq!(out, base);
        }
    }

    #[test]
    fn constant_input_gives_base() {
        let lr = ImagePlane::filled(16, 16, 0.6f64);
        let model = train_external(&[texture(40, 40, 3)], &small_cfg()).unwrap();
        let out = external_sr(&lr, &model.dicts[1], &model.pipeline, 2.0, 0, 3).unwrap();
        assert_eq!(out, bicubic_resize(&lr, 2.0).unwrap());
    }

    #[test]
    fn bank_shape_labels_and_diversity() {
        let model = train_external(&[texture(40, 40, 4)], &small_cfg()).unwrap();
        let lr = texture(18, 18, 5);
        let bank = generate_external_bank(&lr, &model, 2.0, 2).unwrap();
        assert_eq!(bank.len(), 8);
        assert_eq!(bank.dims(), Some((36, 36)));
        assert_eq!(bank.entries()[5].label.to_string(), "external_d2_r1");
        let same = ExternalModel { dicts: vec![model.dicts[0].clone(); 2], ..model.clone() };
        let bank = generate_external_bank(&lr, &same, 2.0, 2).unwrap();
        let e = bank.entries();
        assert!((1..4).any(|r| e[r].image != e[0].image));
    }

    #[test]
    fn model_directory_roundtrip() {
        let model = train_external(&[texture(40, 40, 6)], &small_cfg()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save_dir(dir.path()).unwrap();
        let back = ExternalModel::<f64>::load_dir(dir.path()).unwrap();
        assert_eq!(back.pipeline, model.pipeline);
        assert_eq!(back.dicts, model.dicts);
        assert_eq!(back.scale, 2);
    }

    #[test]
    fn pairs_respect_budget_and_targets_are_zero_mean() {
        let imgs = [texture(30, 30, 7), texture(26, 34, 8)];
        let all = collect_patch_pairs(&imgs, 2, 2, usize::MAX, 0).unwrap();
        let sub = collect_patch_pairs(&imgs, 2, 2, 50, 0).unwrap();
        assert_eq!(sub.variances.len(), 50);
        assert_eq!(sub.raw.nrows(), 324);
        assert!(all.variances.len() > 50);
        for col in all.targets.column_iter() {
            assert!(col.sum().abs() < 1e-12);
        }
        let v = DVector::from_vec(all.variances.clone());
        assert!(v.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn improves_on_bicubic_for_periodic_texture() {
        let hr_train = texture(96, 96, 9);
        let cfg = ExternalConfig {
            groups: 1,
            sample_stride: 1,
            train: TrainConfig { atoms: 64, epochs: 20, ..Default::default() },
            ..Default::default()
        };
        let model = train_external(&[hr_train], &cfg).unwrap();
        // Held-out crop of the same texture family.
        let hr = texture(48, 48, 10);
        let lr = degrade(&hr, 2).unwrap();
        let sr = external_sr(&lr, &model.dicts[0], &model.pipeline, 2.0, 0, 1).unwrap();
        let bic = bicubic_resize(&lr, 2.0).unwrap();
        let score = |img: &ImagePlane<f64>| {
            crate::metrics::psnr(&hr.shave(2).unwrap(), &img.shave(2).unwrap()).unwrap()
        };
        assert!(score(&sr) > score(&bic), "{} vs {}", score(&sr), score(&bic));
    }
}
