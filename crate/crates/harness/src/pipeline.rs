//! Bank generation and the full colour super-resolution pipeline.

use std::time::{Duration, Instant};

use lrsr_core::bank::{BankEntry, BankLabel, ImageBank, Method};
use lrsr_core::external::{external_sr, train_external, ExternalModel};
use lrsr_core::fusion::{fuse_bank, Decomposition};
use lrsr_core::imaging::{resize_to, YCbCr};
use lrsr_core::internal::{multiscale_sr, ROTATIONS};
use lrsr_core::{Color, Image};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::dataset;
use crate::error::{HarnessError, Result, StageExt};

pub type Model = ExternalModel<f64>;

/// Loads dictionaries from `cfg.model_dir`, or trains them from
/// `cfg.train_dir` when no model directory is configured.
pub fn load_or_train_model(cfg: &ExperimentConfig) -> Result<Model> {
    let model = match &cfg.model_dir {
        Some(dir) => Model::load_dir(dir).stage("load dictionaries")?,
        None => {
            let corpus: Vec<Image> = dataset::load_dir(&cfg.train_dir)?
                .into_iter()
                .map(|s| s.image.luma())
                .collect();
            train_external(&corpus, &cfg.external).stage("train dictionaries")?
        }
    };
    if model.scale != cfg.scale {
        return Err(HarnessError::Config(format!(
            "dictionaries were trained for x{}, config asks for x{}",
            model.scale, cfg.scale
        )));
    }
    Ok(model)
}

/// First `n` labels of a method in the canonical order (ascending index, then
/// rotation). Dictionary indices are 1-based.
pub fn canonical_labels(method: Method, n: usize) -> Vec<BankLabel> {
    (1..)
        .flat_map(|index| ROTATIONS.iter().map(move |&rotation| BankLabel { method, index, rotation }))
        .take(n)
        .collect()
}

/// The first `n_int` internal and `n_ext` external members, each with its
/// generation time.
pub fn generate_bank(
    lr: &Image,
    model: &Model,
    cfg: &ExperimentConfig,
    n_int: usize,
    n_ext: usize,
) -> Result<(ImageBank<f64>, Vec<Duration>)> {
    cfg.check_bank(n_int, n_ext)?;
    if n_ext > model.dicts.len() * ROTATIONS.len() {
        return Err(HarnessError::Config(format!(
            "{n_ext} external members requested, model holds {} dictionaries",
            model.dicts.len()
        )));
    }
    let labels: Vec<BankLabel> = canonical_labels(Method::Internal, n_int)
        .into_iter()
        .chain(canonical_labels(Method::External, n_ext))
        .collect();
    let scale = cfg.scale as f64;
    let (entries, times): (Vec<_>, Vec<_>) = labels
        .into_par_iter()
        .map(|label| {
            let start = Instant::now();
            let image = match label.method {
                Method::Internal => multiscale_sr(lr, &cfg.internal, label.index, label.rotation).stage("internal")?,
                Method::External => external_sr(
                    lr,
                    &model.dicts[label.index - 1],
                    &model.pipeline,
                    scale,
                    label.rotation,
                    cfg.external.stride,
                )
                .stage("external")?,
            };
            Ok((BankEntry { label, image }, start.elapsed()))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok((ImageBank::new(entries).stage("bank")?, times))
}

pub struct LumaResult {
    pub fused: Image,
    pub bank: ImageBank<f64>,
    pub decomposition: Decomposition<f64>,
}

/// Bank generation and fusion on one luma plane.
pub fn super_resolve_luma(lr: &Image, model: &Model, cfg: &ExperimentConfig) -> Result<LumaResult> {
    let (bank, _) = generate_bank(lr, model, cfg, cfg.bank.internal, cfg.bank.external)?;
    let (fused, decomposition) = fuse_bank(&bank, &cfg.fusion).stage("fusion")?;
    Ok(LumaResult { fused, bank, decomposition })
}

pub struct SrOutput {
    pub image: Color,
    pub luma: LumaResult,
}

/// Super-resolves the luma channel and recombines it with bicubic-upscaled
/// chroma.
pub fn run_sr_pipeline(lr: &Color, model: &Model, cfg: &ExperimentConfig) -> Result<SrOutput> {
    let ycc = lr.to_ycbcr();
    let luma = super_resolve_luma(&ycc.y, model, cfg)?;
    let (w, h) = luma.fused.dims();
    let cb = resize_to(&ycc.cb, w, h).stage("chroma")?;
    let cr = resize_to(&ycc.cr, w, h).stage("chroma")?;
    let image = YCbCr::new(luma.fused.clone(), cb, cr).stage("chroma")?.to_rgb();
    Ok(SrOutput { image, luma })
}
