//! Benchmark, noise sweep, quantity curve and error analysis over a set of
//! cases. Nothing here touches the filesystem.

use std::time::{Duration, Instant};

use lrsr_core::bank::{ImageBank, Method};
use lrsr_core::fusion::fuse_bank;
use lrsr_core::imaging::resize_to;
use lrsr_core::metrics::{
    abs_error_map, overlap_stats, preference_map, psnr, sparsity_histogram, ssim, OverlapStats, PreferenceMap,
    SparsityHistogram,
};
use lrsr_core::Image;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::dataset::{make_cases, Case, Sample};
use crate::error::{HarnessError, Result, StageExt};
use crate::pipeline::{generate_bank, Model};
use crate::report::{BenchmarkReport, Row};

pub const BICUBIC: &str = "bicubic";
pub const INTERNAL_FUSED: &str = "internal_fused";
pub const EXTERNAL_FUSED: &str = "external_fused";
pub const FUSED: &str = "fused";

/// PSNR and SSIM after cropping `scale` pixels from every border.
pub fn score(truth: &Image, estimate: &Image, scale: usize) -> Result<(f64, f64)> {
    let t = truth.shave(scale).stage("score")?;
    let e = estimate.shave(scale).stage("score")?;
    Ok((psnr(&t, &e).stage("score")?, ssim(&t, &e).stage("score")?))
}

/// A case with its generated bank and per-member generation times.
pub struct CaseBank {
    pub case: Case,
    pub bank: ImageBank<f64>,
    pub times: Vec<Duration>,
}

pub fn build_banks(cases: Vec<Case>, model: &Model, cfg: &ExperimentConfig, n_int: usize, n_ext: usize) -> Result<Vec<CaseBank>> {
    cases
        .into_par_iter()
        .map(|case| {
            let (bank, times) = generate_bank(&case.lr, model, cfg, n_int, n_ext)?;
            Ok(CaseBank { case, bank, times })
        })
        .collect()
}

pub struct CaseScores {
    pub rows: Vec<Row>,
    pub fused: Image,
}

/// Scores bicubic, every selected member, both single-method fusions and the
/// full fusion of the first `cfg.bank` members of `cb.bank`.
pub fn score_bank(cb: &CaseBank, cfg: &ExperimentConfig) -> Result<CaseScores> {
    let (n_int, n_ext) = (cfg.bank.internal, cfg.bank.external);
    let case = &cb.case;
    let ms = |d: Duration| if cfg.record_timing { d.as_secs_f64() * 1e3 } else { 0.0 };
    let mut rows = Vec::new();
    let mut push = |method: String, img: &Image, wall: Duration| -> Result<()> {
        let (psnr_db, ssim) = score(&case.hr, img, cfg.scale)?;
        rows.push(Row { image: case.name.clone(), method, psnr_db, ssim, wall_ms: ms(wall) });
        Ok(())
    };

    let start = Instant::now();
    let bicubic = resize_to(&case.lr, case.hr.width(), case.hr.height()).stage("bicubic")?;
    push(BICUBIC.into(), &bicubic, start.elapsed())?;

    let time_of = |method: Method, n: usize| -> Duration {
        cb.bank
            .entries()
            .iter()
            .zip(&cb.times)
            .filter(|(e, _)| e.label.method == method)
            .take(n)
            .map(|(_, t)| *t)
            .sum()
    };
    let bank = cb.bank.select(n_int, n_ext).stage("bank")?;
    for entry in bank.entries() {
        let t = cb
            .bank
            .entries()
            .iter()
            .zip(&cb.times)
            .find(|(e, _)| e.label == entry.label)
            .map_or(Duration::ZERO, |(_, t)| *t);
        push(entry.label.to_string(), &entry.image, t)?;
    }
    let fuse_timed = |sub: &ImageBank<f64>, gen: Duration| -> Result<(Image, Duration)> {
        let start = Instant::now();
        let (img, _) = fuse_bank(sub, &cfg.fusion).stage("fusion")?;
        Ok((img, gen + start.elapsed()))
    };
    if n_int > 0 {
        let (img, t) = fuse_timed(&bank.select(n_int, 0).stage("bank")?, time_of(Method::Internal, n_int))?;
        push(INTERNAL_FUSED.into(), &img, t)?;
    }
    if n_ext > 0 {
        let (img, t) = fuse_timed(&bank.select(0, n_ext).stage("bank")?, time_of(Method::External, n_ext))?;
        push(EXTERNAL_FUSED.into(), &img, t)?;
    }
    let gen = time_of(Method::Internal, n_int) + time_of(Method::External, n_ext);
    let (fused, t) = fuse_timed(&bank, gen)?;
    push(FUSED.into(), &fused, t)?;
    Ok(CaseScores { rows, fused })
}

/// Scores prebuilt banks; returns the report (with means) and the fused
/// images in case order.
pub fn benchmark_banks(banks: &[CaseBank], cfg: &ExperimentConfig) -> Result<(BenchmarkReport, Vec<Image>)> {
    let scored = banks.par_iter().map(|cb| score_bank(cb, cfg)).collect::<Result<Vec<_>>>()?;
    let mut report = BenchmarkReport::default();
    let mut fused = Vec::with_capacity(scored.len());
    for s in scored {
        report.rows.extend(s.rows);
        fused.push(s.fused);
    }
    report.recompute_means();
    Ok((report, fused))
}

pub fn benchmark(samples: &[Sample], model: &Model, cfg: &ExperimentConfig, sigma: f64) -> Result<(BenchmarkReport, Vec<Image>)> {
    let cases = make_cases(samples, cfg.scale, sigma, cfg.seed)?;
    let banks = build_banks(cases, model, cfg, cfg.bank.internal, cfg.bank.external)?;
    benchmark_banks(&banks, cfg)
}

/// One benchmark per configured sigma, each on the same noise realisation.
pub fn noise_sweep(samples: &[Sample], model: &Model, cfg: &ExperimentConfig) -> Result<Vec<(f64, BenchmarkReport)>> {
    cfg.noise
        .sigmas
        .iter()
        .map(|&sigma| {
            log::info!("noise sweep: sigma = {sigma}");
            Ok((sigma, benchmark(samples, model, cfg, sigma)?.0))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(rename = "J")]
    pub j: usize,
    pub psnr_db: f64,
    pub ssim: f64,
}

/// Rejects odd or empty sizes and sizes beyond what the generators supply.
pub fn check_j_values(j_values: &[usize], cfg: &ExperimentConfig) -> Result<()> {
    if j_values.is_empty() {
        return Err(HarnessError::Config("no J values given".into()));
    }
    for &j in j_values {
        if j == 0 || j % 2 == 1 {
            return Err(HarnessError::Config(format!("J = {j} must be positive and even")));
        }
        cfg.check_bank(j / 2, j / 2)?;
    }
    Ok(())
}

/// Mean fused scores over the cases for each `J`, fusing the first `J/2`
/// internal and `J/2` external members in canonical order.
pub fn quantity_curve_banks(banks: &[CaseBank], cfg: &ExperimentConfig, j_values: &[usize]) -> Result<Vec<CurvePoint>> {
    check_j_values(j_values, cfg)?;
    j_values
        .iter()
        .map(|&j| {
            let scores = banks
                .par_iter()
                .map(|cb| {
                    let sub = cb.bank.select(j / 2, j / 2).stage("bank")?;
                    let (img, _) = fuse_bank(&sub, &cfg.fusion).stage("fusion")?;
                    score(&cb.case.hr, &img, cfg.scale)
                })
                .collect::<Result<Vec<_>>>()?;
            let n = scores.len() as f64;
            Ok(CurvePoint {
                j,
                psnr_db: scores.iter().map(|s| s.0).sum::<f64>() / n,
                ssim: scores.iter().map(|s| s.1).sum::<f64>() / n,
            })
        })
        .collect()
}

pub fn quantity_curve(samples: &[Sample], model: &Model, cfg: &ExperimentConfig, j_values: &[usize]) -> Result<Vec<CurvePoint>> {
    check_j_values(j_values, cfg)?;
    let half = j_values.iter().max().copied().unwrap_or(0) / 2;
    let cases = make_cases(samples, cfg.scale, 0.0, cfg.seed)?;
    let banks = build_banks(cases, model, cfg, half, half)?;
    quantity_curve_banks(&banks, cfg, j_values)
}

pub struct ImageAnalysis {
    pub name: String,
    pub preference: PreferenceMap,
    pub overlap: OverlapStats,
}

pub struct AnalysisReport {
    pub images: Vec<ImageAnalysis>,
    /// Over the error maps of every bank member of every image.
    pub histogram: SparsityHistogram,
}

/// Compares the internal-only and external-only fusions against the ground
/// truth, pixel by pixel.
pub fn analyze_banks(banks: &[CaseBank], cfg: &ExperimentConfig) -> Result<AnalysisReport> {
    let (n_int, n_ext) = (cfg.bank.internal, cfg.bank.external);
    if n_int == 0 || n_ext == 0 {
        return Err(HarnessError::Config("analysis needs members of both methods".into()));
    }
    let t = cfg.analysis.threshold;
    let per_image = banks
        .par_iter()
        .map(|cb| {
            let truth = cb.case.hr.shave(cfg.scale).stage("analysis")?;
            let err = |img: &Image| abs_error_map(&img.shave(cfg.scale)?, &truth);
            let (int, _) = fuse_bank(&cb.bank.select(n_int, 0).stage("bank")?, &cfg.fusion).stage("fusion")?;
            let (ext, _) = fuse_bank(&cb.bank.select(0, n_ext).stage("bank")?, &cfg.fusion).stage("fusion")?;
            let (e_int, e_ext) = (err(&int).stage("analysis")?, err(&ext).stage("analysis")?);
            let members = cb
                .bank
                .select(n_int, n_ext)
                .stage("bank")?
                .entries()
                .iter()
                .map(|e| err(&e.image))
                .collect::<lrsr_core::Result<Vec<_>>>()
                .stage("analysis")?;
            let analysis = ImageAnalysis {
                name: cb.case.name.clone(),
                preference: preference_map(&e_int, &e_ext).stage("analysis")?,
                overlap: overlap_stats(&e_int, &e_ext, t).stage("analysis")?,
            };
            Ok((analysis, members))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut images = Vec::new();
    let mut maps = Vec::new();
    for (a, m) in per_image {
        images.push(a);
        maps.extend(m);
    }
    let histogram = sparsity_histogram(&maps, t, cfg.analysis.bins).stage("analysis")?;
    Ok(AnalysisReport { images, histogram })
}
