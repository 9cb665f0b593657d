//! Command bodies: run an experiment and write its artifacts under
//! `cfg.out_dir`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lrsr_core::external::train_external;
use lrsr_core::imaging::io;
use lrsr_core::Image;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::dataset;
use crate::error::{Result, StageExt};
use crate::experiments::{self, AnalysisReport, CurvePoint};
use crate::pipeline::{run_sr_pipeline, Model};
use crate::report::{write_sigma_csv, BenchmarkReport};

/// Writes `run.log`: the command line and the fully resolved configuration.
pub fn write_run_log(cfg: &ExperimentConfig, command: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut f = fs::File::create(cfg.out_dir.join("run.log"))?;
    writeln!(f, "# lrsr {} {command}", env!("CARGO_PKG_VERSION"))?;
    f.write_all(cfg.to_toml()?.as_bytes())?;
    Ok(())
}

fn save_fused(dir: &Path, names: &[String], images: &[Image]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, img) in names.iter().zip(images) {
        io::write_png_gray(img, dir.join(format!("{name}_fused.png"))).stage("write image")?;
    }
    Ok(())
}

/// Trains the dictionaries from `cfg.train_dir` into `out_dir/model`, plus
/// `training_log.csv` (`epoch,group,loss`; epoch 0 is the initialization).
pub fn train(cfg: &ExperimentConfig) -> Result<(Model, PathBuf)> {
    write_run_log(cfg, "train")?;
    let corpus: Vec<Image> = dataset::load_dir(&cfg.train_dir)?
        .into_iter()
        .map(|s| s.image.luma())
        .collect();
    let model = train_external(&corpus, &cfg.external).stage("train dictionaries")?;
    let dir = cfg.out_dir.join("model");
    model.save_dir(&dir).stage("save dictionaries")?;
    #[derive(Serialize)]
    struct LogRow {
        epoch: usize,
        group: usize,
        loss: f64,
    }
    let mut w = csv::Writer::from_path(dir.join("training_log.csv"))?;
    for (g, losses) in model.losses.iter().enumerate() {
        for (epoch, &loss) in losses.iter().enumerate() {
            w.serialize(LogRow { epoch, group: g + 1, loss })?;
        }
    }
    w.flush()?;
    Ok((model, dir))
}

/// Super-resolves one colour image; writes `<stem>_sr.png` and the bank
/// with its manifest under `<stem>_bank/`.
pub fn super_resolve(cfg: &ExperimentConfig, model: &Model, input: &Path) -> Result<PathBuf> {
    write_run_log(cfg, &format!("sr {}", input.display()))?;
    let lr = io::read_png::<f64>(input).stage("read input")?;
    let out = run_sr_pipeline(&lr, model, cfg)?;
    let stem = input.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let path = cfg.out_dir.join(format!("{stem}_sr.png"));
    io::write_png_rgb(&out.image, &path).stage("write image")?;
    out.luma.bank.save_dir(cfg.out_dir.join(format!("{stem}_bank"))).stage("write bank")?;
    log::info!(
        "{stem}: bank of {}, fusion converged = {} after {} iterations",
        out.luma.bank.len(),
        out.luma.decomposition.converged,
        out.luma.decomposition.iterations
    );
    Ok(path)
}

/// `report.csv` plus `images/<name>_fused.png` for every test image.
pub fn bench(cfg: &ExperimentConfig, model: &Model) -> Result<BenchmarkReport> {
    write_run_log(cfg, "bench")?;
    let samples = dataset::load_dir(&cfg.test_dir)?;
    let (report, fused) = experiments::benchmark(&samples, model, cfg, 0.0)?;
    report.write_csv(cfg.out_dir.join("report.csv"))?;
    let names: Vec<String> = samples.into_iter().map(|s| s.name).collect();
    save_fused(&cfg.out_dir.join("images"), &names, &fused)?;
    Ok(report)
}

/// `noise_sweep.csv` with a leading `sigma` column.
pub fn noise_sweep(cfg: &ExperimentConfig, model: &Model) -> Result<Vec<(f64, BenchmarkReport)>> {
    write_run_log(cfg, "noise-sweep")?;
    let samples = dataset::load_dir(&cfg.test_dir)?;
    let reports = experiments::noise_sweep(&samples, model, cfg)?;
    write_sigma_csv(&reports, cfg.out_dir.join("noise_sweep.csv"))?;
    Ok(reports)
}

/// `quantity_curve.csv` (`J,psnr_db,ssim`).
pub fn quantity_curve(cfg: &ExperimentConfig, model: &Model) -> Result<Vec<CurvePoint>> {
    write_run_log(cfg, "quantity-curve")?;
    let samples = dataset::load_dir(&cfg.test_dir)?;
    let points = experiments::quantity_curve(&samples, model, cfg, &cfg.curve.j_values)?;
    let mut w = csv::Writer::from_path(cfg.out_dir.join("quantity_curve.csv"))?;
    for p in &points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(points)
}

/// Writes under `out_dir/analysis/`: `<name>_preference.png`, `overlap.csv`
/// and `sparsity.csv`.
pub fn analyze(cfg: &ExperimentConfig, model: &Model) -> Result<AnalysisReport> {
    write_run_log(cfg, "analyze")?;
    let samples = dataset::load_dir(&cfg.test_dir)?;
    let cases = dataset::make_cases(&samples, cfg.scale, 0.0, cfg.seed)?;
    let banks = experiments::build_banks(cases, model, cfg, cfg.bank.internal, cfg.bank.external)?;
    let report = experiments::analyze_banks(&banks, cfg)?;
    let dir = cfg.out_dir.join("analysis");
    fs::create_dir_all(&dir)?;

    #[derive(Serialize)]
    struct OverlapRow<'a> {
        image: &'a str,
        c_int: usize,
        c_ext: usize,
        c_overlap: usize,
        threshold: f64,
        internal_preferred: f64,
    }
    let mut w = csv::Writer::from_path(dir.join("overlap.csv"))?;
    for a in &report.images {
        io::write_png_levels(&a.preference.to_plane::<f64>(), dir.join(format!("{}_preference.png", a.name)))
            .stage("write image")?;
        w.serialize(OverlapRow {
            image: &a.name,
            c_int: a.overlap.c_int,
            c_ext: a.overlap.c_ext,
            c_overlap: a.overlap.c_overlap,
            threshold: a.overlap.threshold,
            internal_preferred: a.preference.internal_fraction(),
        })?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct BinRow {
        density_lo: f64,
        density_hi: f64,
        count: usize,
        mass: f64,
    }
    let h = &report.histogram;
    let mut w = csv::Writer::from_path(dir.join("sparsity.csv"))?;
    for (((lo, hi), &count), &mass) in h.bin_edges().into_iter().zip(&h.counts).zip(&h.mass) {
        w.serialize(BinRow { density_lo: lo, density_hi: hi, count, mass })?;
    }
    w.flush()?;
    Ok(report)
}
