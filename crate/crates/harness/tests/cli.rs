mod common;

use std::path::Path;
use std::process::Command;

fn lrsr(args: &[&str], config: &Path) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_lrsr"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn train_then_sr_and_bench() {
    let root = tempfile::tempdir().unwrap();
    let cfg = common::tiny_config(root.path());
    let config = root.path().join("cfg.toml");
    std::fs::write(&config, cfg.to_toml().unwrap()).unwrap();
    let out = root.path().join("out");
    let out_s = out.to_str().unwrap();

    lrsr(&["--out", out_s, "train", "--groups", "1", "--atoms", "12", "--epochs", "2"], &config);
    let model = out.join("model");
    assert!(model.join("pipeline.bin").exists());
    assert!(model.join("dict_01.bin").exists());
    assert!(std::fs::read_to_string(out.join("run.log")).unwrap().contains("atoms = 12"));

    let input = root.path().join("test/img0.png");
    let stdout = lrsr(
        &["--out", out_s, "sr", input.to_str().unwrap(), "--model", model.to_str().unwrap()],
        &config,
    )
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("img0_sr.png"));
    let sr = image_dims(&out.join("img0_sr.png"));
    assert_eq!(sr, (80, 80));
    let manifest = std::fs::read_to_string(out.join("img0_bank/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 8);

    let bench_out = root.path().join("bench");
    lrsr(
        &[
            "--out",
            bench_out.to_str().unwrap(),
            "--seed",
            "3",
            "bench",
            "--model",
            model.to_str().unwrap(),
        ],
        &config,
    );
    let report = std::fs::read_to_string(bench_out.join("report.csv")).unwrap();
    assert!(report.starts_with("image,method,psnr_db,ssim,wall_ms\n"));
    assert!(report.contains("\nmean,fused,"));
    assert!(std::fs::read_to_string(bench_out.join("run.log")).unwrap().contains("seed = 3"));
}

#[test]
fn odd_curve_size_fails() {
    let root = tempfile::tempdir().unwrap();
    let cfg = common::tiny_config(root.path());
    let config = root.path().join("cfg.toml");
    std::fs::write(&config, cfg.to_toml().unwrap()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_lrsr"))
        .args(["--config", config.to_str().unwrap(), "quantity-curve", "--j", "3"])
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("must be positive and even"));
}

#[test]
fn bad_config_reported() {
    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("cfg.toml");
    std::fs::write(&config, "scale = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lrsr"))
        .args(["--config", config.to_str().unwrap(), "bench"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scale"));
}

fn image_dims(path: &Path) -> (usize, usize) {
    lrsr_core::imaging::io::read_png::<f64>(path).unwrap().dims()
}
