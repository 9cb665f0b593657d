use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lrsr_harness::{commands, load_or_train_model, ExperimentConfig};

#[derive(Parser)]
#[command(name = "lrsr", version, about = "Low-rank fusion of internal and external super-resolution banks")]
struct Cli {
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Data {
    /// Directory of HR test PNGs.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Trained dictionaries; trained on the fly from the configured corpus when absent.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train coupled dictionaries on a corpus of HR images.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Number of dictionary pairs.
        #[arg(long)]
        groups: Option<usize>,
        /// Atoms per dictionary.
        #[arg(long)]
        atoms: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Super-resolve one PNG.
    Sr {
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Score bicubic, every bank member and the fusions on a test set.
    Bench(Data),
    /// Benchmark repeated over LR noise levels.
    NoiseSweep {
        #[command(flatten)]
        data: Data,
        /// Comma-separated sigmas in gray levels.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
    },
    /// Fused score against the number of bank members.
    QuantityCurve {
        #[command(flatten)]
        data: Data,
        /// Comma-separated even bank sizes.
        #[arg(long = "j", value_delimiter = ',')]
        j_values: Option<Vec<usize>>,
    },
    /// Preference maps, error overlap counts and sparsity histogram.
    Analyze(Data),
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    let apply_data = |cfg: &mut ExperimentConfig, d: &Data| {
        if let Some(p) = &d.data {
            cfg.test_dir = p.clone();
        }
        if let Some(m) = &d.model {
            cfg.model_dir = Some(m.clone());
        }
    };
    match &cli.command {
        Command::Train { corpus, groups, atoms, epochs } => {
            if let Some(c) = corpus {
                cfg.train_dir = c.clone();
            }
            if let Some(g) = groups {
                cfg.external.groups = *g;
            }
            if let Some(a) = atoms {
                cfg.external.train.atoms = *a;
            }
            if let Some(e) = epochs {
                cfg.external.train.epochs = *e;
            }
        }
        Command::Sr { model, .. } => {
            if let Some(m) = model {
                cfg.model_dir = Some(m.clone());
            }
        }
        Command::Bench(d) | Command::Analyze(d) => apply_data(&mut cfg, d),
        Command::NoiseSweep { data, sigmas } => {
            apply_data(&mut cfg, data);
            if let Some(s) = sigmas {
                cfg.noise.sigmas = s.clone();
            }
        }
        Command::QuantityCurve { data, j_values } => {
            apply_data(&mut cfg, data);
            if let Some(j) = j_values {
                cfg.curve.j_values = j.clone();
            }
        }
    }
    let cfg = cfg.resolved()?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global()?;
    }

    match &cli.command {
        Command::Train { .. } => {
            let (_, dir) = commands::train(&cfg)?;
            println!("dictionaries written to {}", dir.display());
        }
        Command::Sr { input, .. } => {
            let model = load_or_train_model(&cfg)?;
            let path = commands::super_resolve(&cfg, &model, input)?;
            println!("{}", path.display());
        }
        Command::Bench(_) => {
            let model = load_or_train_model(&cfg)?;
            let report = commands::bench(&cfg, &model)?;
            for r in report.rows.iter().filter(|r| r.image == lrsr_harness::report::MEAN_ROW) {
                if !r.method.starts_with("internal_k") && !r.method.starts_with("external_d") {
                    println!("{:<16} {:>8.3} dB  {:.4}", r.method, r.psnr_db, r.ssim);
                }
            }
        }
        Command::NoiseSweep { .. } => {
            let model = load_or_train_model(&cfg)?;
            for (sigma, report) in commands::noise_sweep(&cfg, &model)? {
                if let Some(r) = report.get(lrsr_harness::report::MEAN_ROW, "fused") {
                    println!("sigma {sigma:>5.1}: fused {:.3} dB", r.psnr_db);
                }
            }
        }
        Command::QuantityCurve { .. } => {
            let model = load_or_train_model(&cfg)?;
            for p in commands::quantity_curve(&cfg, &model)? {
                println!("J = {:>3}: {:.3} dB  {:.4}", p.j, p.psnr_db, p.ssim);
            }
        }
        Command::Analyze(_) => {
            let model = load_or_train_model(&cfg)?;
            let report = commands::analyze(&cfg, &model)?;
            for a in &report.images {
                println!(
                    "{}: C_int {} C_ext {} C_overlap {}",
                    a.name, a.overlap.c_int, a.overlap.c_ext, a.overlap.c_overlap
                );
            }
        }
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}
