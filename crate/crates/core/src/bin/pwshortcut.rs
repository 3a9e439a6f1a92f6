use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pwshortcut::harness::{self, BeamformMode, ExperimentConfig, Method};

#[derive(Parser)]
#[command(version, about = "Plane-wave ultrasound reconstruction by shortcut diffusion sampling")]
struct Cli {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render phantoms and write per-angle channel data.
    Simulate,
    /// Delay-and-sum images from simulated channel data.
    Beamform {
        #[arg(long, default_value = "compound")]
        mode: BeamformMode,
    },
    /// Fit the patch denoiser on compounded phantom images.
    Train,
    /// Reconstruct every simulated frame and append metric rows.
    Reconstruct {
        /// das, das-compound, edm-full or edm-shortcut.
        #[arg(long, default_value = "edm-shortcut")]
        method: Method,
        /// Shortcut steps s.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        sigma_k: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Shortcut reconstructions over the configured (sigma_max, steps) grid.
    Sweep {
        /// Comma-separated sigma_max values.
        #[arg(long, value_delimiter = ',')]
        sigma_max: Option<Vec<f64>>,
        /// Comma-separated step counts.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
    },
    /// CNR and gCNR of PWIMG images against the configured cyst.
    Metrics { images: Vec<PathBuf> },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::with_seed(0),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    let threads = cfg.threads;
    harness::with_threads(threads, move || run(cli.command, cfg))?
}

fn run(command: Command, mut cfg: ExperimentConfig) -> anyhow::Result<()> {
    match command {
        Command::Simulate => {
            let files = harness::cmd_simulate(&cfg)?;
            println!("wrote {} files under {}", files.len(), cfg.output_dir.display());
        }
        Command::Beamform { mode } => {
            for path in harness::cmd_beamform(&cfg, mode)? {
                println!("{}", path.display());
            }
        }
        Command::Train => {
            let report = harness::cmd_train(&cfg)?;
            println!("sigma,mse,identity_mse");
            for fit in report.fits {
                println!("{:.4},{:.6},{:.6}", fit.sigma, fit.mse, fit.identity_mse);
            }
        }
        Command::Reconstruct {
            method,
            steps,
            sigma_k,
            lambda,
        } => {
            if let Some(s) = steps {
                cfg.sampler.steps = s;
            }
            if let Some(s) = sigma_k {
                cfg.sampler.sigma_k = s;
            }
            if let Some(l) = lambda {
                cfg.sampler.lambda = l;
            }
            print_rows(&harness::cmd_reconstruct(&cfg, method)?);
        }
        Command::Sweep { sigma_max, steps } => {
            if let Some(v) = sigma_max {
                cfg.sweep.sigma_max = v;
            }
            if let Some(v) = steps {
                cfg.sweep.steps = v;
            }
            let denoiser = harness::commands::load_denoiser(&cfg)?;
            let rows = harness::cmd_sweep(&cfg, &denoiser)?;
            println!(
                "{} rows written to {}",
                rows.len(),
                cfg.output_dir.join("metrics.csv").display()
            );
        }
        Command::Metrics { images } => {
            println!("image,cnr_db,gcnr");
            for (path, c) in harness::cmd_metrics(&cfg, &images).context("computing metrics")? {
                println!("{},{:.4},{:.4}", path.display(), c.cnr_db, c.gcnr);
            }
        }
    }
    Ok(())
}

fn print_rows(rows: &[harness::MetricsRow]) {
    println!("{}", harness::commands::METRICS_HEADER);
    for row in rows {
        println!("{}", row.csv());
    }
}
