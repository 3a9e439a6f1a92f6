//! A reduced parameter sweep through the batch harness: trains a denoiser,
//! sweeps (sigma_max, steps, schedule mode) and prints the metrics table.

use pwshortcut::acoustics::{ImagingGrid, TransducerGeometry};
use pwshortcut::harness::{cmd_sweep, cmd_train, commands::load_denoiser, ExperimentConfig};

pub fn main() -> pwshortcut::Result<()> {
    let mut cfg = ExperimentConfig::with_seed(4);
    cfg.output_dir = std::env::temp_dir().join("pwshortcut-example-sweep");
    cfg.geometry = TransducerGeometry { element_count: 32, sample_count: 512, ..Default::default() };
    cfg.grid = ImagingGrid {
        axial_count: 48,
        lateral_count: 48,
        z_min: 4e-3,
        z_max: 8.7e-3,
        lateral_extent: 4.7e-3,
    };
    cfg.acquisition.angle_count = 9;
    cfg.acquisition.frames = 2;
    cfg.denoiser.training_phantoms = 4;
    cfg.denoiser.train.patch = 5;
    cfg.denoiser.train.patches_per_sigma = 20_000;
    cfg.sweep.sigma_max = vec![40.0, 80.0];
    cfg.sweep.steps = vec![5, 10, 20];

    cmd_train(&cfg)?;
    let rows = cmd_sweep(&cfg, &load_denoiser(&cfg)?)?;
    println!("{}", pwshortcut::harness::commands::METRICS_HEADER);
    for row in &rows {
        println!("{}", row.csv());
    }
    println!("written to {}", cfg.output_dir.join("metrics.csv").display());
    Ok(())
}
