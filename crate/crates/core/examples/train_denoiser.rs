//! Trains the linear patch denoiser on compounded phantom images and saves it
//! in PWDN format.

use pwshortcut::acoustics::{ImagingGrid, TransducerGeometry};
use pwshortcut::denoiser::{Denoiser, LinearPatchDenoiser, TrainConfig};
use pwshortcut::harness::pipeline::{train, Scene};
use pwshortcut::phantom::PhantomSpec;

pub fn main() -> pwshortcut::Result<()> {
    let geometry = TransducerGeometry { element_count: 32, sample_count: 512, ..Default::default() };
    let grid = ImagingGrid {
        axial_count: 48,
        lateral_count: 48,
        z_min: 4e-3,
        z_max: 8.7e-3,
        lateral_extent: 4.7e-3,
    };
    let scene = Scene::new(&geometry, &grid, 9, 32f64.to_radians())?;
    let config = TrainConfig {
        patch: 5,
        patches_per_sigma: 20_000,
        ..Default::default()
    };
    let (model, report) = train(&scene, &PhantomSpec::default_cyst(&grid, 0), 0.0, 4, &config, 11)?;
    println!("   sigma        mse  identity");
    for fit in &report.fits {
        println!("{:8.3}  {:9.3e}  {:8.3e}", fit.sigma, fit.mse, fit.identity_mse);
    }
    let path = std::env::temp_dir().join("pwshortcut-example.pwdn");
    model.save(&path)?;
    let loaded = LinearPatchDenoiser::load(&path)?;
    let probe = pwshortcut::Image::filled(8, 8, 0.25);
    assert_eq!(loaded.denoise(&probe, 1.0)?, model.denoise(&probe, 1.0)?);
    println!("saved {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    Ok(())
}
