//! End-to-end reconstruction of one cyst frame: single-PW DAS, compounded
//! DAS, full diffusion sampling and the shortcut sampler.

use pwshortcut::acoustics::{ImagingGrid, TransducerGeometry};
use pwshortcut::denoiser::TrainConfig;
use pwshortcut::harness::pipeline::{acquire, reconstruct, train, Method, Scene};
use pwshortcut::harness::SamplerSettings;
use pwshortcut::metrics::bmode_contrast;
use pwshortcut::phantom::{roi_masks, PhantomSpec};

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
    let phantom = PhantomSpec::default_cyst(&grid, 0);
    let config = TrainConfig { patch: 5, patches_per_sigma: 20_000, ..Default::default() };
    let (denoiser, _) = train(&scene, &phantom, 0.0, 4, &config, 1)?;

    let masks = roi_masks(&phantom, &grid, grid.dx())?;
    let acq = acquire(&scene, &phantom.with_seed(99), 0.0, 99)?;
    let settings = SamplerSettings::default();
    for method in [Method::DasSingle, Method::DasCompound, Method::EdmFull, Method::EdmShortcut] {
        let rec = reconstruct(method, &scene, &acq, Some(&denoiser), &settings, 5)?;
        let c = bmode_contrast(&rec.image, &masks, 60.0, 256)?;
        let calls = rec.run.as_ref().map_or(0, |r| r.denoiser_calls());
        println!(
            "{:>12}: gCNR {:.3}, CNR {:6.2} dB, {calls:>2} denoiser calls, {:?}",
            method.name(),
            c.gcnr,
            c.cnr_db,
            rec.wall
        );
    }
    Ok(())
}
