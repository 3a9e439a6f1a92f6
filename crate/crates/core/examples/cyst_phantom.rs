//! Simulates the anechoic cyst phantom and compares single plane-wave DAS
//! against compounding by CNR and gCNR.

use pwshortcut::acoustics::{ImagingGrid, TransducerGeometry};
use pwshortcut::harness::pipeline::{acquire, Scene};
use pwshortcut::metrics::bmode_contrast;
use pwshortcut::phantom::{roi_masks, PhantomSpec};

pub fn main() -> pwshortcut::Result<()> {
    let geometry = TransducerGeometry::default();
    let grid = ImagingGrid {
        axial_count: 80,
        lateral_count: 80,
        z_min: 8e-3,
        z_max: 16e-3,
        lateral_extent: 8e-3,
    };
    let scene = Scene::new(&geometry, &grid, 15, 32f64.to_radians())?;
    let spec = PhantomSpec::default_cyst(&grid, 7);
    let masks = roi_masks(&spec, &grid, grid.dx())?;
    let acq = acquire(&scene, &spec, 0.0, 7)?;
    let single = &acq.das[scene.single_index()];
    for (name, img) in [("single PW", single.clone()), ("15-PW compound", acq.compound()?)] {
        let c = bmode_contrast(&img, &masks, 60.0, 256)?;
        println!("{name:>15}: CNR {:6.2} dB, gCNR {:.3}", c.cnr_db, c.gcnr);
    }
    Ok(())
}
