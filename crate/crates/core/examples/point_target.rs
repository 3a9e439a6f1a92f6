//! Images a single point scatterer with one plane wave and with a compounded
//! 9-angle acquisition, then reports the peak position and lateral -6 dB width.

use pwshortcut::acoustics::{bmode, compound, steering_angles, ImagingGrid, OperatorBuilder, TransducerGeometry};
use pwshortcut::io::save_pgm;
use pwshortcut::phantom::{render, PhantomSpec, PointTarget};
use pwshortcut::Image;

fn lateral_width_db(db: &Image, iz: usize) -> usize {
    (0..db.n_x()).filter(|&ix| db.get(iz, ix) >= -6.0).count()
}

pub fn main() -> pwshortcut::Result<()> {
    let geometry = TransducerGeometry::default();
    let grid = ImagingGrid {
        axial_count: 64,
        lateral_count: 64,
        z_min: 10.4e-3,
        z_max: 11.975e-3,
        lateral_extent: 1.575e-3,
    };
    let spec = PhantomSpec {
        background_std: 0.0,
        points: vec![PointTarget { x: 0.0, z: grid.z(32), amplitude: 1.0 }],
        ..Default::default()
    };
    let truth = render(&spec, &grid)?;
    let builder = OperatorBuilder::new(&geometry, &grid)?;
    let mut per_angle = Vec::new();
    for theta in steering_angles(9, 16f64.to_radians()) {
        let op = builder.build(theta)?;
        per_angle.push(op.adjoint(&op.forward(&truth)?)?);
    }
    let single = builder.build(0.0)?;
    let single = single.adjoint(&single.forward(&truth)?)?;
    let out = std::env::temp_dir().join("pwshortcut-examples");
    std::fs::create_dir_all(&out)?;
    for (name, img) in [("single", single), ("compound", compound(&per_angle)?)] {
        let db = bmode(&img, 40.0)?;
        let (peak, _) = db
            .data()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty image");
        let (iz, ix) = (peak / grid.lateral_count, peak % grid.lateral_count);
        println!(
            "{name:>8}: peak at pixel ({iz}, {ix}), -6 dB lateral width {} px",
            lateral_width_db(&db, iz)
        );
        save_pgm(out.join(format!("point_{name}.pgm")), &db, 40.0)?;
    }
    println!("B-mode images written to {}", out.display());
    Ok(())
}
