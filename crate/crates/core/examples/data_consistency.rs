//! Repeated non-squared l2 data-consistency steps pulling an image towards
//! agreement with measured channel data.

use pwshortcut::acoustics::{build_operator, ImagingGrid, TransducerGeometry};
use pwshortcut::diffusion::{DataConsistency, Measurement};
use pwshortcut::phantom::{render, PhantomSpec};
use pwshortcut::Image;

pub fn main() -> pwshortcut::Result<()> {
    let geometry = TransducerGeometry {
        element_count: 32,
        sample_count: 512,
        ..Default::default()
    };
    let grid = ImagingGrid {
        axial_count: 32,
        lateral_count: 32,
        z_min: 4e-3,
        z_max: 8e-3,
        lateral_extent: 4e-3,
    };
    let op = build_operator(&geometry, &grid, 0.0)?;
    let truth = render(&PhantomSpec { seed: 2, ..Default::default() }, &grid)?;
    let y = op.forward(&truth)?;
    // Steps have fixed length λ·a along the normalised gradient.
    println!("lambda  |Hx - y| after 0, 10, 20, 40 steps");
    for lambda in [2.0, 0.5, 0.1] {
        let dc = DataConsistency::new(lambda, vec![Measurement { operator: &op, frame: &y }])?;
        let mut x = Image::zeros(32, 32);
        let mut trace = Vec::new();
        for i in 0..=40 {
            if [0, 10, 20, 40].contains(&i) {
                trace.push(format!("{:.3e}", dc.residual_norm(&x)?));
            }
            x = dc.apply(&x)?.0;
        }
        println!("{lambda:>6}  {}", trace.join("  "));
    }
    Ok(())
}
