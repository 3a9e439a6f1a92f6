//! CNR and gCNR on synthetic region samples.

use pwshortcut::metrics::{cnr_db, gcnr, RoiSamples};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn main() -> pwshortcut::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!("separation  CNR (dB)  gCNR");
    for d in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let inside: Vec<f64> = Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(50_000).collect();
        let outside: Vec<f64> = Normal::new(d, 1.0).unwrap().sample_iter(&mut rng).take(50_000).collect();
        let r = RoiSamples::new(inside, outside)?;
        println!("{d:>10.1}  {:>8.2}  {:.3}", cnr_db(&r)?, gcnr(&r, 256)?);
    }
    Ok(())
}
