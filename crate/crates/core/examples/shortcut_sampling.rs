//! Shortcut sampling from a noised warm start versus full sampling from pure
//! noise, with an exact Gaussian-mixture denoiser.

use std::time::Instant;

use pwshortcut::denoiser::{GmmComponent, GmmPixelDenoiser};
use pwshortcut::diffusion::{karras_schedule, sample_full, sample_shortcut, DataConsistency, ShortcutConfig};
use pwshortcut::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn main() -> pwshortcut::Result<()> {
    let d = GmmPixelDenoiser::new(vec![
        GmmComponent { weight: 0.5, mean: -0.5, std: 0.2 },
        GmmComponent { weight: 0.5, mean: 0.5, std: 0.2 },
    ])?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth: Vec<f64> = (0..64 * 64)
        .map(|_| if rng.random::<bool>() { 0.5 } else { -0.5 } + 0.2 * (rng.random::<f64>() - 0.5))
        .collect();
    let truth = Image::from_vec(64, 64, truth)?;
    let dc = DataConsistency::none();

    let start = Instant::now();
    let full = sample_full(&d, &karras_schedule(50, 0.002, 80.0, 7.0)?, truth.shape(), &dc, 1)?;
    let full_time = start.elapsed();
    println!(
        "full     N=50: {} calls, MSE {:.4}, {:?}",
        full.denoiser_calls(),
        full.image.mean_squared_distance(&truth)?,
        full_time
    );
    for steps in [5, 10, 20] {
        let start = Instant::now();
        let run = sample_shortcut(&d, &truth, &ShortcutConfig::rebuild(5.0, steps), &dc, 1)?;
        println!(
            "shortcut s={steps:<2}: {} calls, MSE {:.4}, {:?}",
            run.denoiser_calls(),
            run.image.mean_squared_distance(&truth)?,
            start.elapsed()
        );
    }
    let run = sample_shortcut(&d, &truth, &ShortcutConfig::truncate(5.0, 60.0, 50, 20), &dc, 1)?;
    println!(
        "truncate s=20 of N=50 at sigma_max 60: starts at sigma {:.3}",
        run.initial_sigma
    );
    Ok(())
}
