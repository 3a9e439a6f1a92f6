//! Prints the Karras noise schedule and the Heun sampler's convergence on a
//! Gaussian prior, whose probability-flow ODE has a closed-form solution.

use pwshortcut::denoiser::GaussianPriorDenoiser;
use pwshortcut::diffusion::{forward_diffuse, karras_schedule, sample_full, DataConsistency};
use pwshortcut::Image;

pub fn main() -> pwshortcut::Result<()> {
    let s = karras_schedule(10, 0.002, 80.0, 7.0)?;
    let levels: Vec<String> = s.sigmas().iter().map(|v| format!("{v:.3}")).collect();
    println!("karras(10): [{}]", levels.join(", "));

    let (mu, std) = (0.3, 1.0);
    let d = GaussianPriorDenoiser::new(mu, std)?;
    let init = forward_diffuse(&Image::zeros(4, 4), 80.0, 1)?;
    println!("steps  calls  max endpoint error");
    for n in [5, 10, 20, 40, 80] {
        let schedule = karras_schedule(n, 0.002, 80.0, 7.0)?;
        let run = sample_full(&d, &schedule, (4, 4), &DataConsistency::none(), 1)?;
        let err = init
            .data()
            .iter()
            .zip(run.image.data())
            .map(|(x0, out)| {
                let exact = mu + (x0 - mu) * std / (std * std + 80.0f64 * 80.0).sqrt();
                (out - exact).abs()
            })
            .fold(0.0, f64::max);
        println!("{n:>5}  {:>5}  {err:.3e}", run.denoiser_calls());
    }
    Ok(())
}
