use pwshortcut::acoustics::{ImagingGrid, TransducerGeometry};

/// Dense `(r·L) × l` matrix evaluated entry by entry from the delay formula:
/// the linear-interpolation weight of sample `k` is the hat function
/// `max(0, 1 − |τ·fs − k|)`, and the whole (pixel, element) pair is absent
/// when either tap would leave `[0, r)`.
pub fn brute_force_dense(g: &TransducerGeometry, grid: &ImagingGrid, theta: f64) -> Vec<f64> {
    let l = g.element_count;
    let r = g.sample_count;
    let cols = grid.pixel_count();
    let pitch_center = (l as f64 - 1.0) / 2.0;
    let mut h = vec![0.0; r * l * cols];
    for iz in 0..grid.axial_count {
        let z = grid.z_min + iz as f64 * (grid.z_max - grid.z_min) / (grid.axial_count - 1) as f64;
        for ix in 0..grid.lateral_count {
            let x = -grid.lateral_extent / 2.0
                + ix as f64 * grid.lateral_extent / (grid.lateral_count - 1) as f64;
            let p = iz * grid.lateral_count + ix;
            for e in 0..l {
                let x_e = (e as f64 - pitch_center) * g.pitch;
                let tau = (z * theta.cos() + x * theta.sin()) / g.wave_speed
                    + ((z * z) + (x - x_e) * (x - x_e)).sqrt() / g.wave_speed;
                let pos = tau * g.sample_rate;
                if pos < 0.0 || pos >= (r - 1) as f64 {
                    continue;
                }
                for k in 0..r {
                    let w = (1.0 - (pos - k as f64).abs()).max(0.0);
                    h[(k * l + e) * cols + p] += w;
                }
            }
        }
    }
    h
}
