use proptest::prelude::*;
use pwshortcut::acoustics::{
    add_channel_noise, bmode, build_operator, compound, envelope, log_compress, ImagingGrid,
    MeasurementOperator, OperatorBuilder, TransducerGeometry,
};
use pwshortcut::{Image, RfFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::brute_force_dense;

fn tiny() -> (TransducerGeometry, ImagingGrid) {
    let geometry = TransducerGeometry {
        element_count: 4,
        sample_count: 64,
        ..Default::default()
    };
    // Deep corner pixels fall past the last sample for the outer elements.
    let grid = ImagingGrid {
        axial_count: 8,
        lateral_count: 8,
        z_min: 0.5e-3,
        z_max: 1.5e-3,
        lateral_extent: 1.0e-3,
    };
    (geometry, grid)
}

fn random_image(rng: &mut ChaCha8Rng, n_z: usize, n_x: usize) -> Image {
    Image::from_vec(n_z, n_x, (0..n_z * n_x).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn random_frame(rng: &mut ChaCha8Rng, op: &MeasurementOperator) -> RfFrame {
    let g = op.geometry();
    let n = g.sample_count * g.element_count;
    RfFrame::from_vec(
        g.sample_count,
        g.element_count,
        op.steering_angle(),
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

#[test]
fn sparse_operator_matches_brute_force_dense_matrix() {
    let (g, grid) = tiny();
    let theta = 0.1;
    let op = build_operator(&g, &grid, theta).unwrap();
    let dense = brute_force_dense(&g, &grid, theta);
    let stored = op.to_dense();
    assert_eq!(dense.len(), stored.len());
    for (a, b) in stored.iter().zip(&dense) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
    // Some pairs must have been dropped for the check above to cover it.
    assert!(op.nnz() < 2 * g.element_count * grid.pixel_count());

    let rows = g.sample_count * g.element_count;
    let cols = grid.pixel_count();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_image(&mut rng, 8, 8);
    let hx: Vec<f64> = (0..rows)
        .map(|i| (0..cols).map(|j| dense[i * cols + j] * x.data()[j]).sum())
        .collect();
    assert!(rel_err(op.forward(&x).unwrap().data(), &hx) <= 1e-12);

    let y = random_frame(&mut rng, &op);
    let hty: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| dense[i * cols + j] * y.data()[i]).sum())
        .collect();
    assert!(rel_err(op.adjoint(&y).unwrap().data(), &hty) <= 1e-12);
}

#[test]
fn on_axis_delay_is_two_way_depth() {
    let g = TransducerGeometry {
        element_count: 5,
        ..Default::default()
    };
    let grid = ImagingGrid {
        axial_count: 3,
        lateral_count: 3,
        z_min: 8e-3,
        z_max: 9e-3,
        lateral_extent: 1e-3,
    };
    let op = build_operator(&g, &grid, 0.0).unwrap();
    // Pixel (1, 1) sits on the axis; element 2 sits at lateral 0.
    let z = grid.z(1);
    let pos = 2.0 * z * g.sample_rate / g.wave_speed;
    let taps: Vec<_> = op.column(4).filter(|&(_, e, _)| e == 2).collect();
    assert_eq!(taps.len(), 2);
    let (k0, _, w0) = taps[0];
    let (k1, _, w1) = taps[1];
    assert_eq!(k0, pos.floor() as usize);
    assert_eq!(k1, k0 + 1);
    assert!((w1 - (pos - pos.floor())).abs() < 1e-9);
    assert!((w0 + w1 - 1.0).abs() < 1e-15);
}

#[test]
fn symmetric_elements_see_identical_taps() {
    let g = TransducerGeometry {
        element_count: 6,
        ..Default::default()
    };
    let grid = ImagingGrid {
        axial_count: 4,
        lateral_count: 5,
        z_min: 5e-3,
        z_max: 7e-3,
        lateral_extent: 2e-3,
    };
    let op = build_operator(&g, &grid, 0.0).unwrap();
    for iz in 0..4 {
        let p = iz * 5 + 2;
        let col: Vec<_> = op.column(p).collect();
        for e in 0..3 {
            let left: Vec<_> = col.iter().filter(|t| t.1 == e).map(|t| (t.0, t.2)).collect();
            let right: Vec<_> = col.iter().filter(|t| t.1 == 5 - e).map(|t| (t.0, t.2)).collect();
            assert_eq!(left.len(), right.len());
            for (a, b) in left.iter().zip(&right) {
                assert_eq!(a.0, b.0);
                assert!((a.1 - b.1).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn unit_scatterer_lights_only_predicted_samples() {
    let g = TransducerGeometry {
        element_count: 16,
        sample_count: 512,
        ..Default::default()
    };
    let grid = ImagingGrid {
        axial_count: 16,
        lateral_count: 16,
        z_min: 4e-3,
        z_max: 7e-3,
        lateral_extent: 3e-3,
    };
    let op = build_operator(&g, &grid, 0.0).unwrap();
    let (iz, ix) = (9, 5);
    let mut x = Image::zeros(16, 16);
    x.set(iz, ix, 1.0);
    let y = op.forward(&x).unwrap();
    let (px, pz) = (grid.x(ix), grid.z(iz));
    for (e, x_e) in g.element_positions().into_iter().enumerate() {
        let pos = (pz + (pz * pz + (px - x_e).powi(2)).sqrt()) / g.wave_speed * g.sample_rate;
        let k0 = pos.floor() as usize;
        let frac = pos - pos.floor();
        for k in 0..g.sample_count {
            let v = y.data()[k * g.element_count + e];
            let expect = if k == k0 {
                1.0 - frac
            } else if k == k0 + 1 {
                frac
            } else {
                0.0
            };
            assert!((v - expect).abs() < 1e-9, "element {e} sample {k}: {v} vs {expect}");
        }
    }
}

#[test]
fn point_scatterer_peaks_at_its_pixel() {
    let g = TransducerGeometry {
        element_count: 32,
        sample_count: 1024,
        ..Default::default()
    };
    let grid = ImagingGrid {
        axial_count: 32,
        lateral_count: 32,
        ..Default::default()
    };
    let builder = OperatorBuilder::new(&g, &grid).unwrap();
    for (theta, iz, ix) in [(0.0, 10, 12), (0.2, 20, 25), (-0.15, 5, 3)] {
        let op = builder.build(theta).unwrap();
        let mut x = Image::zeros(32, 32);
        x.set(iz, ix, 1.0);
        let back = op.adjoint(&op.forward(&x).unwrap()).unwrap();
        let argmax = back
            .data()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, iz * 32 + ix, "theta {theta}");
    }
}

/// Pixels of the lateral row through the envelope peak that stay within
/// −6 dB of it, walking outwards contiguously.
fn lateral_mainlobe(img: &Image) -> usize {
    let env = envelope(img).unwrap();
    let (peak, _) = env
        .data()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let (iz, ix) = (peak / env.n_x(), peak % env.n_x());
    let half = env.get(iz, ix) / 2.0;
    let mut width = 1;
    let mut j = ix;
    while j > 0 && env.get(iz, j - 1) >= half {
        width += 1;
        j -= 1;
    }
    let mut j = ix;
    while j + 1 < env.n_x() && env.get(iz, j + 1) >= half {
        width += 1;
        j += 1;
    }
    width
}

#[test]
fn compounding_does_not_widen_the_mainlobe() {
    let g = TransducerGeometry::default();
    let grid = ImagingGrid {
        axial_count: 64,
        lateral_count: 64,
        ..Default::default()
    };
    let builder = OperatorBuilder::new(&g, &grid).unwrap();
    let mut x = Image::zeros(64, 64);
    x.set(32, 30, 1.0);
    let angles = pwshortcut::acoustics::steering_angles(9, 32f64.to_radians());
    let images = pwshortcut::acoustics::beamform_angles(&builder, &x, &angles, 0.0, 0).unwrap();
    let single = builder.build(0.0).unwrap();
    let single = single.adjoint(&single.forward(&x).unwrap()).unwrap();
    let compounded = compound(&images).unwrap();
    assert!(lateral_mainlobe(&compounded) <= lateral_mainlobe(&single));
}

#[test]
fn compound_matches_elementwise_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let imgs: Vec<Image> = (0..3).map(|_| random_image(&mut rng, 4, 5)).collect();
    let c = compound(&imgs).unwrap();
    for iz in 0..4 {
        for ix in 0..5 {
            let mut sum = 0.0;
            for img in &imgs {
                sum += img.get(iz, ix);
            }
            assert!((c.get(iz, ix) - sum / 3.0).abs() < 1e-15);
        }
    }
}

#[test]
fn unit_channel_noise_statistics() {
    let y = RfFrame::zeros(1000, 1000, 0.0);
    let noisy = add_channel_noise(&y, 1.0, 2024).unwrap();
    let n = noisy.data().len() as f64;
    let mean = noisy.data().iter().sum::<f64>() / n;
    let std = (noisy.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() <= 0.01, "mean {mean}");
    assert!((0.99..=1.01).contains(&std), "std {std}");
}

#[test]
fn dimension_mismatch_is_an_error() {
    let (g, grid) = tiny();
    let op = build_operator(&g, &grid, 0.0).unwrap();
    assert!(op.forward(&Image::zeros(7, 8)).is_err());
    assert!(op.adjoint(&RfFrame::zeros(63, 4, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjoint_identity(theta in -0.4f64..0.4, seed in any::<u64>()) {
        let (g, grid) = tiny();
        let op = build_operator(&g, &grid, theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_image(&mut rng, 8, 8);
        let y = random_frame(&mut rng, &op);
        let hx = op.forward(&x).unwrap();
        let lhs = hx.dot(&y).unwrap();
        let rhs = x.dot(&op.adjoint(&y).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * hx.norm() * y.norm());
    }

    #[test]
    fn forward_and_adjoint_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let (g, grid) = tiny();
        let op = build_operator(&g, &grid, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v) = (random_image(&mut rng, 8, 8), random_image(&mut rng, 8, 8));
        let combo = u.scaled(a).axpy(b, &v).unwrap();
        let lhs = op.forward(&combo).unwrap();
        let (fu, fv) = (op.forward(&u).unwrap(), op.forward(&v).unwrap());
        let rhs: Vec<f64> = fu.data().iter().zip(fv.data()).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(rel_err(lhs.data(), &rhs) <= 1e-12 || lhs.norm() < 1e-12);

        let (y1, y2) = (random_frame(&mut rng, &op), random_frame(&mut rng, &op));
        let mut y = y1.clone();
        y.data_mut().iter_mut().zip(y2.data()).for_each(|(p, q)| *p = a * *p + b * q);
        let lhs = op.adjoint(&y).unwrap();
        let (a1, a2) = (op.adjoint(&y1).unwrap(), op.adjoint(&y2).unwrap());
        let rhs: Vec<f64> = a1.data().iter().zip(a2.data()).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(rel_err(lhs.data(), &rhs) <= 1e-12 || lhs.norm() < 1e-12);
    }

    #[test]
    fn display_chain_ignores_sign(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = random_image(&mut rng, 16, 4);
        let neg = img.scaled(-1.0);
        prop_assert_eq!(envelope(&img).unwrap(), envelope(&neg).unwrap());
        prop_assert_eq!(bmode(&img, 60.0).unwrap(), bmode(&neg, 60.0).unwrap());
        let db = log_compress(&envelope(&img).unwrap(), 40.0);
        prop_assert!(db.data().iter().all(|&v| (-40.0..=0.0).contains(&v)));
    }
}
