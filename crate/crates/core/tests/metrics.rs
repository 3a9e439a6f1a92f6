use proptest::prelude::*;
use pwshortcut::metrics::{cnr_db, gcnr, RoiSamples};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erf;

fn gaussian(n: usize, mean: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| mean + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect()
}

#[test]
fn gcnr_of_unit_gaussians_two_apart() {
    // Equal-variance Gaussians d apart overlap in 2Φ(−d/2); for d = 2 the
    // gCNR is erf(1/√2).
    let expect = erf(1.0 / 2f64.sqrt());
    assert!((expect - 0.6827).abs() < 1e-4);
    let r = RoiSamples::new(gaussian(100_000, 0.0, 1), gaussian(100_000, 2.0, 2)).unwrap();
    let g = gcnr(&r, 256).unwrap();
    assert!((g - expect).abs() <= 0.01, "{g} vs {expect}");
}

#[test]
fn cnr_of_unit_gaussians_two_apart() {
    let r = RoiSamples::new(gaussian(100_000, 0.0, 3), gaussian(100_000, 2.0, 4)).unwrap();
    let expect = 20.0 * (2.0 / 2f64.sqrt()).log10();
    assert!((cnr_db(&r).unwrap() - expect).abs() < 0.05);
}

/// Samples on a dyadic lattice, so scaling by powers of two and shifting by
/// integers is exact in floating point.
fn dyadic(v: Vec<i32>) -> Vec<f64> {
    v.into_iter().map(|k| k as f64 / 16.0).collect()
}

proptest! {
    #[test]
    fn gcnr_is_a_probability(
        a in prop::collection::vec(-1e3f64..1e3, 1..200),
        b in prop::collection::vec(-1e3f64..1e3, 1..200),
        bins in 2usize..512,
    ) {
        let g = gcnr(&RoiSamples::new(a, b).unwrap(), bins).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn gcnr_is_exactly_affine_invariant(
        a in prop::collection::vec(-400i32..400, 2..100),
        b in prop::collection::vec(-400i32..400, 2..100),
        shift in -50i32..50,
        power in -3i32..4,
        bins in 2usize..300,
    ) {
        let scale = 2f64.powi(power);
        let map = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| scale * x + shift as f64).collect() };
        let (a, b) = (dyadic(a), dyadic(b));
        let r = RoiSamples::new(a.clone(), b.clone()).unwrap();
        let t = RoiSamples::new(map(&a), map(&b)).unwrap();
        prop_assert_eq!(gcnr(&r, bins).unwrap(), gcnr(&t, bins).unwrap());
    }

    #[test]
    fn cnr_is_affine_invariant(
        a in prop::collection::vec(-1e2f64..1e2, 2..100),
        b in prop::collection::vec(-1e2f64..1e2, 2..100),
        scale in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        shift in -1e2f64..1e2,
    ) {
        let r = RoiSamples::new(a.clone(), b.clone()).unwrap();
        let c = cnr_db(&r).unwrap();
        prop_assume!(c.is_finite() && c > -200.0);
        let map = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| scale * x + shift).collect() };
        let t = RoiSamples::new(map(&a), map(&b)).unwrap();
        prop_assert!((cnr_db(&t).unwrap() - c).abs() < 1e-6);
    }

    #[test]
    fn metrics_are_symmetric_in_the_regions(
        a in prop::collection::vec(-10f64..10.0, 2..50),
        b in prop::collection::vec(-10f64..10.0, 2..50),
    ) {
        let r = RoiSamples::new(a, b).unwrap();
        prop_assert_eq!(gcnr(&r, 64).unwrap(), gcnr(&r.swapped(), 64).unwrap());
        prop_assert_eq!(cnr_db(&r).unwrap(), cnr_db(&r.swapped()).unwrap());
    }
}
