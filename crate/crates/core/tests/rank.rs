use deepc_core::hankel::build_mosaic_hankel;
use deepc_core::linalg::{numeric_rank, spectral_norm, thin_svd};
use deepc_core::lti::LtiSystem;
use deepc_core::rank::{robustified_rank, singular_spectrum, threshold_window};
use deepc_core::trajectory::{Dataset, Trajectory};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..=1.0))
}

/// Square roots of the eigenvalues of `M M'`, descending.
fn eigen_oracle(m: &DMatrix<f64>) -> Vec<f64> {
    let gram = m * m.transpose();
    let mut ev: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.truncate(m.nrows().min(m.ncols()));
    ev
}

#[test]
fn spectrum_matches_eigen_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let m = random_matrix(&mut rng, 4, 6);
        let s = singular_spectrum(&m);
        for (a, b) in s.values().iter().zip(eigen_oracle(&m)) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

/// Noise-free and noisy stacked data matrices from one random system.
fn noisy_lti_data(seed: u64, noise: f64) -> (DMatrix<f64>, DMatrix<f64>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, p, l) = (2, 1, 1, 5);
    let sys = LtiSystem::random_stable(&mut rng, n, m, p);
    let u = DMatrix::from_fn(m, 60, |_, _| rng.random_range(-0.25..=0.25));
    let y = sys.simulate(&DVector::zeros(n), &u).unwrap();
    let clean = Trajectory::new(u.clone(), y.clone()).unwrap();
    let y_noisy = y.map(|v| v + rng.random_range(-noise..=noise));
    let noisy = Trajectory::new(u, y_noisy).unwrap();
    let build = |t: Trajectory| build_mosaic_hankel(&Dataset::new(vec![t], l).unwrap()).unwrap().entries().clone();
    (build(clean), build(noisy), n + m * l)
}

#[test]
fn noisy_rank_recovered_inside_window_with_margin() {
    let mut checked = 0;
    for seed in 0..40 {
        let (clean, noisy, r) = noisy_lti_data(seed, 1e-3);
        let e_norm = spectral_norm(&(&noisy - &clean));
        let w = threshold_window(&clean, r).unwrap().expect("noise-free gap");
        // Weyl: thresholds at least ||E|| away from both window ends are safe.
        let (lo, hi) = (w.lower + e_norm, w.upper - e_norm);
        if lo >= hi {
            continue;
        }
        checked += 1;
        for t in [0.0, 0.25, 0.5, 0.75, 0.999] {
            let rho = lo + t * (hi - lo);
            assert_eq!(robustified_rank(&noisy, rho), r, "seed {seed} rho {rho}");
        }
    }
    assert!(checked >= 20, "only {checked} seeds had a usable window");
}

#[test]
fn noise_inflates_numeric_rank() {
    let (clean, noisy, r) = noisy_lti_data(1, 1e-3);
    assert_eq!(numeric_rank(&clean), r);
    assert!(numeric_rank(&noisy) > r);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_is_non_increasing_in_rho(seed in any::<u64>(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, 5, 7);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(robustified_rank(&m, lo) >= robustified_rank(&m, hi));
    }

    #[test]
    fn zero_threshold_is_numeric_rank(seed in any::<u64>(), r in 1usize..5, k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Product of random factors has rank min(k, ...) with probability 1.
        let m = random_matrix(&mut rng, 5, k) * random_matrix(&mut rng, k, 6 + r);
        prop_assert_eq!(robustified_rank(&m, 0.0), numeric_rank(&m));
        prop_assert_eq!(robustified_rank(&m, 0.0), k);
    }

    #[test]
    fn weyl_perturbation_bound(seed in any::<u64>(), rank in 1usize..4, delta in 1e-6f64..1e-2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, 6, rank) * random_matrix(&mut rng, rank, 8);
        let spectrum = singular_spectrum(&m);
        let mut e = random_matrix(&mut rng, 6, 8);
        e *= delta / spectral_norm(&e);
        // rho with margin > delta to every singular value of m.
        let rho = 2.0 * delta;
        prop_assume!(spectrum.values().iter().all(|&s| (s - rho).abs() > 1.01 * delta));
        prop_assert_eq!(robustified_rank(&(&m + e), rho), robustified_rank(&m, rho));
    }

    #[test]
    fn thin_svd_reconstructs_low_rank_products(seed in any::<u64>(), r in 1usize..12, c in 1usize..12, k in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(r).min(c);
        let m = random_matrix(&mut rng, r, k) * random_matrix(&mut rng, k, c);
        let svd = thin_svd(&m);
        let s = DMatrix::from_diagonal(&DVector::from_vec(svd.singular_values.clone()));
        prop_assert!((&svd.u * s * &svd.v_t - &m).amax() < 1e-12);
        prop_assert!((svd.u.transpose() * &svd.u - DMatrix::identity(svd.u.ncols(), svd.u.ncols())).amax() < 1e-12);
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(numeric_rank(&m), k);
    }

    #[test]
    fn window_separates_exactly_the_requested_rank(seed in any::<u64>(), r in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, 5, 6);
        if let Some(w) = threshold_window(&m, r).unwrap() {
            prop_assert_eq!(robustified_rank(&m, w.geometric_mid()), r);
            prop_assert_eq!(robustified_rank(&m, w.lower), r);
            prop_assert_eq!(robustified_rank(&m, w.upper), r - 1);
        }
    }
}
