mod common;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use magstark::eigen::{eig_dense, eigenvalues};

use common::*;

fn spectrum(a: &[Vec<C64>]) -> Vec<C64> {
    eigenvalues(&to_faer(a)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transpose_has_same_spectrum(seed in any::<u64>(), n in 1usize..12) {
        let a = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, false);
        let t: Vec<Vec<C64>> = (0..n).map(|r| (0..n).map(|c| a[c][r]).collect()).collect();
        prop_assert!(match_distance(&spectrum(&a), &spectrum(&t)) < 1e-10);
    }

    #[test]
    fn trace_is_eigenvalue_sum(seed in any::<u64>(), n in 1usize..16) {
        let a = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, seed % 2 == 0);
        let tr: C64 = (0..n).map(|i| a[i][i]).sum();
        let sum: C64 = spectrum(&a).iter().sum();
        prop_assert!((tr - sum).norm() < 1e-10 * n as f64);
    }

    #[test]
    fn scalar_shift_moves_every_eigenvalue(
        seed in any::<u64>(),
        n in 1usize..10,
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
    ) {
        let a = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, true);
        let s = C64::new(re, im);
        let mut shifted = a.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += s;
        }
        let moved: Vec<C64> = spectrum(&a).iter().map(|z| z + s).collect();
        prop_assert!(match_distance(&moved, &spectrum(&shifted)) < 1e-10);
    }

    #[test]
    fn certified_pairs_have_small_residuals(seed in any::<u64>(), n in 1usize..20) {
        let a = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, true);
        let pairs = eig_dense(&to_faer(&a)).unwrap();
        prop_assert_eq!(pairs.len(), n);
        for p in &pairs {
            let norm: f64 = p.vector.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert!(p.residual < 1e-11);
        }
        prop_assert!(pairs.windows(2).all(|w| w[0].lambda.re <= w[1].lambda.re));
    }
}

#[test]
fn characteristic_polynomial_oracle_on_complex_symmetric_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for n in 1..=8 {
        let a = random_matrix(&mut rng, n, true);
        let got = spectrum(&a);
        assert!(
            match_distance(&char_poly_eigenvalues(&a), &got) < 1e-8,
            "n = {n}"
        );
    }
}
