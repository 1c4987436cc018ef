use std::f64::consts::PI;

use bnst::channel::ChannelProcess;
use bnst::entypes::TypeClassCodec;
use bnst::learning::{line_search, line_search_probes};
use bnst::matcore::{
    jacobi_angles, random_gaussian, random_unitary, rotation_matrix, subspace_distance, RotationParams,
};
use bnst::tracking::quantile_db;
use bnst::scalar::wrap_pi;
use bnst::{CMatrix, Cf64};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(n: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (0..n - 1).prop_flat_map(move |l| (Just(n), Just(l), l + 1..n))
}

proptest! {
    #[test]
    fn rotations_are_unitary(
        (n, l, m) in (2usize..7).prop_flat_map(pair),
        theta in -PI..PI,
        phi in -PI..PI,
    ) {
        let r = rotation_matrix(n, &RotationParams::new(n, l, m, theta, phi).unwrap()).unwrap();
        prop_assert!(r.orthonormality_defect() < 1e-13);
    }

    #[test]
    fn rotate_columns_is_right_multiplication(
        (n, l, m) in (2usize..6).prop_flat_map(pair),
        theta in -PI..PI,
        phi in -PI..PI,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: CMatrix = random_unitary(n, &mut rng);
        let p = RotationParams::new(n, l, m, theta, phi).unwrap();
        let expected = w.matmul(&rotation_matrix(n, &p).unwrap()).unwrap();
        let mut got = w.clone();
        got.rotate_columns(&p);
        prop_assert!(got.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn jacobi_angles_annihilate_the_pivot(
        a in -10.0f64..10.0,
        d in -10.0f64..10.0,
        re in -10.0f64..10.0,
        im in -10.0f64..10.0,
    ) {
        let b = Cf64::new(re, im);
        let g = CMatrix::from_rows(&[
            vec![Cf64::new(a, 0.0), b],
            vec![b.conj(), Cf64::new(d, 0.0)],
        ]).unwrap();
        let (theta, phi) = jacobi_angles(g[(0, 0)], g[(1, 1)], b).unwrap();
        prop_assert!(theta.abs() <= PI / 4.0 + 1e-15);
        let r = rotation_matrix(2, &RotationParams::new(2, 0, 1, theta, phi).unwrap()).unwrap();
        let rotated = r.adjoint().matmul(&g).unwrap().matmul(&r).unwrap();
        prop_assert!(rotated[(0, 1)].norm() <= 1e-12 * (1.0 + g.frobenius_norm()));
    }

    #[test]
    fn subspace_distance_ignores_the_basis_and_is_symmetric(
        n in 2usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..n);
        let idx: Vec<usize> = (0..k).collect();
        let a = random_unitary::<f64, _>(n, &mut rng).select_columns(&idx).unwrap();
        let b = random_unitary::<f64, _>(n, &mut rng).select_columns(&idx).unwrap();
        let mix = random_unitary::<f64, _>(k, &mut rng);
        prop_assert!(subspace_distance(&a, &a.matmul(&mix).unwrap()).unwrap() < 1e-7);
        let (ab, ba) = (subspace_distance(&a, &b).unwrap(), subspace_distance(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn quantiles_are_monotone_and_bounded(
        values in prop::collection::vec(-60.0f64..10.0, 1..200),
        x in 1.0f64..100.0,
        y in 1.0f64..100.0,
    ) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let ql = quantile_db(&values, lo).unwrap();
        let qh = quantile_db(&values, hi).unwrap();
        prop_assert!(ql <= qh);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= ql && qh <= max);
        prop_assert!(values.contains(&qh));
    }

    #[test]
    fn line_search_locates_a_shifted_cosine(
        shift in -1.0f64..1.0,
        eta in 0.01f64..0.2,
    ) {
        let r = PI / 2.0;
        let out = line_search(|x: f64| Ok(1.0 - (x - shift).cos()), r, eta).unwrap();
        prop_assert_eq!(out.probes, line_search_probes(eta));
        prop_assert!((out.arg - shift).abs() <= eta * r, "arg {} shift {}", out.arg, shift);
        prop_assert!(out.samples.iter().all(|&(_, v)| out.value <= v));
    }

    #[test]
    fn balanced_codewords_roundtrip(
        (n, m) in prop_oneof![Just((12usize, 2usize)), Just((12, 3)), Just((16, 4)), Just((20, 2))],
        seed in any::<u64>(),
    ) {
        let codec = TypeClassCodec::new(n, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..codec.capacity_bits()).map(|_| rng.random()).collect();
        let seq = codec.encode_bits(&bits).unwrap();
        for s in 0..m {
            prop_assert_eq!(seq.iter().filter(|&&c| c == s).count(), n / m);
        }
        prop_assert_eq!(codec.decode_bits(&seq).unwrap(), bits);
        prop_assert!(codec.rank(&seq).unwrap() < *codec.class_size());
        prop_assert!(codec.rank(&seq).unwrap() < BigUint::from(1u8) << codec.capacity_bits());
    }

    #[test]
    fn wrap_pi_lands_in_the_principal_range(x in -100.0f64..100.0) {
        let w = wrap_pi(x);
        prop_assert!(w > -PI && w <= PI);
        let k = (x - w) / (2.0 * PI);
        prop_assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn channel_samples_are_reproducible(
        seed in any::<u64>(),
        t in 0.0f64..10.0,
        fd in 0.0f64..20.0,
    ) {
        let a = ChannelProcess::<f64>::new(2, 3, fd, 16, seed, 66.7e-6).unwrap();
        let b = ChannelProcess::<f64>::new(2, 3, fd, 16, seed, 66.7e-6).unwrap();
        prop_assert_eq!(a.sample_matrix(t), b.sample_matrix(t));
        prop_assert!(a.sample_matrix(t).is_finite());
    }
}

#[test]
fn gaussian_matrices_have_unit_entry_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h: CMatrix = random_gaussian(200, 200, &mut rng);
    let power = h.frobenius_norm().powi(2) / 40_000.0;
    assert!((power - 1.0).abs() < 0.03, "{power}");
}
