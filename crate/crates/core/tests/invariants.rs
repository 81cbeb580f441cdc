//! Property tests for the norm-preservation and projection contracts the
//! attack relies on.

use proptest::prelude::*;
use sbo_core::subspace::{
    dft2, fft_embed, idft2, nni_upsample, project_l2, project_linf, BasisMode, SubspaceSpec,
};

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn coeff_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0..10.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l2_projection_is_idempotent_feasible_nonexpansive(
        a in coeff_vec(8),
        b in coeff_vec(8),
        eps in 0.01..5.0f64,
    ) {
        let pa = project_l2(&a, eps);
        let pb = project_l2(&b, eps);
        prop_assert!(l2(&pa) <= eps + 1e-12);
        let twice = project_l2(&pa, eps);
        for (x, y) in twice.iter().zip(pa.iter()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let dp: Vec<f64> = pa.iter().zip(pb.iter()).map(|(x, y)| x - y).collect();
        let d: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
        prop_assert!(l2(&dp) <= l2(&d) + 1e-12);
    }

    #[test]
    fn linf_projection_is_idempotent_feasible_nonexpansive(
        a in coeff_vec(8),
        b in coeff_vec(8),
        eps in 0.01..5.0f64,
    ) {
        let pa = project_linf(&a, eps);
        let pb = project_linf(&b, eps);
        prop_assert!(linf(&pa) <= eps);
        prop_assert_eq!(project_linf(&pa, eps), pa.clone());
        let dp: Vec<f64> = pa.iter().zip(pb.iter()).map(|(x, y)| x - y).collect();
        let d: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
        prop_assert!(linf(&dp) <= linf(&d) + 1e-12);
    }

    #[test]
    fn fourier_embedding_is_isometric(
        seed_coeffs in coeff_vec(3 * 3 * 2),
        mode_idx in 0usize..3,
        d in 6usize..20,
    ) {
        let mode = [BasisMode::FftCos, BasisMode::FftSin, BasisMode::FftFull][mode_idx];
        let spec = SubspaceSpec::new(mode, 3, 1, d).unwrap();
        let coeffs = &seed_coeffs[..spec.coeff_len()];
        let p = fft_embed(coeffs, &spec).unwrap();
        let nc = l2(coeffs);
        prop_assert!((l2(&p.data) - nc).abs() <= 1e-9 * nc.max(1.0));
    }

    #[test]
    fn nni_preserves_linf_exactly(
        coeffs in coeff_vec(2 * 3 * 3),
        d in 3usize..24,
    ) {
        let spec = SubspaceSpec::new(BasisMode::Nni, 3, 2, d).unwrap();
        let p = nni_upsample(&coeffs, &spec).unwrap();
        prop_assert_eq!(linf(&p.data), linf(&coeffs));
    }

    #[test]
    fn dft_round_trips(x in coeff_vec(7 * 7)) {
        let spectrum = dft2(&x, 7);
        let back = idft2(&spectrum, 7);
        for (z, &orig) in back.iter().zip(x.iter()) {
            prop_assert!((z.re - orig).abs() <= 1e-9);
            prop_assert!(z.im.abs() <= 1e-9);
        }
    }
}
