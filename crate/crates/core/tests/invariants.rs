mod common;

use common::{prop_config, C64};
use proptest::prelude::*;
use sparse_csi::analysis::nmse_db;
use sparse_csi::channel::{
    covariance_from_aoa_range, dft_basis, synthesize_angular_channel, synthesize_common_support_group,
    synthesize_lowrank_multiuser, AoaRange,
};
use sparse_csi::estimators::{allocate_pilots_by_aoa, count_conflicts, identity_allocation, mmse_decontaminate};
use sparse_csi::linalg::{complex_normal_vec, hermitian_eigenvalues, identity, numeric_rank, CMat};
use sparse_csi::rng::seeded;
use sparse_csi::training::{
    make_fos_pilots, make_gaussian_training, make_gwbe_pilots, make_orthogonal_pilots, make_wbe_pilots,
    tdd_uplink_measure, fdd_downlink_measure, PilotSet,
};

fn column_norm_err(p: &PilotSet) -> f64 {
    p.matrix
        .column_iter()
        .map(|c| (c.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(prop_config(24, 0x11))]

    #[test]
    fn dft_basis_is_unitary(m in 1usize..=512) {
        let u = dft_basis(m).unwrap();
        let err = (u.adjoint() * &u - identity(m)).norm();
        prop_assert!(err < 1e-10, "M={m}: {err}");
    }
}

proptest! {
    #![proptest_config(prop_config(64, 0x12))]

    #[test]
    fn parseval_holds(m in 1usize..200, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let s = ((m as f64) * frac).round() as usize;
        let ch = synthesize_angular_channel(m, s, &mut seeded(seed)).unwrap();
        let lhs = ch.to_dense().norm();
        let rhs = ch.coeffs().norm();
        prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn common_support_is_shared(
        k in 1usize..5,
        s in 1usize..6,
        common_frac in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let common = ((s as f64) * common_frac).floor() as usize;
        let (shared, chans) = synthesize_common_support_group(64, k, s, common, &mut seeded(seed)).unwrap();
        prop_assert_eq!(shared.len(), common);
        for ch in &chans {
            prop_assert_eq!(ch.sparsity(), s);
            prop_assert!(shared.is_subset(ch.support()));
        }
    }

    #[test]
    fn covariance_is_hermitian_psd(
        center in -1.2f64..1.2,
        width in 0.0f64..0.7,
        m in 2usize..48,
    ) {
        let range = AoaRange::centered(center, width).unwrap();
        let cov = covariance_from_aoa_range(range, m, 0.5, 128).unwrap();
        prop_assert!((&cov.matrix - cov.matrix.adjoint()).norm() < 1e-12 * m as f64);
        let eig = cov.eigenvalues();
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(min >= -1e-10 * max);
        let trace: f64 = (0..m).map(|i| cov.matrix[(i, i)].re).sum();
        prop_assert!((trace - m as f64).abs() < 1e-9 * m as f64);
    }

    #[test]
    fn lowrank_channel_has_requested_rank(r in 1usize..5, seed in any::<u64>()) {
        let aoas: Vec<f64> = (0..r).map(|i| -1.2 + 0.55 * i as f64).collect();
        let h = synthesize_lowrank_multiuser(12, 32, &aoas, 0.5, &mut seeded(seed)).unwrap();
        prop_assert_eq!(numeric_rank(&h.matrix), r);
    }

    #[test]
    fn wbe_identity_and_unit_columns(tau in 1usize..10, extra in 0usize..20) {
        let k = tau + extra;
        let p = make_wbe_pilots(tau, k).unwrap();
        let target = identity(tau) * C64::new(k as f64 / tau as f64, 0.0);
        prop_assert!((&p.matrix * p.matrix.adjoint() - target).norm() < 1e-10);
        prop_assert!(column_norm_err(&p) < 1e-12);
    }

    #[test]
    fn gwbe_identity_for_feasible_powers(
        tau in 2usize..7,
        raw in proptest::collection::vec(0.05f64..1.0, 3..24),
    ) {
        prop_assume!(raw.len() > tau);
        let level = raw.iter().sum::<f64>() / tau as f64;
        prop_assume!(raw.iter().all(|p| *p < level));
        let p = make_gwbe_pilots(tau, &raw).unwrap();
        let frame = p.weighted_frame_operator(&raw);
        prop_assert!((frame - identity(tau) * C64::new(level, 0.0)).norm() < 1e-8);
        prop_assert!(column_norm_err(&p) < 1e-12);
    }

    #[test]
    fn fos_gram_is_zero_or_one(tau in 1usize..8, assign in proptest::collection::vec(0usize..64, 1..16)) {
        let assign: Vec<usize> = assign.into_iter().map(|a| a % tau).collect();
        let p = make_fos_pilots(tau, &assign).unwrap();
        for z in p.gram().iter() {
            let mag = z.norm();
            prop_assert!(mag.abs() < 1e-12 || (mag - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fdd_measurement_is_linear(scale_re in -3.0f64..3.0, scale_im in -3.0f64..3.0, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let s = make_gaussian_training(6, 10, &mut rng).unwrap();
        let h = complex_normal_vec(&mut rng, 10, 1.0);
        let a = C64::new(scale_re, scale_im);
        let y1 = fdd_downlink_measure(std::slice::from_ref(&s), &[vec![h.clone()]], 0.0, false, &mut rng).unwrap();
        let y2 = fdd_downlink_measure(std::slice::from_ref(&s), &[vec![&h * a]], 0.0, false, &mut rng).unwrap();
        let lhs = &y1.fdd().unwrap()[0] * a;
        let rhs = &y2.fdd().unwrap()[0];
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn tdd_measurement_is_linear_and_deterministic(scale in -3.0f64..3.0, seed in any::<u64>()) {
        let pilots = make_orthogonal_pilots(4, 3).unwrap();
        let mut rng = seeded(seed);
        let h = sparse_csi::linalg::complex_normal_mat(&mut rng, 3, 8, 1.0);
        let a = C64::new(scale, 0.0);
        let y1 = tdd_uplink_measure(std::slice::from_ref(&pilots), &[h.clone()], 0.0, &mut rng).unwrap();
        let y2 = tdd_uplink_measure(std::slice::from_ref(&pilots), &[&h * a], 0.0, &mut rng).unwrap();
        prop_assert!((y1.tdd().unwrap() * a - y2.tdd().unwrap()).norm() < 1e-12 * (1.0 + h.norm()));

        let n1 = tdd_uplink_measure(std::slice::from_ref(&pilots), &[h.clone()], 0.3, &mut seeded(seed ^ 7)).unwrap();
        let n2 = tdd_uplink_measure(std::slice::from_ref(&pilots), &[h], 0.3, &mut seeded(seed ^ 7)).unwrap();
        prop_assert_eq!(n1.tdd().unwrap(), n2.tdd().unwrap());
    }

    #[test]
    fn mmse_shrinks_for_proportional_covariances(
        center in -1.0f64..1.0,
        width in 0.05f64..1.0,
        scales in proptest::collection::vec(0.1f64..4.0, 1..4),
        noise in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let base = covariance_from_aoa_range(AoaRange::centered(center, width).unwrap(), 16, 0.5, 128).unwrap();
        let scaled = |a: f64| {
            let mut c = base.clone();
            c.matrix *= C64::new(a, 0.0);
            c
        };
        let desired = scaled(scales[0]);
        let interferers: Vec<_> = scales[1..].iter().map(|&a| scaled(a)).collect();
        let h = complex_normal_vec(&mut seeded(seed), 16, 1.0);
        let out = mmse_decontaminate(&h, &desired, &interferers, noise).unwrap();
        let est = out.estimate.as_vector().unwrap();
        prop_assert!(est.norm() <= h.norm() * (1.0 + 1e-9));
    }

    #[test]
    fn allocation_is_injective_per_cell(
        cells in 1usize..4,
        k in 1usize..5,
        extra in 0usize..3,
        centers in proptest::collection::vec(-1.2f64..1.2, 12),
        widths in proptest::collection::vec(0.01f64..0.5, 12),
    ) {
        let tau = k + extra;
        let ranges: Vec<Vec<AoaRange>> = (0..cells)
            .map(|c| (0..k).map(|u| AoaRange::centered(centers[c * 4 + u], widths[c * 4 + u]).unwrap()).collect())
            .collect();
        let alloc = allocate_pilots_by_aoa(&ranges, tau).unwrap();
        for cell in &alloc.assignment {
            let mut seen = std::collections::BTreeSet::new();
            prop_assert!(cell.iter().all(|p| *p < tau && seen.insert(*p)));
        }
        prop_assert_eq!(alloc.conflict_count, count_conflicts(&ranges, &alloc.assignment));
        prop_assert!(alloc.conflict_count <= count_conflicts(&ranges, &identity_allocation(&ranges)));
    }

    #[test]
    fn nmse_ignores_common_phase(phase in 0.0f64..std::f64::consts::TAU, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let truth = complex_normal_vec(&mut rng, 20, 1.0);
        let est = &truth + complex_normal_vec(&mut rng, 20, 0.01);
        let rot = C64::from_polar(1.0, phase);
        let a = nmse_db(est.as_slice(), truth.as_slice()).unwrap();
        let b = nmse_db((&est * rot).as_slice(), (&truth * rot).as_slice()).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn covariance_rank_grows_with_nested_ranges() {
    for center in [-0.9, -0.3, 0.0, 0.4, 1.0] {
        let mut last = 0;
        for width in [0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8] {
            let range = AoaRange::centered(center, width).unwrap();
            let cov = covariance_from_aoa_range(range, 64, 0.5, 512).unwrap();
            assert!(cov.numeric_rank >= last, "center {center}, width {width}: {} < {last}", cov.numeric_rank);
            last = cov.numeric_rank;
        }
    }
}

#[test]
fn covariance_rank_examples() {
    let narrow = covariance_from_aoa_range(AoaRange::centered(0.3, 0.1).unwrap(), 64, 0.5, 512).unwrap();
    assert!(narrow.numeric_rank < 10, "narrow rank {}", narrow.numeric_rank);
    let full = covariance_from_aoa_range(AoaRange::full(), 16, 0.5, 512).unwrap();
    assert_eq!(full.numeric_rank, 16);
    // Independent eigenvalue count on the same matrix.
    let eig = hermitian_eigenvalues(&narrow.matrix);
    let max = eig.iter().cloned().fold(0.0, f64::max);
    assert_eq!(eig.iter().filter(|&&e| e > 1e-8 * max).count(), narrow.numeric_rank);
}

#[test]
fn lowrank_steering_rows_orthonormal_at_scale() {
    let aoas = [-0.9, -0.2, 0.35, 1.1];
    let h = synthesize_lowrank_multiuser(8, 4096, &aoas, 0.5, &mut seeded(3)).unwrap();
    let a: &CMat = &h.factor.as_ref().unwrap().steering;
    assert!((a * a.adjoint() - identity(4)).norm() < 0.1);
    assert!(synthesize_lowrank_multiuser(8, 16, &[0.2, 0.2], 0.5, &mut seeded(3)).is_err());
}
