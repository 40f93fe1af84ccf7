use num_complex::Complex64;
use sparse_csi::analysis::capacity::{capacity_pilots, measure_sinr, SinrTargets};
use sparse_csi::analysis::phase::crossing_point;
use sparse_csi::analysis::runner::records_to_csv;
use sparse_csi::analysis::{
    downlink_interference, mrt_precoder, run_experiment, user_capacity_sweep, CapacityParams, ExperimentKind,
    ExperimentSpec, MetricRecord, PrecodingScenario,
};
use sparse_csi::linalg::{complex_normal_vec, dot_t, CVec};
use sparse_csi::rng::seeded;
use sparse_csi::training::PilotScheme;

fn spec(json: &str) -> ExperimentSpec {
    ExperimentSpec::from_json(json).unwrap()
}

const SMALL_SPECS: [(ExperimentKind, &str); 5] = [
    (
        ExperimentKind::PhaseTransition,
        r#"{"geometry": {"antennas": 32}, "sweep": {"name": "N", "values": [8, 16, 24]}, "trials": 6,
            "noise_std": 0.0, "params": {"sparsity": 4, "alphas": [0.0, 1.0]}}"#,
    ),
    (
        ExperimentKind::SinrVsAntennas,
        r#"{"geometry": {"cells": 2, "ues_per_cell": 2, "antennas": 16}, "sweep": {"name": "M", "values": [16, 32]},
            "trials": 8}"#,
    ),
    (
        ExperimentKind::UserCapacity,
        r#"{"geometry": {"antennas": 128}, "sweep": {"name": "tau", "values": [2, 3]}, "trials": 3,
            "methods": ["gwbe", "fos"]}"#,
    ),
    (
        ExperimentKind::Decontaminate,
        r#"{"geometry": {"cells": 2, "antennas": 16}, "sweep": {"name": "M", "values": [16, 32]}, "trials": 5,
            "noise_std": 0.1}"#,
    ),
    (
        ExperimentKind::Recover,
        r#"{"geometry": {"cells": 2, "ues_per_cell": 8, "antennas": 16}, "sweep": {"name": "tau", "values": [12, 16]},
            "trials": 4, "methods": ["gm_amp_em", "bg_amp_em", "ls"], "params": {"scenario": "sparse_ue"}}"#,
    ),
];

#[test]
fn every_experiment_is_deterministic_across_thread_counts() {
    for (kind, json) in SMALL_SPECS {
        let s = spec(json);
        let a = records_to_csv(&run_experiment(kind, &s, 1).unwrap()).unwrap();
        let b = records_to_csv(&run_experiment(kind, &s, 1).unwrap()).unwrap();
        let c = records_to_csv(&run_experiment(kind, &s, 3).unwrap()).unwrap();
        assert_eq!(a, b, "{kind:?} repeat");
        assert_eq!(a, c, "{kind:?} parallel");
    }
}

#[test]
fn record_count_follows_sweep_shape() {
    let s = spec(
        r#"{"geometry": {"cells": 2, "antennas": 16}, "sweep": {"name": "M", "values": [16, 24, 32]}, "trials": 2,
            "methods": ["ls", "mmse"]}"#,
    );
    let recs = run_experiment(ExperimentKind::Decontaminate, &s, 1).unwrap();
    assert_eq!(recs.len(), 3 * 2);
    assert!(recs.iter().all(|r| r.trials == 2));
    let t1 = spec(
        r#"{"geometry": {"antennas": 16}, "sweep": {"name": "N", "values": [8]}, "trials": 1, "seed": 5,
            "params": {"sparsity": 2, "alphas": [0.5]}}"#,
    );
    let a = run_experiment(ExperimentKind::PhaseTransition, &t1, 1).unwrap();
    let b = run_experiment(ExperimentKind::PhaseTransition, &t1, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seeds_change_results() {
    let base = r#"{"geometry": {"cells": 2, "antennas": 16}, "sweep": {"name": "M", "values": [16]}, "trials": 4, "seed": SEED}"#;
    let a = run_experiment(ExperimentKind::Decontaminate, &spec(&base.replace("SEED", "1")), 1).unwrap();
    let b = run_experiment(ExperimentKind::Decontaminate, &spec(&base.replace("SEED", "2")), 1).unwrap();
    assert_ne!(a[0].nmse_db_mean, b[0].nmse_db_mean);
}

#[test]
fn determined_phase_point_always_succeeds() {
    let s = spec(
        r#"{"geometry": {"antennas": 32}, "sweep": {"name": "N", "values": [32]}, "trials": 100,
            "noise_std": 0.0, "params": {"sparsity": 6, "alphas": [0.0]}}"#,
    );
    let recs = run_experiment(ExperimentKind::PhaseTransition, &s, 1).unwrap();
    assert!(recs[0].success_rate.unwrap() >= 0.99, "{:?}", recs[0].success_rate);
}

#[test]
fn crossing_point_interpolates_between_sweep_values() {
    let rec = |n: f64, rate: f64| MetricRecord {
        sweep_name: "N".into(),
        sweep_value: n,
        method: "m".into(),
        trials: 10,
        nmse_db_mean: None,
        nmse_db_median: None,
        success_rate: Some(rate),
        sinr_db_mean: None,
        interference_power_mean: None,
        seed: 1,
    };
    let recs = vec![rec(10.0, 0.0), rec(20.0, 0.2), rec(30.0, 0.8), rec(40.0, 1.0)];
    let x = crossing_point(&recs, "m", 0.5).unwrap();
    assert!((x - 25.0).abs() < 1e-12);
    assert!(crossing_point(&recs, "m", 1.5).is_none());
}

#[test]
fn single_cell_noiseless_curves_coincide() {
    let s = spec(
        r#"{"geometry": {"cells": 1, "ues_per_cell": 2, "antennas": 64}, "sweep": {"name": "M", "values": [64, 256]},
            "trials": 500, "noise_std": 0.0}"#,
    );
    let recs = run_experiment(ExperimentKind::SinrVsAntennas, &s, 1).unwrap();
    for m in [64.0, 256.0] {
        let get = |name: &str| {
            recs.iter()
                .find(|r| r.sweep_value == m && r.method == name)
                .and_then(|r| r.sinr_db_mean)
                .unwrap()
        };
        assert!((get("contaminated_mrt") - get("perfect_csi_mrt")).abs() < 1.0);
    }
}

#[test]
fn orthogonal_pilots_admit_everyone() {
    let params = CapacityParams { antennas: 256, trials: 5, ..CapacityParams::default() };
    for scheme in [PilotScheme::Gwbe, PilotScheme::Wbe, PilotScheme::Fos] {
        let res = user_capacity_sweep(scheme, &[6], &params).unwrap();
        // K = 3 and K = 6 fit orthogonally in τ = 6
        assert!(res[0].admissible_users >= 6, "{scheme}: {}", res[0].admissible_users);
    }
}

/// Two UEs on one FOS sequence share the estimate `h_a + h_b + n`, so both get the same
/// precoder. With `G = E|h_aᵀw|² ≈ (M + 2 + σ²)/(2 + σ²)` and unit gain to every other beam,
/// `SINR_a ≈ P_a G / (P_b G + Σ_{others} P_j + σ_dl²)`.
fn copilot_sinr(m: usize, train_var: f64, pa: f64, pb: f64, others: f64, dl: f64) -> f64 {
    let g = (m as f64 + 2.0 + train_var) / (2.0 + train_var);
    pa * g / (pb * g + others + dl)
}

#[test]
fn fos_sharing_matches_two_user_contamination_oracle() {
    let params = CapacityParams { antennas: 2048, trials: 100, ..CapacityParams::default() };
    let targets = SinrTargets::pattern(&params.levels, 2).unwrap();
    let powers = targets.power_allocation();
    let pilots = capacity_pilots(PilotScheme::Fos, 3, &powers).unwrap();
    let sinr = measure_sinr(&pilots, &powers, &params, 0, 2).unwrap();
    let total: f64 = powers.iter().sum();
    let var = params.training_noise_std.powi(2);
    for a in 0..6 {
        let b = (a + 3) % 6;
        let others = total - powers[a] - powers[b];
        let want = copilot_sinr(params.antennas, var, powers[a], powers[b], others, params.downlink_noise_var);
        assert!((sinr[a] / want - 1.0).abs() < 0.05, "UE {a}: {} vs {want}", sinr[a]);
    }
    // the γ = 3 UE sharing with a γ = 1 UE lands near 0.75/0.5 = 1.5
    assert!(sinr[5] < 3.0 * (1.0 - params.slack));

    let res = user_capacity_sweep(PilotScheme::Fos, &[3], &params).unwrap();
    assert!(res[0].probes[0].admissible);
    assert_eq!(res[0].probes[0].users, 3);
    assert!(!res[0].probes[1].admissible);
    assert_eq!(res[0].admissible_users, 3);
}

#[test]
fn contaminated_mrt_points_along_the_sum() {
    let mut rng = seeded(4);
    let ha = complex_normal_vec(&mut rng, 32, 1.0);
    let hb = complex_normal_vec(&mut rng, 32, 1.0);
    let sum = &ha + &hb;
    let w = mrt_precoder(std::slice::from_ref(&sum)).unwrap();
    let dir = sum.map(|z| z.conj()).unscale(sum.norm());
    assert!((&w[0] - dir).norm() < 1e-12);
}

#[test]
fn self_interference_is_the_desired_term() {
    let mut rng = seeded(5);
    let h: CVec = complex_normal_vec(&mut rng, 16, 1.0);
    let scen = PrecodingScenario::new(vec![h.clone()], vec![h.clone()], vec![1.0]).unwrap();
    let w = scen.precoders().unwrap();
    let mut r1 = seeded(9);
    let mut r2 = seeded(9);
    let got = downlink_interference(&scen, &h, &mut r1).unwrap();
    let x = sparse_csi::linalg::complex_normal(&mut r2, 1.0);
    let want = dot_t(&h, &w[0]) * x;
    assert!((got - want).norm() < 1e-12);
    assert!((dot_t(&h, &w[0]) - Complex64::new(h.norm(), 0.0)).norm() < 1e-9);
}
