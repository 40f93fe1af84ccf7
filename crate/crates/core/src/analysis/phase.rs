use rand::Rng;

use super::runner::{run_sweep, EpsilonChoice, ExperimentSpec, MetricRecord, Outcome, TrainingChoice};
use crate::analysis::metrics::nmse_db;
use crate::channel::{dft_basis, synthesize_angular_channel};
use crate::error::{invalid, Result};
use crate::linalg::{complex_normal_vec, norm_sq};
use crate::sparse_recovery::{build_weights, is_exact_recovery, weighted_l1_recover, EpsilonMode, RecoveryConfig, SupportPrior};
use crate::training::{make_gaussian_training, make_orthonormal_rows_training, make_toeplitz_training, TrainingMatrix};

pub fn build_training<R: Rng + ?Sized>(choice: TrainingChoice, rows: usize, cols: usize, rng: &mut R) -> Result<TrainingMatrix> {
    match choice {
        TrainingChoice::Gaussian => make_gaussian_training(rows, cols, rng),
        TrainingChoice::Toeplitz => make_toeplitz_training(rows, cols, rng),
        TrainingChoice::OrthonormalRows => make_orthonormal_rows_training(rows, cols, rng),
    }
}

pub fn alpha_label(alpha: f64) -> String {
    format!("weighted_l1[alpha={alpha}]")
}

pub(crate) fn solver_config(spec: &ExperimentSpec) -> RecoveryConfig {
    let base = RecoveryConfig::default();
    RecoveryConfig {
        max_iterations: spec.params.max_iterations.unwrap_or(base.max_iterations),
        tolerance: spec.params.tolerance.unwrap_or(base.tolerance),
        ..base
    }
}

/// Exact-recovery rate of weighted ℓ1 against the number of measurements, one curve per
/// prior accuracy α (method `weighted_l1[alpha=…]`) plus plain ℓ1 (method `l1`).
pub fn phase_transition(spec: &ExperimentSpec, methods: &[String], threads: usize) -> Result<Vec<MetricRecord>> {
    let sparsity = spec.params.sparsity;
    let training = spec.params.training;
    let mode = match spec.params.epsilon_mode {
        EpsilonChoice::Oracle => EpsilonMode::Oracle,
        EpsilonChoice::Blind => EpsilonMode::Blind,
    };
    let base_cfg = solver_config(spec);
    run_sweep(spec, threads, |point| {
        let (n, m) = (point.n, point.m);
        if sparsity > m {
            return Err(invalid(format!("sparsity {sparsity} exceeds M = {m}")));
        }
        let basis = dft_basis(m)?;
        let alphas = point.alphas.clone();
        let sigma = point.noise_std.unwrap_or(0.0);
        let methods = methods.to_vec();
        let base_cfg = base_cfg.clone();
        Ok(move |rng: &mut crate::rng::SimRng| -> Result<Vec<Outcome>> {
            let h = synthesize_angular_channel(m, sparsity, rng)?;
            let s = build_training(training, n, m, rng)?;
            let mut y = &s.matrix * h.to_dense();
            let mut epsilon = 0.0;
            if sigma > 0.0 {
                let z = complex_normal_vec(rng, n, sigma * sigma);
                y += &z;
                epsilon = mode.resolve(sigma, Some(norm_sq(&z).sqrt()), n);
            }
            let mut out = Vec::new();
            let mut solve = |label: String, weights: Vec<f64>| -> Result<()> {
                let cfg = RecoveryConfig { epsilon, weights, ..base_cfg.clone() };
                let rep = weighted_l1_recover(&y, &s, &basis, &cfg)?;
                let x = rep.estimate.as_vector().expect("vector estimate");
                out.push(Outcome {
                    nmse_db: Some(nmse_db(x.as_slice(), h.coeffs().as_slice())?),
                    success: Some(is_exact_recovery(x.as_slice(), h.coeffs().as_slice())),
                    ..Outcome::new(label)
                });
                Ok(())
            };
            for method in &methods {
                match method.as_str() {
                    "weighted_l1" => {
                        for &alpha in &alphas {
                            let prior = SupportPrior::fabricate(h.support(), m, sparsity, alpha, rng)?;
                            solve(alpha_label(alpha), build_weights(&prior, m)?)?;
                        }
                    }
                    "l1" => solve("l1".to_string(), vec![1.0; m])?,
                    other => return Err(invalid(format!("unsupported method {other}"))),
                }
            }
            Ok(out)
        })
    })
}

/// Sweep value where a method's success rate first reaches `level`, linearly interpolated
/// between neighbouring sweep points. `None` if it never does.
pub fn crossing_point(records: &[MetricRecord], method: &str, level: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.method == method)
        .filter_map(|r| r.success_rate.map(|s| (r.sweep_value, s)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let idx = pts.iter().position(|&(_, s)| s >= level)?;
    if idx == 0 {
        return Some(pts[0].0);
    }
    let (x0, s0) = pts[idx - 1];
    let (x1, s1) = pts[idx];
    Some(x0 + (level - s0) / (s1 - s0) * (x1 - x0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: f64, s: f64) -> MetricRecord {
        MetricRecord {
            sweep_name: "N".into(),
            sweep_value: v,
            method: "m".into(),
            trials: 1,
            nmse_db_mean: None,
            nmse_db_median: None,
            success_rate: Some(s),
            sinr_db_mean: None,
            interference_power_mean: None,
            seed: 0,
        }
    }

    #[test]
    fn crossing_interpolates() {
        let r = vec![rec(10.0, 0.0), rec(20.0, 0.4), rec(30.0, 0.8)];
        assert!((crossing_point(&r, "m", 0.5).unwrap() - 22.5).abs() < 1e-12);
        assert_eq!(crossing_point(&r, "m", 0.9), None);
        assert_eq!(crossing_point(&r, "m", 0.0), Some(10.0));
    }
}
