use rand::Rng;

use super::metrics::nmse_db;
use super::phase::{build_training, solver_config};
use super::runner::{run_sweep, ExperimentSpec, MetricRecord, Outcome, RecoverScenario};
use crate::channel::{dft_basis, synthesize_common_support_group, synthesize_lowrank_multiuser};
use crate::error::Result;
use crate::estimators::ls_min_norm;
use crate::linalg::{complex_normal, complex_normal_mat, complex_normal_vec, CMat, CVec};
use crate::sparse_recovery::{
    bg_amp_em_recover, gm_amp_em_recover, is_exact_recovery, joint_omp_recover, nuclear_kill_threshold,
    nuclear_norm_recover, weighted_l1_recover, RecoveryConfig,
};

/// KL×M matrix whose entries are nonzero with probability `activity`, CN(0, 1) when active.
pub fn bernoulli_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, activity: f64, rng: &mut R) -> CMat {
    let mut h = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < activity {
                h[(i, j)] = complex_normal(rng, 1.0);
            }
        }
    }
    h
}

/// Composite pilot matrix τ×KL with CN(0, 1/τ) entries.
pub fn gaussian_pilots<R: Rng + ?Sized>(tau: usize, users: usize, rng: &mut R) -> CMat {
    complex_normal_mat(rng, tau, users, 1.0 / tau as f64)
}

fn concat(vs: &[CVec]) -> Vec<num_complex::Complex64> {
    vs.iter().flat_map(|v| v.iter().copied()).collect()
}

/// NMSE of the sparsity-aware recovery methods on one of three synthetic channel models.
pub fn recovery(spec: &ExperimentSpec, methods: &[String], threads: usize) -> Result<Vec<MetricRecord>> {
    let p = spec.params.clone();
    let ues = spec.geometry.ues_per_cell;
    let total = spec.geometry.cells * ues;
    let spacing = spec.geometry.antenna_spacing;
    let base = solver_config(spec);
    run_sweep(spec, threads, |point| {
        let point = point.clone();
        let methods = methods.to_vec();
        let p = p.clone();
        let base = base.clone();
        let allowed: &[&str] = match p.scenario {
            RecoverScenario::CommonSupport => &["joint_omp", "omp", "weighted_l1"],
            RecoverScenario::LowRank => &["nuclear_norm", "ls"],
            RecoverScenario::SparseUe => &["gm_amp_em", "bg_amp_em", "ls"],
        };
        if let Some(m) = methods.iter().find(|m| !allowed.contains(&m.as_str())) {
            return Err(crate::error::CsiError::Config(format!(
                "method \"{m}\" does not apply to scenario {:?}; expected one of {allowed:?}",
                p.scenario
            )));
        }
        let basis = match p.scenario {
            RecoverScenario::CommonSupport => Some(dft_basis(point.m)?),
            _ => None,
        };
        Ok(move |rng: &mut crate::rng::SimRng| -> Result<Vec<Outcome>> {
            match p.scenario {
                RecoverScenario::CommonSupport => {
                    let basis = basis.as_ref().expect("basis built for this scenario");
                    let (m, n, s) = (point.m, point.n, p.sparsity);
                    let (_, hs) = synthesize_common_support_group(m, ues, s, point.s_common, rng)?;
                    let train = build_training(p.training, n, m, rng)?;
                    let sigma = point.noise_std.unwrap_or(0.0);
                    let ys: Vec<CVec> = hs
                        .iter()
                        .map(|h| {
                            let mut y = &train.matrix * h.to_dense();
                            if sigma > 0.0 {
                                y += complex_normal_vec(rng, n, sigma * sigma);
                            }
                            y
                        })
                        .collect();
                    let truth: Vec<CVec> = hs.iter().map(|h| h.coeffs().clone()).collect();
                    let flat_truth = concat(&truth);
                    let mut out = Vec::new();
                    for method in &methods {
                        let est: Vec<CVec> = match method.as_str() {
                            "joint_omp" | "omp" => {
                                let common = if method == "joint_omp" { point.s_common } else { 0 };
                                joint_omp_recover(&ys, &train, basis, s, common)?
                                    .into_iter()
                                    .map(|r| r.estimate.as_vector().expect("vector").clone())
                                    .collect()
                            }
                            _ => {
                                let eps = sigma * (n as f64).sqrt() * 1.1;
                                let cfg = RecoveryConfig { epsilon: eps, ..base.clone() };
                                ys.iter()
                                    .map(|y| {
                                        weighted_l1_recover(y, &train, basis, &cfg)
                                            .map(|r| r.estimate.as_vector().expect("vector").clone())
                                    })
                                    .collect::<Result<_>>()?
                            }
                        };
                        let exact = est.iter().zip(&truth).all(|(e, t)| is_exact_recovery(e.as_slice(), t.as_slice()));
                        out.push(Outcome {
                            nmse_db: Some(nmse_db(&concat(&est), &flat_truth)?),
                            success: Some(exact),
                            ..Outcome::new(method.clone())
                        });
                    }
                    Ok(out)
                }
                RecoverScenario::LowRank => {
                    let (m, tau) = (point.m, point.tau);
                    let aoas: Vec<f64> = (0..p.rank)
                        .map(|_| rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2))
                        .collect();
                    let h = synthesize_lowrank_multiuser(total, m, &aoas, spacing, rng)?.matrix;
                    let pilots = gaussian_pilots(tau, total, rng);
                    let mut y = &pilots * &h;
                    let sigma = point.noise_std.unwrap_or(0.0);
                    if sigma > 0.0 {
                        y += complex_normal_mat(rng, tau, m, sigma * sigma);
                    }
                    let mut out = Vec::new();
                    for method in &methods {
                        let est = match method.as_str() {
                            "nuclear_norm" => {
                                let gamma = p.nuclear_gamma_rel * nuclear_kill_threshold(&y, &pilots);
                                let cfg = RecoveryConfig { nuclear_gamma: gamma.max(f64::MIN_POSITIVE), ..base.clone() };
                                nuclear_norm_recover(&y, &pilots, &cfg)?
                            }
                            _ => ls_min_norm(&y, &pilots),
                        };
                        let e = est.estimate.as_matrix().expect("matrix");
                        out.push(Outcome {
                            nmse_db: Some(nmse_db(e.as_slice(), h.as_slice())?),
                            ..Outcome::new(method.clone())
                        });
                    }
                    Ok(out)
                }
                RecoverScenario::SparseUe => {
                    let (m, tau) = (point.m, point.tau);
                    let mut h = bernoulli_gaussian_matrix(total, m, p.activity, rng);
                    while h.iter().all(|z| z.norm_sqr() == 0.0) {
                        h = bernoulli_gaussian_matrix(total, m, p.activity, rng);
                    }
                    let pilots = gaussian_pilots(tau, total, rng);
                    let signal_var = total as f64 * p.activity / tau as f64;
                    let sigma = point
                        .noise_std
                        .unwrap_or_else(|| (signal_var / 10f64.powf(p.snr_db / 10.0)).sqrt());
                    let mut y = &pilots * &h;
                    if sigma > 0.0 {
                        y += complex_normal_mat(rng, tau, m, sigma * sigma);
                    }
                    let amp_cfg = RecoveryConfig {
                        gm_components: p.gm_components,
                        amp_damping: p.amp_damping,
                        max_iterations: p.max_iterations.unwrap_or(RecoveryConfig::amp().max_iterations),
                        tolerance: base.tolerance,
                        ..RecoveryConfig::amp()
                    };
                    let mut out = Vec::new();
                    for method in &methods {
                        let est = match method.as_str() {
                            "gm_amp_em" => gm_amp_em_recover(&y, &pilots, &amp_cfg)?,
                            "bg_amp_em" => bg_amp_em_recover(&y, &pilots, &amp_cfg)?,
                            _ => ls_min_norm(&y, &pilots),
                        };
                        let e = est.estimate.as_matrix().expect("matrix");
                        out.push(Outcome {
                            nmse_db: Some(nmse_db(e.as_slice(), h.as_slice())?),
                            ..Outcome::new(method.clone())
                        });
                    }
                    Ok(out)
                }
            }
        })
    })
}
