use num_complex::Complex64;

use super::RecoveryConfig;
use crate::error::{invalid, CsiError, Result};
use crate::linalg::{hermitian_inverse_ridged, norm_sq, CMat, CVec, RANK_TOL, ZERO};
use crate::report::{Estimate, EstimateReport, Method, TraceRow};
use crate::training::TrainingMatrix;

const RELAXATION: f64 = 1.6;
const RHO_ADAPT_EVERY: usize = 10;
const RHO_ADAPT_UNTIL: usize = 500;
const RHO_BALANCE: f64 = 10.0;

/// How the ℓ2 constraint radius ε is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonMode {
    /// Realized noise norm, known to the generator.
    Oracle,
    /// `1.1·σ·√N` from the noise level alone.
    Blind,
}

impl EpsilonMode {
    pub fn resolve(self, noise_std: f64, realized: Option<f64>, rows: usize) -> f64 {
        match (self, realized) {
            (EpsilonMode::Oracle, Some(r)) => r,
            _ => 1.1 * noise_std * (rows as f64).sqrt(),
        }
    }
}

struct Operator {
    a: CMat,
    gram: CMat,
    /// (I + A·Aᴴ)⁻¹
    inv: CMat,
}

/// `min Σ w_i |x_i|  s.t. ‖y − S·U·x‖₂ ≤ ε` by ADMM on the split `z1 = x`, `z2 = A·x`.
///
/// The reported estimate is the shrunk variable `z1`, nudged along the range of `A` until the
/// constraint holds to solver precision.
pub fn weighted_l1_recover(
    y: &CVec,
    training: &TrainingMatrix,
    basis: &CMat,
    cfg: &RecoveryConfig,
) -> Result<EstimateReport> {
    cfg.validate()?;
    let s = &training.matrix;
    let (n, m) = s.shape();
    if basis.shape() != (m, m) {
        return Err(invalid(format!("basis is {:?}, expected {m}x{m}", basis.shape())));
    }
    if y.len() != n {
        return Err(invalid(format!("measurement length {} != training rows {n}", y.len())));
    }
    let weights: Vec<f64> = if cfg.weights.is_empty() { vec![1.0; m] } else { cfg.weights.clone() };
    if weights.len() != m {
        return Err(invalid(format!("{} weights for {m} coefficients", weights.len())));
    }
    let eps = cfg.epsilon;
    let a = s * basis;
    let svd = a.clone().svd(true, true);
    let u_a = svd.u.as_ref().expect("u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
        .collect();

    let y_norm = norm_sq(y).sqrt();
    let floor = perp_norm(u_a, &kept, y);
    if floor > eps * (1.0 + 1e-9) + 1e-12 * y_norm {
        return Err(CsiError::Infeasible { floor, epsilon: eps });
    }

    let gram = &a * a.adjoint();
    let mut shifted = gram.clone();
    for i in 0..n {
        shifted[(i, i)] += 1.0;
    }
    let op = Operator { inv: hermitian_inverse_ridged(&shifted, 0.0), gram, a };

    let scale = y_norm.max(1.0);
    let mut rho = 1.0 / scale.max(1.0) * (m as f64 / n as f64).sqrt();
    let mut z1 = CVec::zeros(m);
    let mut z2 = y.clone();
    let mut u1 = CVec::zeros(m);
    let mut u2 = CVec::zeros(n);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut best = (f64::INFINITY, z1.clone());
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        // x-update: (I + AᴴA)⁻¹ b via the matrix-inversion lemma
        let b = (&z1 - &u1) + op.a.ad_mul(&(&z2 - &u2));
        let t = &op.a * &b;
        let sv = &op.inv * &t;
        let x = &b - op.a.ad_mul(&sv);
        let ax = &t - &op.gram * &sv;

        let xr = relax(&x, &z1);
        let axr = relax(&ax, &z2);

        let z1_old = z1.clone();
        let z2_old = z2.clone();
        let u1_old = u1.clone();
        let u2_old = u2.clone();

        let v1 = &xr + &u1;
        z1 = CVec::from_fn(m, |i, _| shrink(v1[i], weights[i] / rho));
        let v2 = &axr + &u2 - y;
        z2 = y + project_ball(&v2, eps);
        u1 = v1 - &z1;
        u2 = &axr + &u2_old - &z2;

        let primal = (norm_sq(&(&x - &z1)) + norm_sq(&(&ax - &z2))).sqrt() / scale;
        let dz = norm_sq(&(&z1 - &z1_old)) + norm_sq(&(&z2 - &z2_old));
        let du = norm_sq(&(&u1 - &u1_old)) + norm_sq(&(&u2 - &u2_old));
        let dual = rho * dz.sqrt() / scale;
        let objective: f64 = z1.iter().zip(&weights).map(|(z, w)| w * z.norm()).sum();
        trace.push(TraceRow {
            iteration: it,
            objective,
            residual: norm_sq(&(&ax - y)).sqrt(),
            merit: rho * (dz + du),
            penalty: rho,
        });
        let gap = primal.max(dual);
        if gap < best.0 {
            best = (gap, z1.clone());
        }
        if primal < cfg.tolerance && dual < cfg.tolerance {
            converged = true;
            break;
        }
        if it % RHO_ADAPT_EVERY == 0 && it <= RHO_ADAPT_UNTIL {
            let factor = if primal > RHO_BALANCE * dual {
                2.0
            } else if dual > RHO_BALANCE * primal {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                // scaled duals follow the penalty
                u1 /= Complex64::new(factor, 0.0);
                u2 /= Complex64::new(factor, 0.0);
            }
        }
    }

    let mut xhat = if converged { z1 } else { best.1 };
    repair_feasibility(&op.a, &svd, &kept, y, eps, &mut xhat);
    let residual_norm = norm_sq(&(y - &op.a * &xhat)).sqrt();
    let mut report = EstimateReport::new(Estimate::Vector(xhat), Method::WeightedL1, residual_norm);
    report.iterations = Some(iterations);
    report.converged = converged;
    report.trace = trace;
    Ok(report)
}

fn relax(new: &CVec, old: &CVec) -> CVec {
    new * Complex64::new(RELAXATION, 0.0) + old * Complex64::new(1.0 - RELAXATION, 0.0)
}

fn shrink(v: Complex64, t: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= t {
        ZERO
    } else {
        v * ((mag - t) / mag)
    }
}

fn project_ball(v: &CVec, radius: f64) -> CVec {
    let n = norm_sq(v).sqrt();
    if n <= radius {
        v.clone()
    } else {
        v * Complex64::new(radius / n, 0.0)
    }
}

/// ‖(I − P_range(A)) r‖ with the range spanned by the kept left singular vectors.
fn perp_norm(u: &CMat, kept: &[usize], r: &CVec) -> f64 {
    norm_sq(&(r - range_part(u, kept, r))).sqrt()
}

fn range_part(u: &CMat, kept: &[usize], r: &CVec) -> CVec {
    let mut out = CVec::zeros(r.len());
    for &i in kept {
        let col = u.column(i);
        let c = col.dotc(r);
        out.axpy(c, &col, ZERO + 1.0);
    }
    out
}

/// Shrink the range component of the residual so that `‖A·x − y‖ ≤ ε`.
fn repair_feasibility(
    a: &CMat,
    svd: &nalgebra::SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    kept: &[usize],
    y: &CVec,
    eps: f64,
    x: &mut CVec,
) {
    let r = a * &*x - y;
    let rn = norm_sq(&r).sqrt();
    if rn <= eps {
        return;
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v requested");
    let rr = range_part(u, kept, &r);
    let perp = norm_sq(&(&r - &rr)).sqrt();
    let range_norm = norm_sq(&rr).sqrt();
    if range_norm == 0.0 {
        return;
    }
    let keep = ((eps * eps - perp * perp).max(0.0)).sqrt() / range_norm;
    let shrink_by = 1.0 - keep.min(1.0);
    // δ = −A⁺·(shrink_by·r_range)
    let mut delta = CVec::zeros(x.len());
    for &i in kept {
        let c = u.column(i).dotc(&rr) * (shrink_by / svd.singular_values[i]);
        let vi = vt.row(i).adjoint();
        delta.axpy(-c, &vi, ZERO + 1.0);
    }
    *x += delta;
}
