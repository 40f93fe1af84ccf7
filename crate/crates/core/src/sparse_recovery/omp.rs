use std::collections::BTreeSet;

use crate::error::{invalid, CsiError, Result};
use crate::linalg::{norm_sq, CMat, CVec};
use crate::report::{Estimate, EstimateReport, Method};
use crate::training::TrainingMatrix;

/// Joint OMP for a group of UEs sharing `common` support atoms.
///
/// Phase one greedily picks the shared atoms by the summed correlation energy over all
/// residuals; phase two continues per UE up to `sparsity` atoms. Ties go to the lowest index.
pub fn joint_omp_recover(
    measurements: &[CVec],
    training: &TrainingMatrix,
    basis: &CMat,
    sparsity: usize,
    common: usize,
) -> Result<Vec<EstimateReport>> {
    let (n, m) = training.matrix.shape();
    if basis.shape() != (m, m) {
        return Err(invalid(format!("basis is {:?}, expected {m}x{m}", basis.shape())));
    }
    if measurements.is_empty() {
        return Err(invalid("no measurements"));
    }
    if let Some(y) = measurements.iter().find(|y| y.len() != n) {
        return Err(invalid(format!("measurement length {} != training rows {n}", y.len())));
    }
    if common > sparsity {
        return Err(invalid(format!("common support {common} exceeds sparsity {sparsity}")));
    }
    if sparsity > n {
        return Err(CsiError::IllPosed(format!("sparsity {sparsity} exceeds measurement count {n}")));
    }
    if sparsity > m {
        return Err(invalid(format!("sparsity {sparsity} exceeds dimension {m}")));
    }

    let a = &training.matrix * basis;
    let col_norm: Vec<f64> = (0..m).map(|j| a.column(j).norm_squared()).collect();

    let mut shared = BTreeSet::new();
    let mut residuals: Vec<CVec> = measurements.to_vec();
    for _ in 0..common {
        let pick = argmax(m, &shared, |j| {
            if col_norm[j] == 0.0 {
                return 0.0;
            }
            residuals.iter().map(|r| a.column(j).dotc(r).norm_sqr()).sum::<f64>() / col_norm[j]
        });
        shared.insert(pick);
        for (r, y) in residuals.iter_mut().zip(measurements) {
            *r = y - &a * &least_squares(&a, &shared, y);
        }
    }

    let mut out = Vec::with_capacity(measurements.len());
    for (y, mut r) in measurements.iter().zip(residuals) {
        let mut support = shared.clone();
        while support.len() < sparsity {
            let pick = argmax(m, &support, |j| {
                if col_norm[j] == 0.0 {
                    0.0
                } else {
                    a.column(j).dotc(&r).norm_sqr() / col_norm[j]
                }
            });
            support.insert(pick);
            r = y - &a * &least_squares(&a, &support, y);
        }
        let x = least_squares(&a, &support, y);
        let residual = norm_sq(&(y - &a * &x)).sqrt();
        let mut rep = EstimateReport::new(Estimate::Vector(x), Method::JointOmp, residual);
        rep.iterations = Some(support.len());
        out.push(rep);
    }
    Ok(out)
}

fn argmax(m: usize, exclude: &BTreeSet<usize>, score: impl Fn(usize) -> f64) -> usize {
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for j in 0..m {
        if exclude.contains(&j) {
            continue;
        }
        let s = score(j);
        if s > best.0 {
            best = (s, j);
        }
    }
    best.1
}

/// Least squares restricted to `support`, scattered back to length M.
fn least_squares(a: &CMat, support: &BTreeSet<usize>, y: &CVec) -> CVec {
    let mut x = CVec::zeros(a.ncols());
    if support.is_empty() {
        return x;
    }
    let idx: Vec<usize> = support.iter().copied().collect();
    let sub = a.select_columns(&idx);
    let coef = sub
        .svd(true, true)
        .solve(y, 1e-12)
        .expect("svd computed with both factors");
    for (k, &j) in idx.iter().enumerate() {
        x[j] = coef[k];
    }
    x
}
