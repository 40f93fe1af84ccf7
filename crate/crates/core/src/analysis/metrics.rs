use num_complex::Complex64;

use crate::error::{invalid, Result};

/// NMSE values are clamped here so exact recoveries stay finite.
pub const NMSE_FLOOR_DB: f64 = -300.0;

/// `10·log10(‖ĥ − h‖² / ‖h‖²)`; a zero truth is an error.
pub fn nmse_db(estimate: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(invalid(format!("length {} != {}", estimate.len(), truth.len())));
    }
    let power: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    if power == 0.0 {
        return Err(invalid("NMSE undefined for an all-zero truth"));
    }
    let err: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum();
    if err == 0.0 {
        return Ok(NMSE_FLOOR_DB);
    }
    Ok((10.0 * (err / power).log10()).max(NMSE_FLOOR_DB))
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
