#![allow(dead_code)]

use num_complex::Complex64;
use proptest::test_runner::{Config, RngSeed};
use rand::Rng;
use sparse_csi::linalg::{complex_normal_mat, CMat, CVec};

pub type C64 = Complex64;

pub fn prop_config(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn submatrix(a: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), cols.len(), |i, k| a[(i, cols[k])])
}

/// Least-squares coefficients and residual norm on a fixed column subset, via normal
/// equations solved by LU (independent of the SVD path the library uses).
fn subset_fit(a: &CMat, y: &CVec, cols: &[usize]) -> Option<(CVec, f64)> {
    let sub = submatrix(a, cols);
    let gram = sub.adjoint() * &sub;
    let coef = gram.lu().solve(&(sub.adjoint() * y))?;
    let res = (y - &sub * &coef).norm();
    Some((coef, res))
}

fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for j in start..=m - left {
            cur.push(j);
            go(j + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, size, &mut Vec::new(), &mut out);
    out
}

/// Every support of the smallest size ≤ `max_s` that explains `y` to `tol·‖y‖`.
pub fn exact_fits(a: &CMat, y: &CVec, max_s: usize, tol: f64) -> Vec<(Vec<usize>, CVec)> {
    let m = a.ncols();
    let scale = y.norm().max(f64::MIN_POSITIVE);
    for size in 1..=max_s {
        let found: Vec<(Vec<usize>, CVec)> = combinations(m, size)
            .into_iter()
            .filter_map(|idx| {
                let (coef, res) = subset_fit(a, y, &idx)?;
                if res > tol * scale || coef.iter().any(|c| c.norm() <= 1e-9) {
                    return None;
                }
                let mut full = CVec::zeros(m);
                for (k, &j) in idx.iter().enumerate() {
                    full[j] = coef[k];
                }
                Some((idx, full))
            })
            .collect();
        if !found.is_empty() {
            return found;
        }
    }
    Vec::new()
}

/// Rank-`r` fit of `Y ≈ S·G·A` by alternating least squares from a random start.
pub fn als_rank_oracle<R: Rng + ?Sized>(y: &CMat, pilots: &CMat, rank: usize, sweeps: usize, rng: &mut R) -> CMat {
    let (_, m) = y.shape();
    let kl = pilots.ncols();
    let s_pinv = pilots.clone().pseudo_inverse(1e-12).expect("pinv");
    let mut a = complex_normal_mat(rng, rank, m, 1.0);
    let mut g = CMat::zeros(kl, rank);
    for _ in 0..sweeps {
        let a_pinv = a.clone().pseudo_inverse(1e-12).expect("pinv");
        g = &s_pinv * y * a_pinv;
        let sg = pilots * &g;
        let sg_pinv = sg.pseudo_inverse(1e-12).expect("pinv");
        a = sg_pinv * y;
    }
    g * a
}
