//! Dense complex helpers shared by the channel, training and recovery modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative eigen/singular-value cutoff used for every numeric-rank decision.
pub const RANK_TOL: f64 = 1e-8;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// One draw of CN(0, variance).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVec {
    CVec::from_fn(len, |_, _| complex_normal(rng, variance))
}

/// Row-major fill so the draw order does not depend on nalgebra's storage.
pub fn complex_normal_mat<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_normal(rng, variance);
        }
    }
    m
}

pub fn fro_norm_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm_sq(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Elementwise conjugate without the transpose.
pub fn conj_vec(v: &CVec) -> CVec {
    v.map(|z| z.conj())
}

/// Unconjugated bilinear product aᵀb.
pub fn dot_t(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Conjugated inner product aᴴb.
pub fn dot_h(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Count of values above `RANK_TOL` times the largest. Values must be sorted descending.
pub fn rank_from_sorted(values: &[f64]) -> usize {
    match values.first() {
        Some(&top) if top > 0.0 => values.iter().filter(|&&v| v > RANK_TOL * top).count(),
        _ => 0,
    }
}

pub fn numeric_rank(m: &CMat) -> usize {
    rank_from_sorted(&singular_values(m))
}

/// Inverse of a Hermitian PSD matrix with a relative ridge `ridge · trace / n` added
/// when the plain Cholesky factorization fails.
pub fn hermitian_inverse_ridged(m: &CMat, ridge: f64) -> CMat {
    let n = m.nrows();
    if let Some(ch) = m.clone().cholesky() {
        return ch.inverse();
    }
    let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    let mut shift = ridge * (trace / n as f64).max(f64::MIN_POSITIVE);
    loop {
        let mut reg = m.clone();
        for i in 0..n {
            reg[(i, i)] += Complex64::new(shift, 0.0);
        }
        if let Some(ch) = reg.cholesky() {
            return ch.inverse();
        }
        shift *= 10.0;
    }
}

/// Moore–Penrose pseudo-inverse via SVD at the shared rank tolerance.
pub fn pseudo_inverse(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOL * top;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cutoff && sv > 0.0 {
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += (vk * uk) * Complex64::new(1.0 / sv, 0.0);
        }
    }
    out
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    let n = m.nrows();
    m.ncols() == n
        && (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}
