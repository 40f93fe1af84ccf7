//! Pilot and training design plus synthetic received-training measurements.
//!
//! Uplink pilot sets are τ×K with unit-norm columns. Welch-bound-equality sets (and their
//! power-weighted generalization) are built by prescribing the Gram matrix of the
//! power-scaled frame: its diagonal must equal the powers and its nonzero spectrum must be
//! `Σp/τ` with multiplicity τ. Starting from a frame with the right spectrum, Givens
//! rotations of column pairs fix one diagonal entry at a time (Bendel–Mickey); unitary column
//! rotations never change `F·Fᴴ`, so the frame identity holds throughout.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{complex_normal, complex_normal_mat, norm_sq, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PilotScheme {
    Orthogonal,
    Wbe,
    Gwbe,
    Fos,
}

impl fmt::Display for PilotScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PilotScheme::Orthogonal => "orthogonal",
            PilotScheme::Wbe => "wbe",
            PilotScheme::Gwbe => "gwbe",
            PilotScheme::Fos => "fos",
        })
    }
}

#[derive(Debug, Clone)]
pub struct PilotSet {
    pub matrix: CMat,
    pub scheme: PilotScheme,
    /// Frame weights used by the GWBE design.
    pub powers: Option<Vec<f64>>,
    /// Per-UE uplink transmit power; the transmitted pilot is `√p · s_k`.
    pub tx_power: Vec<f64>,
}

impl PilotSet {
    fn new(matrix: CMat, scheme: PilotScheme, powers: Option<Vec<f64>>) -> Self {
        let k = matrix.ncols();
        Self { matrix, scheme, powers, tx_power: vec![1.0; k] }
    }

    pub fn length(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn users(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn with_tx_power(mut self, tx_power: Vec<f64>) -> Result<Self> {
        if tx_power.len() != self.users() || tx_power.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid("uplink pilot powers must be nonnegative, one per UE"));
        }
        self.tx_power = tx_power;
        Ok(self)
    }

    /// Pilot matrix with each column scaled by `√tx_power`.
    pub fn transmitted(&self) -> CMat {
        let mut m = self.matrix.clone();
        for (k, p) in self.tx_power.iter().enumerate() {
            let a = Complex64::new(p.sqrt(), 0.0);
            m.column_mut(k).iter_mut().for_each(|z| *z *= a);
        }
        m
    }

    pub fn gram(&self) -> CMat {
        self.matrix.adjoint() * &self.matrix
    }

    /// Weighted outer-product sum `Σ_k w_k s_k s_kᴴ`.
    pub fn weighted_frame_operator(&self, weights: &[f64]) -> CMat {
        let tau = self.length();
        let mut out = CMat::zeros(tau, tau);
        for (k, &w) in weights.iter().enumerate() {
            let s = self.matrix.column(k);
            out += (s * s.adjoint()) * Complex64::new(w, 0.0);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingKind {
    Gaussian,
    Toeplitz,
    OrthonormalRows,
}

#[derive(Debug, Clone)]
pub struct TrainingMatrix {
    pub matrix: CMat,
    pub kind: TrainingKind,
}

impl TrainingMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

#[derive(Debug, Clone)]
pub enum MeasurementPayload {
    /// One length-N vector per UE.
    Fdd(Vec<CVec>),
    /// τ×M matrix at the BS.
    Tdd(CMat),
}

#[derive(Debug, Clone)]
pub struct MeasurementBatch {
    pub payload: MeasurementPayload,
    pub noise_std: f64,
    /// Realized noise norm(s) ‖z‖₂, one per UE for FDD, one for TDD.
    pub noise_bound: Option<Vec<f64>>,
}

impl MeasurementBatch {
    pub fn fdd(&self) -> Option<&[CVec]> {
        match &self.payload {
            MeasurementPayload::Fdd(v) => Some(v),
            MeasurementPayload::Tdd(_) => None,
        }
    }

    pub fn tdd(&self) -> Option<&CMat> {
        match &self.payload {
            MeasurementPayload::Tdd(m) => Some(m),
            MeasurementPayload::Fdd(_) => None,
        }
    }
}

pub fn make_orthogonal_pilots(tau: usize, users: usize) -> Result<PilotSet> {
    if users == 0 || users > tau {
        return Err(invalid(format!(
            "{users} orthogonal pilots do not fit in length {tau}"
        )));
    }
    let scale = 1.0 / (tau as f64).sqrt();
    let m = CMat::from_fn(tau, users, |r, c| {
        Complex64::from_polar(scale, -2.0 * PI * ((r * c) % tau) as f64 / tau as f64)
    });
    Ok(PilotSet::new(m, PilotScheme::Orthogonal, None))
}

pub fn make_wbe_pilots(tau: usize, users: usize) -> Result<PilotSet> {
    if tau == 0 || users < tau {
        return Err(invalid(format!(
            "WBE sequences need K >= tau, got K={users}, tau={tau}"
        )));
    }
    let frame = weighted_tight_frame(tau, &vec![1.0; users]);
    Ok(PilotSet::new(normalize_columns(frame), PilotScheme::Wbe, None))
}

/// Generalized WBE: `Σ p_k s_k s_kᴴ = (Σp/τ) I`. Every weight must stay strictly below `Σp/τ`
/// when `K > τ`; with `K = τ` only equal weights are realizable.
pub fn make_gwbe_pilots(tau: usize, powers: &[f64]) -> Result<PilotSet> {
    let users = powers.len();
    if tau == 0 || users < tau {
        return Err(invalid(format!(
            "GWBE sequences need K >= tau, got K={users}, tau={tau}"
        )));
    }
    if powers.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(invalid("GWBE powers must be positive and finite"));
    }
    let total: f64 = powers.iter().sum();
    let level = total / tau as f64;
    if users == tau {
        let spread = powers.iter().fold(0.0f64, |m, p| m.max((p - level).abs()));
        if spread > 1e-12 * level {
            return Err(invalid(format!(
                "majorization violated: with K = tau = {tau} all powers must equal {level}"
            )));
        }
    } else if let Some((k, p)) = powers.iter().enumerate().find(|(_, p)| **p >= level) {
        return Err(invalid(format!(
            "majorization violated: power[{k}] = {p} is not below sum/tau = {level}"
        )));
    }
    let frame = weighted_tight_frame(tau, powers);
    Ok(PilotSet::new(
        normalize_columns(frame),
        PilotScheme::Gwbe,
        Some(powers.to_vec()),
    ))
}

/// UE `k` gets standard basis vector `e_{assignment[k]}`.
pub fn make_fos_pilots(tau: usize, assignment: &[usize]) -> Result<PilotSet> {
    if let Some((k, &a)) = assignment.iter().enumerate().find(|(_, &a)| a >= tau) {
        return Err(invalid(format!("UE {k} assigned sequence {a} >= tau = {tau}")));
    }
    let mut m = CMat::zeros(tau, assignment.len());
    for (k, &a) in assignment.iter().enumerate() {
        m[(a, k)] = Complex64::new(1.0, 0.0);
    }
    Ok(PilotSet::new(m, PilotScheme::Fos, None))
}

pub fn round_robin_assignment(tau: usize, users: usize) -> Vec<usize> {
    (0..users).map(|k| k % tau).collect()
}

/// τ×K frame `F` with `F·Fᴴ = (Σw/τ)·I` and `‖f_k‖² = w_k`. Caller checks majorization.
fn weighted_tight_frame(tau: usize, weights: &[f64]) -> CMat {
    let users = weights.len();
    let level = weights.iter().sum::<f64>() / tau as f64;
    let mut f = CMat::zeros(tau, users);
    for i in 0..tau {
        f[(i, i)] = Complex64::new(level.sqrt(), 0.0);
    }
    let scale = weights.iter().fold(0.0f64, |m, w| m.max(*w));
    let tol = 1e-14 * scale.max(1.0);
    for _ in 0..4 * users {
        let norms: Vec<f64> = (0..users).map(|k| f.column(k).norm_squared()).collect();
        let low = (0..users).find(|&k| norms[k] < weights[k] - tol);
        let high = (0..users).find(|&k| norms[k] > weights[k] + tol);
        let (i, j) = match (low, high) {
            (Some(i), Some(j)) => (i, j),
            _ => break,
        };
        let (a, b) = (norms[i], norms[j]);
        let target = a + (weights[i] - a).min(b - weights[j]);
        rotate_to_norm(&mut f, i, j, a, b, target);
    }
    f
}

/// Rotate columns `i, j` so that `‖f_i‖²` becomes `target` (which lies between `a` and `b`).
fn rotate_to_norm(f: &mut CMat, i: usize, j: usize, a: f64, b: f64, target: f64) {
    let g: Complex64 = f.column(i).dotc(&f.column(j));
    let phase = if g.norm() > 0.0 {
        Complex64::from_polar(1.0, -g.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    // ‖f_i'‖² = (a+b)/2 + (a-b)/2·cos2θ + |g|·sin2θ
    let half_diff = (a - b) / 2.0;
    let amp = half_diff.hypot(g.norm());
    let phi0 = g.norm().atan2(half_diff);
    let ratio = if amp > 0.0 {
        ((target - (a + b) / 2.0) / amp).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    let theta = (phi0 + ratio.acos()) / 2.0;
    let (s, c) = theta.sin_cos();
    let fi = f.column(i).clone_owned();
    let fj = f.column(j).clone_owned();
    let new_i = &fi * Complex64::new(c, 0.0) + &fj * (phase * s);
    let new_j = &fj * Complex64::new(c, 0.0) - &fi * (phase.conj() * s);
    f.set_column(i, &new_i);
    f.set_column(j, &new_j);
}

fn normalize_columns(mut m: CMat) -> CMat {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= Complex64::new(n, 0.0);
        }
    }
    m
}

/// Entries i.i.d. CN(0, 1/N), filled row-major.
pub fn make_gaussian_training<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<TrainingMatrix> {
    if rows == 0 || cols == 0 {
        return Err(invalid("training matrix dimensions must be positive"));
    }
    Ok(TrainingMatrix {
        matrix: complex_normal_mat(rng, rows, cols, 1.0 / rows as f64),
        kind: TrainingKind::Gaussian,
    })
}

/// Entry `(i, j)` is generator `i − j + M − 1`; N+M−1 i.i.d. CN(0, 1/N) generators.
pub fn make_toeplitz_training<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<TrainingMatrix> {
    if rows == 0 || cols == 0 {
        return Err(invalid("training matrix dimensions must be positive"));
    }
    let var = 1.0 / rows as f64;
    let gens: Vec<Complex64> = (0..rows + cols - 1).map(|_| complex_normal(rng, var)).collect();
    Ok(TrainingMatrix {
        matrix: CMat::from_fn(rows, cols, |i, j| gens[i + cols - 1 - j]),
        kind: TrainingKind::Toeplitz,
    })
}

/// Gaussian draw with orthonormalized rows (requires N ≤ M).
pub fn make_orthonormal_rows_training<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<TrainingMatrix> {
    if rows == 0 || rows > cols {
        return Err(invalid(format!("orthonormal rows need 0 < N <= M, got N={rows}, M={cols}")));
    }
    let g = complex_normal_mat(rng, cols, rows, 1.0);
    let q = g.qr().q();
    Ok(TrainingMatrix { matrix: q.adjoint(), kind: TrainingKind::OrthonormalRows })
}

/// FDD downlink training at one UE group: `y_k = Σ_l S_l h_{l,k} + z_k`.
///
/// `channels[k][l]` is the channel from BS `l` to UE `k`; `training[l]` is cell `l`'s matrix.
pub fn fdd_downlink_measure<R: Rng + ?Sized>(
    training: &[TrainingMatrix],
    channels: &[Vec<CVec>],
    noise_std: f64,
    bounded_noise: bool,
    rng: &mut R,
) -> Result<MeasurementBatch> {
    let first = training.first().ok_or_else(|| invalid("no training matrices"))?;
    let (n, m) = (first.rows(), first.cols());
    if training.iter().any(|t| t.rows() != n || t.cols() != m) {
        return Err(invalid("training matrices must share N and M"));
    }
    if !(noise_std >= 0.0) {
        return Err(invalid("noise_std must be nonnegative"));
    }
    let mut out = Vec::with_capacity(channels.len());
    let mut bounds = Vec::with_capacity(channels.len());
    for (k, per_cell) in channels.iter().enumerate() {
        if per_cell.len() != training.len() {
            return Err(invalid(format!(
                "UE {k}: {} channels for {} cells",
                per_cell.len(),
                training.len()
            )));
        }
        let mut y = CVec::zeros(n);
        for (s, h) in training.iter().zip(per_cell) {
            if h.len() != m {
                return Err(invalid(format!("UE {k}: channel length {} != M = {m}", h.len())));
            }
            y += &s.matrix * h;
        }
        let mut z = CVec::zeros(n);
        if noise_std > 0.0 {
            z = crate::linalg::complex_normal_vec(rng, n, noise_std * noise_std);
            y += &z;
        }
        bounds.push(norm_sq(&z).sqrt());
        out.push(y);
    }
    Ok(MeasurementBatch {
        payload: MeasurementPayload::Fdd(out),
        noise_std,
        noise_bound: bounded_noise.then_some(bounds),
    })
}

/// TDD uplink training at BS i: `Y_i = Σ_l S_l H_{i,l} + Z_i` with `H_{i,l}` K×M.
pub fn tdd_uplink_measure<R: Rng + ?Sized>(
    pilots: &[PilotSet],
    channels: &[CMat],
    noise_std: f64,
    rng: &mut R,
) -> Result<MeasurementBatch> {
    let first = pilots.first().ok_or_else(|| invalid("no pilot sets"))?;
    let tau = first.length();
    if pilots.len() != channels.len() {
        return Err(invalid(format!(
            "{} pilot sets for {} channel blocks",
            pilots.len(),
            channels.len()
        )));
    }
    let m = channels[0].ncols();
    let mut y = CMat::zeros(tau, m);
    for (l, (s, h)) in pilots.iter().zip(channels).enumerate() {
        if s.length() != tau {
            return Err(invalid(format!("cell {l}: pilot length {} != {tau}", s.length())));
        }
        if h.nrows() != s.users() || h.ncols() != m {
            return Err(invalid(format!(
                "cell {l}: channel block {}x{} does not match {} UEs x {m} antennas",
                h.nrows(),
                h.ncols(),
                s.users()
            )));
        }
        y += s.transmitted() * h;
    }
    let mut z_norm = 0.0;
    if noise_std > 0.0 {
        let z = complex_normal_mat(rng, tau, m, noise_std * noise_std);
        z_norm = z.norm();
        y += z;
    }
    Ok(MeasurementBatch {
        payload: MeasurementPayload::Tdd(y),
        noise_std,
        noise_bound: Some(vec![z_norm]),
    })
}
