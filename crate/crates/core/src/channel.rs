//! Channel synthesis: DFT angular basis, sparse angular channels, ULA steering vectors,
//! finite-path multipath channels, AoA-range covariances and low-rank multiuser matrices.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{
    complex_normal, complex_normal_mat, complex_normal_vec, hermitian_eigenvalues,
    rank_from_sorted, CMat, CVec,
};

pub const DEFAULT_SPACING: f64 = 0.5;
pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemGeometry {
    pub cells: usize,
    pub ues_per_cell: usize,
    pub antennas: usize,
    pub antenna_spacing: f64,
}

impl SystemGeometry {
    pub fn new(cells: usize, ues_per_cell: usize, antennas: usize, antenna_spacing: f64) -> Result<Self> {
        if cells == 0 || ues_per_cell == 0 || antennas == 0 {
            return Err(invalid("cells, UEs per cell and antennas must all be positive"));
        }
        if !(antenna_spacing > 0.0) {
            return Err(invalid(format!("antenna spacing must be positive, got {antenna_spacing}")));
        }
        Ok(Self { cells, ues_per_cell, antennas, antenna_spacing })
    }

    pub fn total_ues(&self) -> usize {
        self.cells * self.ues_per_cell
    }
}

/// Closed interval of angles of arrival, radians, inside the front half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaRange {
    pub min: f64,
    pub max: f64,
}

impl AoaRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min <= max) {
            return Err(invalid(format!("empty AoA range [{min}, {max}]")));
        }
        if min < -FRAC_PI_2 - 1e-12 || max > FRAC_PI_2 + 1e-12 {
            return Err(invalid(format!("AoA range [{min}, {max}] leaves [-pi/2, pi/2]")));
        }
        Ok(Self { min, max })
    }

    pub fn centered(center: f64, width: f64) -> Result<Self> {
        Self::new(center - width / 2.0, center + width / 2.0)
    }

    pub fn full() -> Self {
        Self { min: -FRAC_PI_2, max: FRAC_PI_2 }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.min && theta <= self.max
    }

    pub fn overlaps(&self, other: &AoaRange) -> bool {
        self.min <= other.max && other.min <= self.max
    }
}

/// Sparse angular-domain channel; `support` always mirrors the nonzero entries of `coeffs`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularChannel {
    coeffs: CVec,
    support: BTreeSet<usize>,
}

impl AngularChannel {
    pub fn from_coeffs(coeffs: CVec) -> Self {
        let support = coeffs
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { coeffs, support }
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Spatial-domain channel `U · coeffs`, summed over the support only.
    pub fn to_dense(&self) -> CVec {
        let m = self.coeffs.len();
        let scale = 1.0 / (m as f64).sqrt();
        let mut h = CVec::zeros(m);
        for &j in &self.support {
            let c = self.coeffs[j] * scale;
            for (row, out) in h.iter_mut().enumerate() {
                *out += c * dft_entry(m, row, j);
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    pub gains: CVec,
    pub aoas: Vec<f64>,
    pub aoa_range: AoaRange,
}

impl MultipathChannel {
    pub fn path_count(&self) -> usize {
        self.gains.len()
    }

    pub fn to_dense(&self, antennas: usize, spacing: f64) -> CVec {
        let p = self.gains.len() as f64;
        let mut h = CVec::zeros(antennas);
        for (g, &theta) in self.gains.iter().zip(&self.aoas) {
            h += steering_vector(theta, antennas, spacing) * *g;
        }
        h / Complex64::new(p.sqrt(), 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub matrix: CMat,
    pub aoa_range: AoaRange,
    pub numeric_rank: usize,
}

impl CovarianceModel {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

#[derive(Debug, Clone)]
pub struct LowRankFactor {
    pub gains: CMat,
    pub steering: CMat,
}

/// Stacked UE-to-BS channels, one row per UE, with an optional `H = G·A` factorization.
#[derive(Debug, Clone)]
pub struct MultiUserChannelMatrix {
    pub matrix: CMat,
    pub factor: Option<LowRankFactor>,
    pub rank_param: Option<usize>,
}

impl MultiUserChannelMatrix {
    pub fn from_matrix(matrix: CMat) -> Self {
        Self { matrix, factor: None, rank_param: None }
    }

    pub fn ues(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.matrix.ncols()
    }
}

fn dft_entry(m: usize, row: usize, col: usize) -> Complex64 {
    // Reduce the exponent mod M first to keep the phase argument small.
    let k = (row * col) % m;
    Complex64::from_polar(1.0, -2.0 * PI * k as f64 / m as f64)
}

/// Unitary DFT basis; column `j` holds `exp(-i 2π j m / M) / √M`.
pub fn dft_basis(antennas: usize) -> Result<CMat> {
    if antennas == 0 {
        return Err(invalid("DFT basis needs at least one antenna"));
    }
    let scale = 1.0 / (antennas as f64).sqrt();
    Ok(CMat::from_fn(antennas, antennas, |r, c| dft_entry(antennas, r, c) * scale))
}

pub fn synthesize_angular_channel<R: Rng + ?Sized>(
    antennas: usize,
    sparsity: usize,
    rng: &mut R,
) -> Result<AngularChannel> {
    if sparsity > antennas {
        return Err(invalid(format!("sparsity {sparsity} exceeds antenna count {antennas}")));
    }
    let mut idx = sample(rng, antennas, sparsity).into_vec();
    idx.sort_unstable();
    Ok(angular_from_support(antennas, &idx, rng))
}

fn angular_from_support<R: Rng + ?Sized>(antennas: usize, support: &[usize], rng: &mut R) -> AngularChannel {
    let mut coeffs = CVec::zeros(antennas);
    for &i in support {
        let mut z = complex_normal(rng, 1.0);
        // A zero draw would silently shrink the support.
        while z.norm() == 0.0 {
            z = complex_normal(rng, 1.0);
        }
        coeffs[i] = z;
    }
    AngularChannel::from_coeffs(coeffs)
}

/// `K` angular channels sharing `s_common` indices; the private parts are pairwise disjoint.
pub fn synthesize_common_support_group<R: Rng + ?Sized>(
    antennas: usize,
    ues: usize,
    sparsity: usize,
    common: usize,
    rng: &mut R,
) -> Result<(BTreeSet<usize>, Vec<AngularChannel>)> {
    if common > sparsity || sparsity > antennas {
        return Err(invalid(format!(
            "need s_common <= s <= M, got s_common={common}, s={sparsity}, M={antennas}"
        )));
    }
    let private = sparsity - common;
    if ues * private + common > antennas {
        return Err(invalid(format!(
            "K*(s - s_common) + s_common = {} exceeds M = {antennas}",
            ues * private + common
        )));
    }
    let perm = sample(rng, antennas, ues * private + common).into_vec();
    let shared: BTreeSet<usize> = perm[..common].iter().copied().collect();
    let channels = (0..ues)
        .map(|k| {
            let start = common + k * private;
            let mut idx: Vec<usize> = shared.iter().copied().collect();
            idx.extend_from_slice(&perm[start..start + private]);
            idx.sort_unstable();
            angular_from_support(antennas, &idx, rng)
        })
        .collect();
    Ok((shared, channels))
}

/// ULA response with phase reference at element 0.
pub fn steering_vector(theta: f64, antennas: usize, spacing: f64) -> CVec {
    let phase = -2.0 * PI * spacing * theta.sin();
    CVec::from_fn(antennas, |m, _| Complex64::from_polar(1.0, phase * m as f64))
}

pub fn synthesize_multipath_channel<R: Rng + ?Sized>(
    paths: usize,
    range: AoaRange,
    antennas: usize,
    spacing: f64,
    rng: &mut R,
) -> Result<(MultipathChannel, CVec)> {
    if paths == 0 {
        return Err(invalid("multipath channel needs at least one path"));
    }
    let gains = complex_normal_vec(rng, paths, 1.0);
    let aoas: Vec<f64> = (0..paths)
        .map(|_| {
            if range.width() > 0.0 {
                rng.random_range(range.min..=range.max)
            } else {
                range.min
            }
        })
        .collect();
    let ch = MultipathChannel { gains, aoas, aoa_range: range };
    let h = ch.to_dense(antennas, spacing);
    Ok((ch, h))
}

/// i.i.d. Rayleigh channel, CN(0, I_M).
pub fn synthesize_rayleigh_channel<R: Rng + ?Sized>(antennas: usize, rng: &mut R) -> CVec {
    complex_normal_vec(rng, antennas, 1.0)
}

/// Grid average of `a(θ)a(θ)ᴴ` over the AoA range, trace-normalized to `M`.
///
/// The ULA covariance is Toeplitz, so only the `2M - 1` lag values are accumulated.
pub fn covariance_from_aoa_range(
    range: AoaRange,
    antennas: usize,
    spacing: f64,
    grid_points: usize,
) -> Result<CovarianceModel> {
    if grid_points < 2 {
        return Err(invalid("covariance grid needs at least two points"));
    }
    if antennas == 0 {
        return Err(invalid("covariance needs at least one antenna"));
    }
    let mut lags = vec![Complex64::new(0.0, 0.0); antennas];
    let step = range.width() / (grid_points - 1) as f64;
    for g in 0..grid_points {
        let theta = range.min + step * g as f64;
        let phase = -2.0 * PI * spacing * theta.sin();
        for (d, lag) in lags.iter_mut().enumerate() {
            *lag += Complex64::from_polar(1.0, phase * d as f64);
        }
    }
    let norm = 1.0 / grid_points as f64;
    for lag in &mut lags {
        *lag *= norm;
    }
    // lags[0] == 1 exactly, so trace(R) == M without further scaling.
    let matrix = CMat::from_fn(antennas, antennas, |m, n| {
        if m >= n {
            lags[m - n]
        } else {
            lags[n - m].conj()
        }
    });
    let numeric_rank = rank_from_sorted(&hermitian_eigenvalues(&matrix));
    Ok(CovarianceModel { matrix, aoa_range: range, numeric_rank })
}

pub fn synthesize_lowrank_multiuser<R: Rng + ?Sized>(
    total_ues: usize,
    antennas: usize,
    aoas: &[f64],
    spacing: f64,
    rng: &mut R,
) -> Result<MultiUserChannelMatrix> {
    let rank = aoas.len();
    if rank == 0 || rank > total_ues.min(antennas) {
        return Err(invalid(format!(
            "rank {rank} must lie in 1..=min(KL={total_ues}, M={antennas})"
        )));
    }
    for (i, a) in aoas.iter().enumerate() {
        if aoas[..i].iter().any(|b| (a - b).abs() < 1e-12) {
            return Err(invalid(format!("repeated angle {a} in low-rank steering set")));
        }
        if a.abs() > FRAC_PI_2 + 1e-12 {
            return Err(invalid(format!("angle {a} outside [-pi/2, pi/2]")));
        }
    }
    let scale = Complex64::new(1.0 / (antennas as f64).sqrt(), 0.0);
    let mut steering = CMat::zeros(rank, antennas);
    for (r, &phi) in aoas.iter().enumerate() {
        let a = steering_vector(phi, antennas, spacing);
        for m in 0..antennas {
            steering[(r, m)] = a[m] * scale;
        }
    }
    let gains = complex_normal_mat(rng, total_ues, rank, 1.0);
    let matrix = &gains * &steering;
    Ok(MultiUserChannelMatrix {
        matrix,
        factor: Some(LowRankFactor { gains, steering }),
        rank_param: Some(rank),
    })
}
