//! Classical estimators: least squares on uplink training, covariance-aided MMSE
//! decontamination, and coordinated pilot allocation from AoA ranges.

use num_complex::Complex64;

use crate::channel::{AoaRange, CovarianceModel};
use crate::error::{invalid, CsiError, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_inverse_ridged, pseudo_inverse, rank_from_sorted, CMat, CVec};
use crate::report::{Estimate, EstimateReport, Method};
use crate::training::{MeasurementBatch, PilotSet};

/// Relative diagonal loading applied to every MMSE inverse.
pub const MMSE_RIDGE: f64 = 1e-10;

/// `Ĥ = (SᴴS)⁻¹SᴴY` using the transmitted (power-scaled) pilots.
pub fn ls_estimate(measurement: &MeasurementBatch, pilots: &PilotSet) -> Result<EstimateReport> {
    let y = measurement
        .tdd()
        .ok_or_else(|| invalid("LS estimation needs a TDD measurement"))?;
    let s = pilots.transmitted();
    if s.nrows() != y.nrows() {
        return Err(invalid(format!(
            "pilot length {} != measurement rows {}",
            s.nrows(),
            y.nrows()
        )));
    }
    let gram = s.adjoint() * &s;
    let rank = rank_from_sorted(&hermitian_eigenvalues(&gram));
    if rank < s.ncols() {
        return Err(CsiError::RankDeficient {
            name: format!("{} pilots ({}x{})", pilots.scheme, s.nrows(), s.ncols()),
            rank,
            expected: s.ncols(),
        });
    }
    let chol = gram.cholesky().ok_or_else(|| CsiError::RankDeficient {
        name: format!("{} pilots ({}x{})", pilots.scheme, s.nrows(), s.ncols()),
        rank,
        expected: s.ncols(),
    })?;
    let h = chol.solve(&(s.adjoint() * y));
    let residual = (y - &s * &h).norm();
    Ok(EstimateReport::new(Estimate::Matrix(h), Method::Ls, residual))
}

/// Minimum-norm least squares `S⁺Y`, defined for any pilot matrix.
pub fn ls_min_norm(y: &CMat, pilots: &CMat) -> EstimateReport {
    let h = pseudo_inverse(pilots) * y;
    let residual = (y - pilots * &h).norm();
    EstimateReport::new(Estimate::Matrix(h), Method::Ls, residual)
}

/// Precomputed `R_d (σ²I + R_d + Σ R_l)⁻¹`, reusable across trials.
#[derive(Debug, Clone)]
pub struct MmseFilter {
    matrix: CMat,
}

impl MmseFilter {
    pub fn new(desired: &CovarianceModel, interferers: &[CovarianceModel], noise_var: f64) -> Result<Self> {
        let m = desired.dim();
        if !(noise_var >= 0.0) {
            return Err(invalid("noise variance must be nonnegative"));
        }
        if let Some(bad) = interferers.iter().find(|r| r.dim() != m) {
            return Err(invalid(format!("interferer covariance is {0}x{0}, expected {m}x{m}", bad.dim())));
        }
        let mut total = desired.matrix.clone();
        for r in interferers {
            total += &r.matrix;
        }
        let trace: f64 = (0..m).map(|i| total[(i, i)].re).sum();
        let load = noise_var + MMSE_RIDGE * trace / m as f64;
        for i in 0..m {
            total[(i, i)] += Complex64::new(load, 0.0);
        }
        let inv = hermitian_inverse_ridged(&total, MMSE_RIDGE);
        Ok(Self { matrix: &desired.matrix * inv })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, ls_row: &CVec) -> Result<CVec> {
        if ls_row.len() != self.matrix.ncols() {
            return Err(invalid(format!(
                "LS row has length {}, filter expects {}",
                ls_row.len(),
                self.matrix.ncols()
            )));
        }
        Ok(&self.matrix * ls_row)
    }
}

pub fn mmse_decontaminate(
    ls_row: &CVec,
    desired: &CovarianceModel,
    interferers: &[CovarianceModel],
    noise_var: f64,
) -> Result<EstimateReport> {
    let est = MmseFilter::new(desired, interferers, noise_var)?.apply(ls_row)?;
    let residual = (ls_row - &est).norm();
    Ok(EstimateReport::new(Estimate::Vector(est), Method::Mmse, residual))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotAllocation {
    /// `assignment[cell][ue]` is the pilot index.
    pub assignment: Vec<Vec<usize>>,
    pub conflict_count: usize,
}

/// Number of cross-cell co-pilot pairs whose AoA ranges overlap.
pub fn count_conflicts(ranges: &[Vec<AoaRange>], assignment: &[Vec<usize>]) -> usize {
    let mut count = 0;
    for (c, cell) in ranges.iter().enumerate() {
        for (u, r) in cell.iter().enumerate() {
            for (d, other) in ranges.iter().enumerate().skip(c + 1) {
                for (v, q) in other.iter().enumerate() {
                    if assignment[c][u] == assignment[d][v] && r.overlaps(q) {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Pilot `k` for UE slot `k` in every cell.
pub fn identity_allocation(ranges: &[Vec<AoaRange>]) -> Vec<Vec<usize>> {
    ranges.iter().map(|cell| (0..cell.len()).collect()).collect()
}

/// Greedy Welsh–Powell colouring of the cross-cell overlap graph, widest AoA range first,
/// followed by a swap-based local search. Within a cell pilots are always distinct.
pub fn allocate_pilots_by_aoa(ranges: &[Vec<AoaRange>], tau: usize) -> Result<PilotAllocation> {
    if ranges.is_empty() {
        return Err(invalid("no cells to allocate"));
    }
    if let Some(cell) = ranges.iter().find(|c| c.len() > tau) {
        return Err(invalid(format!("{} UEs in a cell but only {tau} pilots", cell.len())));
    }
    let mut order: Vec<(usize, usize)> = ranges
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| (0..cell.len()).map(move |u| (c, u)))
        .collect();
    order.sort_by(|a, b| {
        let wa = ranges[a.0][a.1].width();
        let wb = ranges[b.0][b.1].width();
        wb.total_cmp(&wa).then(a.cmp(b))
    });

    let mut greedy: Vec<Vec<Option<usize>>> = ranges.iter().map(|c| vec![None; c.len()]).collect();
    for &(c, u) in &order {
        let mut best = None;
        for pilot in 0..tau {
            if greedy[c].contains(&Some(pilot)) {
                continue;
            }
            let clashes = ranges
                .iter()
                .enumerate()
                .filter(|(d, _)| *d != c)
                .flat_map(|(d, cell)| cell.iter().enumerate().map(move |(v, q)| (d, v, q)))
                .filter(|(d, v, q)| greedy[*d][*v] == Some(pilot) && ranges[c][u].overlaps(q))
                .count();
            if best.is_none_or(|(_, b)| clashes < b) {
                best = Some((pilot, clashes));
            }
            if clashes == 0 {
                break;
            }
        }
        greedy[c][u] = best.map(|(p, _)| p);
    }
    let greedy: Vec<Vec<usize>> = greedy
        .into_iter()
        .map(|cell| cell.into_iter().map(|p| p.expect("every UE coloured")).collect())
        .collect();

    let a = local_search(ranges, greedy, tau);
    let b = local_search(ranges, identity_allocation(ranges), tau);
    let (ca, cb) = (count_conflicts(ranges, &a), count_conflicts(ranges, &b));
    Ok(if ca <= cb {
        PilotAllocation { assignment: a, conflict_count: ca }
    } else {
        PilotAllocation { assignment: b, conflict_count: cb }
    })
}

/// First-improvement search over intra-cell moves: swap two UEs' pilots or move a UE to an
/// unused pilot.
fn local_search(ranges: &[Vec<AoaRange>], mut assign: Vec<Vec<usize>>, tau: usize) -> Vec<Vec<usize>> {
    let mut current = count_conflicts(ranges, &assign);
    loop {
        let mut improved = false;
        'cells: for c in 0..assign.len() {
            let n = assign[c].len();
            for u in 0..n {
                for target in 0..tau {
                    if target == assign[c][u] {
                        continue;
                    }
                    let old = assign[c].clone();
                    if let Some(v) = assign[c].iter().position(|&p| p == target) {
                        assign[c].swap(u, v);
                    } else {
                        assign[c][u] = target;
                    }
                    let next = count_conflicts(ranges, &assign);
                    if next < current {
                        current = next;
                        improved = true;
                        continue 'cells;
                    }
                    assign[c] = old;
                }
            }
        }
        if !improved || current == 0 {
            return assign;
        }
    }
}
