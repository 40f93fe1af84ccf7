//! Sparsity-aware recovery: weighted ℓ1 with partial support information, joint OMP over a
//! common support, nuclear-norm low-rank recovery, and Gaussian-mixture AMP with EM learning.

mod amp;
mod l1;
mod nuclear;
mod omp;

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

pub use amp::{bg_amp_em_recover, gm_amp_em_recover};
pub use l1::{weighted_l1_recover, EpsilonMode};
pub use nuclear::{nuclear_kill_threshold, nuclear_norm_recover, nuclear_optimality_gap, singular_value_threshold};
pub use omp::joint_omp_recover;

use crate::error::{invalid, Result};

/// Exact-recovery rule: ‖ĥ − h‖₂ ≤ 1e-4.
pub const EXACT_RECOVERY_TOL: f64 = 1e-4;

/// Partial support information `T̂` with its (generator-side) accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPrior {
    pub indices: BTreeSet<usize>,
    pub declared_size: usize,
    pub accuracy: f64,
}

impl SupportPrior {
    pub fn new(indices: BTreeSet<usize>, accuracy: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(invalid(format!("prior accuracy {accuracy} outside [0, 1]")));
        }
        let declared_size = indices.len();
        Ok(Self { indices, declared_size, accuracy })
    }

    pub fn empty() -> Self {
        Self { indices: BTreeSet::new(), declared_size: 0, accuracy: 0.0 }
    }

    /// `⌊α·ŝ⌋` indices drawn from the true support, the rest from its complement.
    pub fn fabricate<R: Rng + ?Sized>(
        true_support: &BTreeSet<usize>,
        antennas: usize,
        declared_size: usize,
        accuracy: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(invalid(format!("prior accuracy {accuracy} outside [0, 1]")));
        }
        let hits = (accuracy * declared_size as f64 + 1e-9).floor() as usize;
        let misses = declared_size - hits;
        let inside: Vec<usize> = true_support.iter().copied().collect();
        let outside: Vec<usize> = (0..antennas).filter(|i| !true_support.contains(i)).collect();
        if hits > inside.len() || misses > outside.len() {
            return Err(invalid(format!(
                "cannot place {hits} hits and {misses} misses around a support of size {}",
                inside.len()
            )));
        }
        let mut indices = BTreeSet::new();
        for i in sample(rng, inside.len(), hits) {
            indices.insert(inside[i]);
        }
        for i in sample(rng, outside.len(), misses) {
            indices.insert(outside[i]);
        }
        Ok(Self { indices, declared_size, accuracy })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub epsilon: f64,
    /// ℓ1 weights; empty means all ones.
    pub weights: Vec<f64>,
    pub nuclear_gamma: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub gm_components: usize,
    pub gm_spike_variance: f64,
    pub amp_damping: f64,
    /// Known noise variance for AMP; `None` learns it by EM.
    pub amp_noise_var: Option<f64>,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            weights: Vec::new(),
            nuclear_gamma: 1e-3,
            max_iterations: 2000,
            tolerance: 1e-6,
            gm_components: 2,
            gm_spike_variance: 1e-8,
            amp_damping: 0.8,
            amp_noise_var: None,
        }
    }
}

impl RecoveryConfig {
    /// Defaults with the AMP iteration budget.
    pub fn amp() -> Self {
        Self { max_iterations: 50, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon must be nonnegative"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights must be nonnegative"));
        }
        if !(self.nuclear_gamma > 0.0) {
            return Err(invalid(format!("nuclear_gamma must be positive, got {}", self.nuclear_gamma)));
        }
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if self.gm_components < 2 {
            return Err(invalid("gm_components must be at least 2"));
        }
        if !(self.gm_spike_variance >= 0.0) {
            return Err(invalid("gm_spike_variance must be nonnegative"));
        }
        if !(self.amp_damping > 0.0 && self.amp_damping <= 1.0) {
            return Err(invalid(format!("amp_damping must lie in (0, 1], got {}", self.amp_damping)));
        }
        if let Some(v) = self.amp_noise_var {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("amp_noise_var must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `w_i = 0` on the prior support, 1 elsewhere.
pub fn build_weights(prior: &SupportPrior, antennas: usize) -> Result<Vec<f64>> {
    if let Some(&bad) = prior.indices.iter().find(|&&i| i >= antennas) {
        return Err(invalid(format!("prior index {bad} >= M = {antennas}")));
    }
    Ok((0..antennas)
        .map(|i| if prior.indices.contains(&i) { 0.0 } else { 1.0 })
        .collect())
}

pub fn is_exact_recovery(estimate: &[num_complex::Complex64], truth: &[num_complex::Complex64]) -> bool {
    let err: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    err <= EXACT_RECOVERY_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn weight_cases() {
        assert!(build_weights(&SupportPrior::empty(), 5).unwrap().iter().all(|&w| w == 1.0));
        let all = SupportPrior::new((0..5).collect(), 1.0).unwrap();
        assert!(build_weights(&all, 5).unwrap().iter().all(|&w| w == 0.0));
        let mut rng = seeded(1);
        let truth: BTreeSet<usize> = (0..10).map(|i| i * 7).collect();
        let prior = SupportPrior::fabricate(&truth, 100, 10, 0.8, &mut rng).unwrap();
        let w = build_weights(&prior, 100).unwrap();
        assert_eq!(w.iter().filter(|&&v| v == 0.0).count(), 10);
        assert_eq!(prior.indices.intersection(&truth).count(), 8);
        let bad = SupportPrior::new([7usize].into_iter().collect(), 1.0).unwrap();
        assert!(build_weights(&bad, 5).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RecoveryConfig::default().validate().is_ok());
        let bad = RecoveryConfig { nuclear_gamma: 0.0, ..RecoveryConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RecoveryConfig { amp_damping: 0.0, ..RecoveryConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RecoveryConfig { gm_components: 1, ..RecoveryConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RecoveryConfig { amp_noise_var: Some(0.0), ..RecoveryConfig::default() };
        assert!(bad.validate().is_err());
    }
}
