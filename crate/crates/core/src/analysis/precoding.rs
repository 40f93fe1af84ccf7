use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{complex_normal, conj_vec, dot_t, norm_sq, CVec};

/// Downlink precoding setup for the UEs served by one BS.
#[derive(Debug, Clone)]
pub struct PrecodingScenario {
    pub csi: Vec<CVec>,
    pub truth: Vec<CVec>,
    pub data_symbol_power: f64,
    pub power_allocation: Vec<f64>,
}

impl PrecodingScenario {
    pub fn new(csi: Vec<CVec>, truth: Vec<CVec>, power_allocation: Vec<f64>) -> Result<Self> {
        if csi.len() != truth.len() || csi.len() != power_allocation.len() {
            return Err(invalid(format!(
                "csi ({}), truth ({}) and powers ({}) must agree in UE count",
                csi.len(),
                truth.len(),
                power_allocation.len()
            )));
        }
        if csi.iter().zip(&truth).any(|(a, b)| a.len() != b.len()) {
            return Err(invalid("csi and truth vector lengths differ"));
        }
        if power_allocation.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid("downlink powers must be nonnegative"));
        }
        Ok(Self { csi, truth, data_symbol_power: 1.0, power_allocation })
    }

    pub fn precoders(&self) -> Result<Vec<CVec>> {
        mrt_precoder(&self.csi)
    }
}

/// `w_k = conj(ĥ_k) / ‖ĥ_k‖`.
pub fn mrt_precoder(csi: &[CVec]) -> Result<Vec<CVec>> {
    csi.iter()
        .enumerate()
        .map(|(k, h)| {
            let n = norm_sq(h).sqrt();
            if n == 0.0 {
                return Err(invalid(format!("UE {k}: zero channel estimate")));
            }
            Ok(conj_vec(h) / Complex64::new(n, 0.0))
        })
        .collect()
}

/// One draw of `h′_victim · Σ_k √P_k w_k x_k` with unit-power Gaussian symbols.
pub fn downlink_interference<R: Rng + ?Sized>(
    scenario: &PrecodingScenario,
    victim: &CVec,
    rng: &mut R,
) -> Result<Complex64> {
    let w = scenario.precoders()?;
    if let Some(bad) = w.iter().find(|w| w.len() != victim.len()) {
        return Err(invalid(format!("victim length {} != precoder length {}", victim.len(), bad.len())));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (wk, p) in w.iter().zip(&scenario.power_allocation) {
        let x = complex_normal(rng, scenario.data_symbol_power);
        total += dot_t(victim, wk) * p.sqrt() * x;
    }
    Ok(total)
}

/// Symbol-averaged power `Σ_k P_k |h′ w_k|²` of the same sum.
pub fn interference_power(victim: &CVec, precoders: &[CVec], powers: &[f64]) -> f64 {
    precoders
        .iter()
        .zip(powers)
        .map(|(w, p)| p * dot_t(victim, w).norm_sqr())
        .sum()
}
