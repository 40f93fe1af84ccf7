use num_complex::Complex64;

use super::metrics::{mean, to_db};
use super::precoding::mrt_precoder;
use super::runner::{ExperimentSpec, MetricRecord, SweepParam};
use crate::error::{invalid, CsiError, Result};
use crate::linalg::{complex_normal_mat, dot_t, CMat, CVec};
use crate::parallel::map_indexed;
use crate::rng::trial_stream;
use crate::training::{
    make_fos_pilots, make_gwbe_pilots, make_orthogonal_pilots, make_wbe_pilots, round_robin_assignment, PilotScheme,
    PilotSet,
};

/// Per-UE SINR requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTargets {
    pub gammas: Vec<f64>,
}

impl SinrTargets {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.iter().any(|g| !(*g > 0.0)) {
            return Err(invalid("SINR targets must be positive"));
        }
        Ok(Self { gammas })
    }

    /// `K = len(levels)·l` UEs; the first `l` get `levels[0]`, the next `l` get `levels[1]`, and so on.
    pub fn pattern(levels: &[f64], l: usize) -> Result<Self> {
        Self::new(levels.iter().flat_map(|&g| std::iter::repeat_n(g, l)).collect())
    }

    /// Downlink powers `P_k = γ_k / (1 + γ_k)`.
    pub fn power_allocation(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| g / (1.0 + g)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityParams {
    pub levels: Vec<f64>,
    pub antennas: usize,
    pub trials: usize,
    pub training_noise_std: f64,
    pub downlink_noise_var: f64,
    pub slack: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for CapacityParams {
    fn default() -> Self {
        Self {
            levels: vec![1.0 / 3.0, 1.0, 3.0],
            antennas: 2048,
            trials: 20,
            training_noise_std: 0.1,
            downlink_noise_var: 0.01,
            slack: 0.05,
            seed: 42,
            threads: 1,
        }
    }
}

/// Measured SINRs at one probed UE count.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityProbe {
    pub users: usize,
    /// `None` when the scheme cannot be built at this size.
    pub sinr: Option<Vec<f64>>,
    pub targets: Vec<f64>,
    pub admissible: bool,
}

impl CapacityProbe {
    pub fn satisfied_fraction(&self, slack: f64) -> f64 {
        match &self.sinr {
            None => 0.0,
            Some(s) => {
                let ok = s.iter().zip(&self.targets).filter(|(s, g)| **s >= **g * (1.0 - slack)).count();
                ok as f64 / s.len() as f64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub tau: usize,
    pub scheme: PilotScheme,
    pub admissible_users: usize,
    pub probes: Vec<CapacityProbe>,
}

/// Pilots for `K` UEs of length τ under the given scheme; orthogonal whenever `K ≤ τ`.
pub fn capacity_pilots(scheme: PilotScheme, tau: usize, powers: &[f64]) -> Result<PilotSet> {
    let k = powers.len();
    if k <= tau {
        return make_orthogonal_pilots(tau, k);
    }
    match scheme {
        PilotScheme::Orthogonal => Err(invalid(format!("no orthogonal set of {k} sequences of length {tau}"))),
        PilotScheme::Wbe => make_wbe_pilots(tau, k),
        PilotScheme::Fos => make_fos_pilots(tau, &round_robin_assignment(tau, k)),
        PilotScheme::Gwbe => gwbe_with_dominant_users(tau, powers),
    }
}

/// GWBE where UEs whose weight reaches `Σ/d` over the remaining dimensions get a private
/// basis vector and the rest share a GWBE frame on the leftover dimensions.
pub fn gwbe_with_dominant_users(tau: usize, powers: &[f64]) -> Result<PilotSet> {
    let k = powers.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]).then(a.cmp(&b)));
    let mut dims = tau;
    let mut dominant = Vec::new();
    let mut rest = order;
    while rest.len() > dims && dims > 0 {
        let total: f64 = rest.iter().map(|&i| powers[i]).sum();
        let top = rest[0];
        if powers[top] >= total / dims as f64 * (1.0 - 1e-12) {
            dominant.push(top);
            rest.remove(0);
            dims -= 1;
        } else {
            break;
        }
    }
    let mut m = CMat::zeros(tau, k);
    for (row, &i) in dominant.iter().enumerate() {
        m[(row, i)] = Complex64::new(1.0, 0.0);
    }
    let offset = dominant.len();
    rest.sort_unstable();
    if rest.len() <= dims {
        for (n, &i) in rest.iter().enumerate() {
            m[(offset + n, i)] = Complex64::new(1.0, 0.0);
        }
    } else {
        let sub_powers: Vec<f64> = rest.iter().map(|&i| powers[i]).collect();
        let sub = make_gwbe_pilots(dims, &sub_powers)?;
        for (c, &i) in rest.iter().enumerate() {
            for r in 0..dims {
                m[(offset + r, i)] = sub.matrix[(r, c)];
            }
        }
    }
    Ok(PilotSet {
        matrix: m,
        scheme: PilotScheme::Gwbe,
        powers: Some(powers.to_vec()),
        tx_power: vec![1.0; k],
    })
}

/// Monte-Carlo downlink SINR per UE, `E[signal] / E[interference + noise]`, with MRT on
/// matched-filter estimates `ĥ_k = s_kᴴ Y` from unit-power uplink pilots.
pub fn measure_sinr(
    pilots: &PilotSet,
    powers: &[f64],
    params: &CapacityParams,
    sweep_index: usize,
    probe: usize,
) -> Result<Vec<f64>> {
    let k = pilots.users();
    let tau = pilots.length();
    let m = params.antennas;
    let s = pilots.transmitted();
    let per_trial = map_indexed(params.trials, params.threads, |t| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = trial_stream(params.seed, sweep_index, (probe << 20) | t);
        let h = complex_normal_mat(&mut rng, k, m, 1.0);
        let mut y = &s * &h;
        if params.training_noise_std > 0.0 {
            y += complex_normal_mat(&mut rng, tau, m, params.training_noise_std.powi(2));
        }
        let est = s.ad_mul(&y);
        let rows: Vec<CVec> = (0..k).map(|i| est.row(i).transpose()).collect();
        let w = mrt_precoder(&rows)?;
        let mut num = vec![0.0; k];
        let mut den = vec![0.0; k];
        for i in 0..k {
            let hi: CVec = h.row(i).transpose();
            for (j, wj) in w.iter().enumerate() {
                let g = powers[j] * dot_t(&hi, wj).norm_sqr();
                if i == j {
                    num[i] += g;
                } else {
                    den[i] += g;
                }
            }
            den[i] += params.downlink_noise_var;
        }
        Ok((num, den))
    });
    let mut num = vec![0.0; k];
    let mut den = vec![0.0; k];
    for r in per_trial {
        let (n, d) = r?;
        for i in 0..k {
            num[i] += n[i];
            den[i] += d[i];
        }
    }
    Ok(num.iter().zip(&den).map(|(n, d)| n / d).collect())
}

/// Largest `K = |levels|·l` whose every UE meets `γ_k(1 − slack)`; the search stops at the
/// first inadmissible `l`.
pub fn user_capacity_sweep(scheme: PilotScheme, taus: &[usize], params: &CapacityParams) -> Result<Vec<CapacityResult>> {
    if params.levels.is_empty() {
        return Err(invalid("SINR pattern needs at least one level"));
    }
    if params.trials == 0 || params.antennas == 0 {
        return Err(invalid("capacity sweep needs positive trials and antennas"));
    }
    let mut out = Vec::with_capacity(taus.len());
    for (idx, &tau) in taus.iter().enumerate() {
        if tau == 0 {
            return Err(invalid("pilot length must be positive"));
        }
        let mut probes = Vec::new();
        let mut admissible_users = 0;
        let max_l = 3 * tau;
        for l in 1..=max_l {
            let targets = SinrTargets::pattern(&params.levels, l)?;
            let powers = targets.power_allocation();
            let k = powers.len();
            let sinr = match capacity_pilots(scheme, tau, &powers) {
                Ok(p) => Some(measure_sinr(&p, &powers, params, idx, l)?),
                Err(_) => None,
            };
            let admissible = sinr.as_ref().is_some_and(|s| {
                s.iter().zip(&targets.gammas).all(|(s, g)| *s >= g * (1.0 - params.slack))
            });
            probes.push(CapacityProbe { users: k, sinr, targets: targets.gammas, admissible });
            if !admissible {
                break;
            }
            admissible_users = k;
        }
        out.push(CapacityResult { tau, scheme, admissible_users, probes });
    }
    Ok(out)
}

fn scheme_from_name(name: &str) -> Result<PilotScheme> {
    match name {
        "gwbe" => Ok(PilotScheme::Gwbe),
        "wbe" => Ok(PilotScheme::Wbe),
        "fos" => Ok(PilotScheme::Fos),
        other => Err(CsiError::Config(format!("unknown pilot scheme \"{other}\""))),
    }
}

pub fn probe_label(scheme: PilotScheme, users: usize) -> String {
    format!("{scheme}/K={users}")
}

/// One record per probed `(τ, scheme, K)`: `success_rate` is the fraction of UEs meeting
/// their target, `sinr_db_mean` the UE-averaged measured SINR.
pub fn capacity_records(spec: &ExperimentSpec, methods: &[String], threads: usize) -> Result<Vec<MetricRecord>> {
    if spec.sweep.name != SweepParam::Tau {
        return Err(CsiError::Config(format!("user capacity sweeps tau, not {}", spec.sweep.name)));
    }
    let taus: Vec<usize> = spec.sweep.values.iter().map(|&v| v as usize).collect();
    let params = CapacityParams {
        levels: spec.params.sinr_levels.clone(),
        antennas: spec.geometry.antennas,
        trials: spec.trials,
        training_noise_std: spec.noise_std.unwrap_or(CapacityParams::default().training_noise_std),
        downlink_noise_var: spec.params.downlink_noise_var.unwrap_or(CapacityParams::default().downlink_noise_var),
        slack: spec.params.slack,
        seed: spec.seed(),
        threads,
    };
    let schemes = methods.iter().map(|m| scheme_from_name(m)).collect::<Result<Vec<_>>>()?;
    let mut per_scheme = Vec::new();
    for &scheme in &schemes {
        per_scheme.push(user_capacity_sweep(scheme, &taus, &params)?);
    }
    let mut records = Vec::new();
    for (ti, &tau) in taus.iter().enumerate() {
        for results in &per_scheme {
            let res = &results[ti];
            for probe in &res.probes {
                records.push(MetricRecord {
                    sweep_name: spec.sweep.name.to_string(),
                    sweep_value: tau as f64,
                    method: probe_label(res.scheme, probe.users),
                    trials: spec.trials,
                    nmse_db_mean: None,
                    nmse_db_median: None,
                    success_rate: Some(probe.satisfied_fraction(params.slack)),
                    sinr_db_mean: probe.sinr.as_ref().map(|s| mean(&s.iter().map(|&x| to_db(x)).collect::<Vec<_>>())),
                    interference_power_mean: None,
                    seed: spec.seed(),
                });
            }
        }
    }
    Ok(records)
}

/// Admissible UE count recovered from capacity records: the last probe of the run of fully
/// satisfied probes at this τ.
pub fn admissible_from_records(records: &[MetricRecord], scheme: PilotScheme, tau: usize) -> usize {
    let prefix = format!("{scheme}/K=");
    let mut best = 0;
    for r in records.iter().filter(|r| r.sweep_value == tau as f64) {
        let Some(k) = r.method.strip_prefix(&prefix).and_then(|k| k.parse::<usize>().ok()) else { continue };
        if r.success_rate == Some(1.0) {
            best = k;
        } else {
            break;
        }
    }
    best
}
