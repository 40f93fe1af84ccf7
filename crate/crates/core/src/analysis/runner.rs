//! Experiment description, sweep execution and CSV records.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::channel::{SystemGeometry, DEFAULT_GRID_POINTS, DEFAULT_SPACING};
use crate::error::{CsiError, Result};
use crate::io::write_atomic;
use crate::parallel::map_indexed;
use crate::rng::{trial_stream, SimRng};

use super::metrics::{mean, median};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    PhaseTransition,
    SinrVsAntennas,
    UserCapacity,
    Decontaminate,
    Recover,
}

impl ExperimentKind {
    pub fn methods(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::PhaseTransition => &["weighted_l1", "l1"],
            ExperimentKind::SinrVsAntennas => &["contaminated_mrt", "perfect_csi_mrt"],
            ExperimentKind::UserCapacity => &["gwbe", "wbe", "fos"],
            ExperimentKind::Decontaminate => &["ls", "mmse"],
            ExperimentKind::Recover => &["joint_omp", "omp", "weighted_l1", "nuclear_norm", "gm_amp_em", "bg_amp_em", "ls"],
        }
    }

    fn default_methods(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::PhaseTransition => &["weighted_l1"],
            ExperimentKind::Recover => &["gm_amp_em", "ls"],
            other => other.methods(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepParam {
    N,
    M,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "s_common")]
    SCommon,
    #[serde(rename = "noise_std")]
    NoiseStd,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::N => "N",
            SweepParam::M => "M",
            SweepParam::Tau => "tau",
            SweepParam::Alpha => "alpha",
            SweepParam::SCommon => "s_common",
            SweepParam::NoiseStd => "noise_std",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub name: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default = "one")]
    pub cells: usize,
    #[serde(default = "one")]
    pub ues_per_cell: usize,
    pub antennas: usize,
    #[serde(default = "default_spacing")]
    pub antenna_spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingChoice {
    Gaussian,
    Toeplitz,
    OrthonormalRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoverScenario {
    /// FDD UE group with partially shared angular support.
    CommonSupport,
    /// TDD multiuser matrix of low rank.
    LowRank,
    /// TDD multiuser matrix with sparse UE-domain columns.
    SparseUe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonChoice {
    Oracle,
    Blind,
}

/// Experiment-specific knobs; every field has a default.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub measurements: usize,
    pub sparsity: usize,
    pub s_common: usize,
    pub alphas: Vec<f64>,
    pub training: TrainingChoice,
    pub epsilon_mode: EpsilonChoice,
    pub pilot_length: Option<usize>,
    pub downlink_noise_var: Option<f64>,
    pub sinr_levels: Vec<f64>,
    pub slack: f64,
    pub aoa_width: f64,
    pub aoa_separation: f64,
    pub paths: usize,
    pub grid_points: usize,
    pub scenario: RecoverScenario,
    pub rank: usize,
    pub nuclear_gamma_rel: f64,
    pub activity: f64,
    pub snr_db: f64,
    pub gm_components: usize,
    pub amp_damping: f64,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            measurements: 20,
            sparsity: 10,
            s_common: 0,
            alphas: vec![0.0, 0.2, 0.8, 1.0],
            training: TrainingChoice::Gaussian,
            epsilon_mode: EpsilonChoice::Oracle,
            pilot_length: None,
            downlink_noise_var: None,
            sinr_levels: vec![1.0 / 3.0, 1.0, 3.0],
            slack: 0.05,
            aoa_width: 0.2,
            aoa_separation: 0.8,
            paths: 10,
            grid_points: DEFAULT_GRID_POINTS,
            scenario: RecoverScenario::SparseUe,
            rank: 2,
            nuclear_gamma_rel: 1e-3,
            activity: 0.1,
            snr_db: 20.0,
            gm_components: 2,
            amp_damping: 0.8,
            max_iterations: None,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub geometry: GeometrySpec,
    pub sweep: Sweep,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub noise_std: Option<f64>,
    #[serde(default)]
    pub params: ExperimentParams,
}

fn one() -> usize {
    1
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING
}

fn config_err(msg: impl Into<String>) -> CsiError {
    CsiError::Config(msg.into())
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn geometry(&self) -> Result<SystemGeometry> {
        let g = &self.geometry;
        SystemGeometry::new(g.cells, g.ues_per_cell, g.antennas, g.antenna_spacing).map_err(|e| config_err(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        let v = &self.sweep.values;
        if v.is_empty() {
            return Err(config_err(format!("sweep over {} has no values", self.sweep.name)));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err(format!("sweep values for {} must be strictly increasing", self.sweep.name)));
        }
        for &x in v {
            let ok = match self.sweep.name {
                SweepParam::N | SweepParam::M | SweepParam::Tau => x >= 1.0 && x.fract() == 0.0,
                SweepParam::SCommon => x >= 0.0 && x.fract() == 0.0,
                SweepParam::Alpha => (0.0..=1.0).contains(&x),
                SweepParam::NoiseStd => x >= 0.0 && x.is_finite(),
            };
            if !ok {
                return Err(config_err(format!("invalid {} sweep value {x}", self.sweep.name)));
            }
        }
        if let Some(s) = self.noise_std {
            if !(s >= 0.0) {
                return Err(config_err("noise_std must be nonnegative"));
            }
        }
        let p = &self.params;
        if p.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(config_err("alphas must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&p.slack) {
            return Err(config_err("slack must lie in [0, 1)"));
        }
        if p.sinr_levels.is_empty() || p.sinr_levels.iter().any(|g| !(*g > 0.0)) {
            return Err(config_err("sinr_levels must be nonempty and positive"));
        }
        if !(p.activity > 0.0 && p.activity <= 1.0) {
            return Err(config_err("activity must lie in (0, 1]"));
        }
        if !(p.nuclear_gamma_rel > 0.0) {
            return Err(config_err("nuclear_gamma_rel must be positive"));
        }
        if p.paths == 0 || p.rank == 0 || p.grid_points < 2 {
            return Err(config_err("paths, rank must be positive and grid_points at least 2"));
        }
        if !(p.aoa_width >= 0.0 && p.aoa_separation >= 0.0) {
            return Err(config_err("aoa_width and aoa_separation must be nonnegative"));
        }
        Ok(())
    }

    /// Methods to run, checked against what the experiment knows.
    pub fn resolved_methods(&self, kind: ExperimentKind) -> Result<Vec<String>> {
        if self.methods.is_empty() {
            return Ok(kind.default_methods().iter().map(|s| s.to_string()).collect());
        }
        for m in &self.methods {
            if !kind.methods().contains(&m.as_str()) {
                return Err(config_err(format!(
                    "unknown method \"{m}\" for this experiment; expected one of {:?}",
                    kind.methods()
                )));
            }
        }
        Ok(self.methods.clone())
    }

    pub fn point(&self, value: f64) -> Point {
        let mut p = Point {
            sweep_value: value,
            n: self.params.measurements,
            m: self.geometry.antennas,
            tau: self.params.pilot_length.unwrap_or(self.geometry.ues_per_cell),
            alphas: self.params.alphas.clone(),
            s_common: self.params.s_common,
            noise_std: self.noise_std,
        };
        match self.sweep.name {
            SweepParam::N => p.n = value as usize,
            SweepParam::M => p.m = value as usize,
            SweepParam::Tau => p.tau = value as usize,
            SweepParam::Alpha => p.alphas = vec![value],
            SweepParam::SCommon => p.s_common = value as usize,
            SweepParam::NoiseStd => p.noise_std = Some(value),
        }
        p
    }
}

/// Parameters of one sweep point after applying the swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub sweep_value: f64,
    pub n: usize,
    pub m: usize,
    pub tau: usize,
    pub alphas: Vec<f64>,
    pub s_common: usize,
    pub noise_std: Option<f64>,
}

/// Per-method result of a single trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub method: String,
    pub nmse_db: Option<f64>,
    pub success: Option<bool>,
    pub sinr_db: Option<f64>,
    pub interference: Option<f64>,
}

impl Outcome {
    pub fn new(method: impl Into<String>) -> Self {
        Self { method: method.into(), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub method: String,
    pub trials: usize,
    pub nmse_db_mean: Option<f64>,
    pub nmse_db_median: Option<f64>,
    pub success_rate: Option<f64>,
    pub sinr_db_mean: Option<f64>,
    pub interference_power_mean: Option<f64>,
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 10] = [
    "sweep_name",
    "sweep_value",
    "method",
    "trials",
    "nmse_db_mean",
    "nmse_db_median",
    "success_rate",
    "sinr_db_mean",
    "interference_power_mean",
    "seed",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn records_to_csv(records: &[MetricRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.method.clone(),
            r.trials.to_string(),
            opt(r.nmse_db_mean),
            opt(r.nmse_db_median),
            opt(r.success_rate),
            opt(r.sinr_db_mean),
            opt(r.interference_power_mean),
            r.seed.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| CsiError::Io(e.into_error()))
}

pub fn write_records_csv(records: &[MetricRecord], path: &Path) -> Result<()> {
    write_atomic(path, &records_to_csv(records)?)
}

/// Fold one method's per-trial outcomes into a record.
pub fn aggregate(spec: &ExperimentSpec, sweep_value: f64, method: &str, outcomes: &[&Outcome]) -> MetricRecord {
    let pick = |f: &dyn Fn(&Outcome) -> Option<f64>| -> Vec<f64> { outcomes.iter().filter_map(|o| f(o)).collect() };
    let nmse = pick(&|o| o.nmse_db);
    let success = pick(&|o| o.success.map(|s| if s { 1.0 } else { 0.0 }));
    let sinr = pick(&|o| o.sinr_db);
    let intf = pick(&|o| o.interference);
    let nonempty = |v: &[f64], f: fn(&[f64]) -> f64| (!v.is_empty()).then(|| f(v));
    MetricRecord {
        sweep_name: spec.sweep.name.to_string(),
        sweep_value,
        method: method.to_string(),
        trials: spec.trials,
        nmse_db_mean: nonempty(&nmse, mean),
        nmse_db_median: nonempty(&nmse, median),
        success_rate: nonempty(&success, mean),
        sinr_db_mean: nonempty(&sinr, mean),
        interference_power_mean: nonempty(&intf, mean),
        seed: spec.seed(),
    }
}

/// Run every sweep point: `prepare` builds per-point state, the returned closure runs one
/// trial on its own substream. Records come out in (sweep, method) order.
pub fn run_sweep<P, F>(spec: &ExperimentSpec, threads: usize, mut prepare: P) -> Result<Vec<MetricRecord>>
where
    P: FnMut(&Point) -> Result<F>,
    F: Fn(&mut SimRng) -> Result<Vec<Outcome>> + Sync + Send,
{
    let seed = spec.seed();
    let mut records = Vec::new();
    for (si, &value) in spec.sweep.values.iter().enumerate() {
        let point = spec.point(value);
        let trial = prepare(&point)?;
        let results = map_indexed(spec.trials, threads, |t| {
            let mut rng = trial_stream(seed, si, t);
            trial(&mut rng)
        });
        let results: Vec<Vec<Outcome>> = results.into_iter().collect::<Result<_>>()?;
        let Some(first) = results.first() else { continue };
        for (mi, o) in first.iter().enumerate() {
            let column: Vec<&Outcome> = results.iter().map(|r| &r[mi]).collect();
            records.push(aggregate(spec, value, &o.method, &column));
        }
    }
    Ok(records)
}

pub fn run_experiment(kind: ExperimentKind, spec: &ExperimentSpec, threads: usize) -> Result<Vec<MetricRecord>> {
    spec.validate()?;
    let methods = spec.resolved_methods(kind)?;
    let threads = threads.max(1);
    match kind {
        ExperimentKind::PhaseTransition => super::phase::phase_transition(spec, &methods, threads),
        ExperimentKind::SinrVsAntennas => super::sinr::sinr_vs_antennas(spec, &methods, threads),
        ExperimentKind::UserCapacity => super::capacity::capacity_records(spec, &methods, threads),
        ExperimentKind::Decontaminate => super::decontam::decontamination(spec, &methods, threads),
        ExperimentKind::Recover => super::recover::recovery(spec, &methods, threads),
    }
}
