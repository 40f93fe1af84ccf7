use std::fmt;

use crate::analysis::metrics::nmse_db;
use crate::error::Result;
use crate::linalg::{CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ls,
    Mmse,
    WeightedL1,
    JointOmp,
    NuclearNorm,
    GmAmpEm,
    BgAmpEm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ls => "ls",
            Method::Mmse => "mmse",
            Method::WeightedL1 => "weighted_l1",
            Method::JointOmp => "joint_omp",
            Method::NuclearNorm => "nuclear_norm",
            Method::GmAmpEm => "gm_amp_em",
            Method::BgAmpEm => "bg_amp_em",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    Vector(CVec),
    Matrix(CMat),
}

impl Estimate {
    pub fn as_vector(&self) -> Option<&CVec> {
        match self {
            Estimate::Vector(v) => Some(v),
            Estimate::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&CMat> {
        match self {
            Estimate::Matrix(m) => Some(m),
            Estimate::Vector(_) => None,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Estimate::Vector(v) => (v.len(), 1),
            Estimate::Matrix(m) => m.shape(),
        }
    }

    fn flat(&self) -> &[num_complex::Complex64] {
        match self {
            Estimate::Vector(v) => v.as_slice(),
            Estimate::Matrix(m) => m.as_slice(),
        }
    }
}

/// One row of a solver convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
    /// Solver-specific monotone quantity (ADMM fixed-point residual, AMP residual variance).
    pub merit: f64,
    /// Penalty or step parameter in force at this iteration.
    pub penalty: f64,
}

/// Learned mixture prior for one AMP column; component 0 is the spike.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub weights: Vec<f64>,
    pub variances: Vec<f64>,
    pub noise_var: f64,
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub estimate: Estimate,
    pub method: Method,
    pub residual_norm: f64,
    pub nmse_db: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub noise_var: Option<f64>,
    pub mixture: Option<Vec<MixtureFit>>,
    pub trace: Vec<TraceRow>,
}

impl EstimateReport {
    pub fn new(estimate: Estimate, method: Method, residual_norm: f64) -> Self {
        Self {
            estimate,
            method,
            residual_norm,
            nmse_db: None,
            iterations: None,
            converged: true,
            noise_var: None,
            mixture: None,
            trace: Vec::new(),
        }
    }

    /// Fill `nmse_db` against a ground truth of the same shape.
    pub fn score(&mut self, truth: &Estimate) -> Result<f64> {
        if truth.shape() != self.estimate.shape() {
            return Err(crate::error::invalid(format!(
                "truth shape {:?} != estimate shape {:?}",
                truth.shape(),
                self.estimate.shape()
            )));
        }
        let v = nmse_db(self.estimate.flat(), truth.flat())?;
        self.nmse_db = Some(v);
        Ok(v)
    }
}
