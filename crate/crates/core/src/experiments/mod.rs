//! The circuit that applies 𝕋, and the experiments run with it.

mod action;
mod circuits;
mod convergence;
mod estimator;
mod power;
mod report;

pub use action::{simulated_t_action, ActionOptions, ActionResult, Mode, RunDiagnostics};
pub use circuits::{build_t_plan, d_test_plan, householder_prep, t_plan_clbits, TCircuitSpec};
pub use convergence::{convergence_report, convergence_rows, ConvergenceRow, DistanceKind};
pub use estimator::{
    estimate_lambda1, estimate_scatter, estimator_sequence, EstimatorOptions, EstimatorReport, Psi0Source,
    ScatterResult,
};
pub use power::{power_iterate_psi0, PowerOptions, PowerRun};
pub use report::{report_csv, ReportRow};

use std::sync::OnceLock;

use thiserror::Error;

use crate::dilation::{svd_scaled, DilationError, SvdFactors};
use crate::model::{r_matrix, ModelError, VertexModel};
use crate::rng::{CounterRng, Domain};
use crate::simulator::SimError;
use crate::transfer::{
    assemble_transfer, spectral_summary, SpectralOptions, SpectralSummary, TransferError, TransferOperator,
};
use crate::ErrorClass;

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Dilation(#[from] DilationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("only {meaningful} of {total} shots were meaningful (fraction {fraction:.3e}), floor is {floor}")]
    InsufficientStatistics { meaningful: u64, total: u64, fraction: f64, floor: u64 },
    #[error("power iteration stalled after {steps} steps (last step moved {distance:e})")]
    NoConvergence { steps: usize, distance: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

impl ExperimentError {
    pub fn class(&self) -> ErrorClass {
        match self {
            Self::Model(_) | Self::InvalidInput(_) => ErrorClass::Validation,
            Self::Transfer(e) => e.class(),
            Self::Dilation(e) => e.class(),
            Self::Sim(e) => e.class(),
            Self::InsufficientStatistics { .. } => ErrorClass::InsufficientStatistics,
            Self::NoConvergence { .. } => ErrorClass::Numerical,
        }
    }
}

/// How circuits are executed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Exact projection at every post-selection.
    Exact,
    /// Sampled shots; refeed step `s` uses `derive_seed(seed, s)`.
    Shots { shots: u64, seed: u64 },
}

/// A model at a fixed column count, with its circuit factors and a lazily
/// computed dense oracle.
#[derive(Debug)]
pub struct TransferExperiment {
    model: VertexModel,
    n: usize,
    factors: SvdFactors,
    operator: OnceLock<Result<TransferOperator, TransferError>>,
    oracle: OnceLock<Result<SpectralSummary, TransferError>>,
}

impl TransferExperiment {
    pub fn new(model: VertexModel, n: usize) -> Result<Self, ExperimentError> {
        if n == 0 {
            return Err(ExperimentError::InvalidInput("need at least one column".into()));
        }
        let factors = svd_scaled(&r_matrix(&model))?;
        Ok(Self { model, n, factors, operator: OnceLock::new(), oracle: OnceLock::new() })
    }

    pub fn model(&self) -> &VertexModel {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of data vectors, `2^(N+1)`.
    pub fn dim(&self) -> usize {
        1 << (self.n + 1)
    }

    pub fn factors(&self) -> &SvdFactors {
        &self.factors
    }

    pub fn operator(&self) -> Result<&TransferOperator, TransferError> {
        self.operator
            .get_or_init(|| assemble_transfer(&r_matrix(&self.model), self.n))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn oracle(&self) -> Result<&SpectralSummary, TransferError> {
        self.oracle
            .get_or_init(|| spectral_summary(self.operator()?, SpectralOptions::default()))
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Checks a data vector for the square-root readout (finite, nonnegative,
/// nonzero) and returns it normalized.
pub fn normalized_positive(input: &[f64], dim: usize) -> Result<Vec<f64>, ExperimentError> {
    if input.len() != dim {
        return Err(ExperimentError::InvalidInput(format!("input has {} amplitudes, expected {dim}", input.len())));
    }
    if input.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(ExperimentError::InvalidInput("input amplitudes must be finite and nonnegative".into()));
    }
    let norm = input.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(ExperimentError::InvalidInput("input vector is zero".into()));
    }
    Ok(input.iter().map(|x| x / norm).collect())
}

/// Uniform positive vector.
pub fn uniform_input(dim: usize) -> Vec<f64> {
    vec![1.0 / (dim as f64).sqrt(); dim]
}

/// Normalized vector of `Uniform[0,1)` entries from stream `index` of `seed`.
pub fn random_positive_input(dim: usize, seed: u64, index: u64) -> Vec<f64> {
    let raw = CounterRng::new(seed, Domain::Inputs, index).uniform_vec(dim);
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / norm).collect()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn max_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Normalized `𝕋^m v` from the dense operator.
pub fn oracle_power(t: &TransferOperator, v: &[f64], m: usize) -> Result<Vec<f64>, TransferError> {
    let mut cur = v.to_vec();
    for _ in 0..m {
        cur = crate::transfer::apply_transfer(t, &cur)?;
        let n = cur.iter().map(|x| x * x).sum::<f64>().sqrt();
        cur.iter_mut().for_each(|x| *x /= n);
    }
    Ok(cur)
}
