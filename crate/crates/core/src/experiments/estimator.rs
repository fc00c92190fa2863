use serde::Serialize;

use super::action::{execute, step_backend};
use super::{
    build_t_plan, normalized_positive, power_iterate_psi0, random_positive_input, ActionOptions, Backend,
    ExperimentError, PowerOptions, TransferExperiment,
};
use crate::ErrorClass;

/// Where Ψ₀ comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi0Source {
    /// Fixed number of refeed steps from the input.
    Steps(usize),
    /// Refeed until successive vectors differ by less than `tol`.
    Converged { tol: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct EstimatorOptions {
    pub psi0: Psi0Source,
    /// ℱ values at or above `1 − degenerate_tol` are treated as 1.
    pub degenerate_tol: f64,
    pub action: ActionOptions,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { psi0: Psi0Source::Steps(6), degenerate_tol: 1e-9, action: ActionOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    /// `ℱ₀ = ⟨Ψ₀|Ψ⟩`.
    pub f0: f64,
    /// `ℱ₁ = ⟨Ψ₀|𝒞_𝕋 Ψ⟩`.
    pub f1: f64,
    /// `[(ℱ₁⁻² − 1)/(ℱ₀⁻² − 1)]^{1/2}`; absent when degenerate.
    pub estimate: Option<f64>,
    pub degenerate: bool,
    pub oracle_lambda1: Option<f64>,
    pub shots_used: u64,
    pub psi0_iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ratio_root(f0: f64, f1: f64, power: f64) -> f64 {
    let num = (f1.powi(-2) - 1.0).max(0.0);
    let den = f0.powi(-2) - 1.0;
    (num / den).powf(power)
}

/// Lower-bound estimator of `λ₁`. The first refeed step from `input` is
/// `𝒞_𝕋Ψ`; the Ψ₀ estimate is the refeed result selected by `opts.psi0`.
pub fn estimate_lambda1(
    exp: &TransferExperiment,
    input: &[f64],
    backend: Backend,
    opts: EstimatorOptions,
) -> Result<EstimatorReport, ExperimentError> {
    let psi = normalized_positive(input, exp.dim())?;
    let power_opts = match opts.psi0 {
        Psi0Source::Steps(k) => PowerOptions { max_steps: k.max(1), tol: None, action: opts.action },
        Psi0Source::Converged { tol, max_steps } => PowerOptions { max_steps, tol: Some(tol), action: opts.action },
    };
    let run = power_iterate_psi0(exp, Some(&psi), backend, power_opts)?;
    let psi0 = &run.vector;
    let c_psi = &run.history[1];

    let f0 = dot(psi0, &psi).min(1.0);
    let f1 = dot(psi0, c_psi).min(1.0);
    let degenerate = f0 >= 1.0 - opts.degenerate_tol || f1 >= 1.0 - opts.degenerate_tol;
    let estimate = if degenerate { None } else { Some(ratio_root(f0, f1, 0.5)) };
    Ok(EstimatorReport {
        f0,
        f1,
        estimate,
        degenerate,
        oracle_lambda1: exp.oracle().ok().map(|s| s.ratio),
        shots_used: run.shots_used(),
        psi0_iterations: run.steps(),
    })
}

/// `[(ℱ_m⁻² − 1)/(ℱ₀⁻² − 1)]^{1/(2m)}` for `m = 1..=m_max`, with ℱ_m taken
/// against the supplied Ψ₀.
pub fn estimator_sequence(
    exp: &TransferExperiment,
    input: &[f64],
    psi0: &[f64],
    m_max: usize,
    backend: Backend,
) -> Result<Vec<f64>, ExperimentError> {
    let psi = normalized_positive(input, exp.dim())?;
    let f0 = dot(psi0, &psi);
    let plan = build_t_plan(exp.factors(), exp.n(), 1)?;
    let mut cur = psi;
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let (next, _, _) = execute(&plan, exp.n(), &cur, step_backend(backend, m as u64), ActionOptions::default())?;
        cur = next;
        out.push(ratio_root(f0, dot(psi0, &cur), 0.5 / m as f64));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterResult {
    pub reports: Vec<EstimatorReport>,
    /// Inputs dropped for too few meaningful shots.
    pub excluded: Vec<u64>,
}

/// Estimator on `count` random positive inputs (stream `i` of `seed` for
/// input `i`; shot seeds derived per input).
pub fn estimate_scatter(
    exp: &TransferExperiment,
    count: u64,
    backend: Backend,
    seed: u64,
    opts: EstimatorOptions,
) -> Result<ScatterResult, ExperimentError> {
    let mut reports = Vec::new();
    let mut excluded = Vec::new();
    for i in 0..count {
        let input = random_positive_input(exp.dim(), seed, i);
        let b = match backend {
            Backend::Exact => Backend::Exact,
            Backend::Shots { shots, seed: s } => Backend::Shots { shots, seed: crate::rng::derive_seed(s, 1_000_000 + i) },
        };
        match estimate_lambda1(exp, &input, b, opts) {
            Ok(r) => reports.push(r),
            Err(e) if e.class() == ErrorClass::InsufficientStatistics => excluded.push(i),
            Err(e) => return Err(e),
        }
    }
    Ok(ScatterResult { reports, excluded })
}
