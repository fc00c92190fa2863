use serde::Serialize;

use super::action::{execute, step_backend};
use super::{
    build_t_plan, euclidean_distance, normalized_positive, uniform_input, ActionOptions, Backend, ExperimentError,
    RunDiagnostics, TransferExperiment,
};

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub max_steps: usize,
    /// Stop once successive vectors are closer than this. `None` runs exactly
    /// `max_steps` steps.
    pub tol: Option<f64>,
    pub action: ActionOptions,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { max_steps: 6, tol: None, action: ActionOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerRun {
    /// Final estimate of Ψ₀.
    pub vector: Vec<f64>,
    /// Input followed by the readout of every step.
    pub history: Vec<Vec<f64>>,
    /// `‖v_s − v_{s−1}‖` for each step.
    pub step_distances: Vec<f64>,
    pub runs: Vec<RunDiagnostics>,
    pub converged: bool,
}

impl PowerRun {
    pub fn steps(&self) -> usize {
        self.history.len() - 1
    }

    pub fn shots_used(&self) -> u64 {
        self.runs.iter().filter_map(|r| r.total_shots).sum()
    }
}

/// Refeed power iteration `(𝒞_𝕋)^s |Ψ⟩`. Starts from `start` or, when absent,
/// from the uniform vector.
pub fn power_iterate_psi0(
    exp: &TransferExperiment,
    start: Option<&[f64]>,
    backend: Backend,
    opts: PowerOptions,
) -> Result<PowerRun, ExperimentError> {
    let n = exp.n();
    let mut cur = match start {
        Some(v) => normalized_positive(v, exp.dim())?,
        None => uniform_input(exp.dim()),
    };
    let plan = build_t_plan(exp.factors(), n, 1)?;
    let mut history = vec![cur.clone()];
    let mut step_distances = Vec::new();
    let mut runs = Vec::new();
    let mut converged = false;
    for step in 0..opts.max_steps {
        let (next, diag, _) = execute(&plan, n, &cur, step_backend(backend, step as u64), opts.action)?;
        let dist = euclidean_distance(&next, &cur);
        step_distances.push(dist);
        runs.push(diag);
        history.push(next.clone());
        cur = next;
        if let Some(tol) = opts.tol {
            if dist < tol {
                converged = true;
                break;
            }
        }
    }
    if let Some(_tol) = opts.tol {
        if !converged {
            return Err(ExperimentError::NoConvergence {
                steps: opts.max_steps,
                distance: step_distances.last().copied().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(PowerRun { vector: cur, history, step_distances, runs, converged })
}
