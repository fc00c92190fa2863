use serde::Serialize;

use super::{build_t_plan, normalized_positive, Backend, ExperimentError, TransferExperiment};
use crate::rng::derive_seed;
use crate::simulator::{run_exact, run_shots, CircuitPlan, QuantumState, ShotHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One circuit with all `M` blocks.
    Deep,
    /// `M` single-block circuits, each fed the previous readout.
    Refeed,
}

#[derive(Debug, Clone, Copy)]
pub struct ActionOptions {
    /// Runs with fewer meaningful shots than this are rejected.
    pub meaningful_floor: u64,
}

impl Default for ActionOptions {
    fn default() -> Self {
        Self { meaningful_floor: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDiagnostics {
    pub total_shots: Option<u64>,
    pub meaningful_shots: Option<u64>,
    pub seed: Option<u64>,
    /// Meaningful fraction for shots, exact keep probability otherwise.
    pub keep_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct ActionResult {
    /// Normalized nonnegative data amplitudes.
    pub vector: Vec<f64>,
    pub runs: Vec<RunDiagnostics>,
    /// Histogram of the last circuit run, when shots were used.
    pub histogram: Option<ShotHistogram>,
}

impl ActionResult {
    pub fn shots_used(&self) -> u64 {
        self.runs.iter().filter_map(|r| r.total_shots).sum()
    }
}

/// Executes one plan on the data vector and reads the data register back.
pub(crate) fn execute(
    plan: &CircuitPlan,
    n: usize,
    input: &[f64],
    backend: Backend,
    opts: ActionOptions,
) -> Result<(Vec<f64>, RunDiagnostics, Option<ShotHistogram>), ExperimentError> {
    let mut amps = input.to_vec();
    amps.resize(1 << (n + 2), 0.0);
    let state = QuantumState::from_real(n + 2, &amps)?;
    match backend {
        Backend::Exact => {
            let (out, keep) = run_exact(plan, &state)?;
            let mut v: Vec<f64> = out.real_parts()[..1 << (n + 1)].to_vec();
            // Entries of 𝕋ψ are nonnegative for ψ ≥ 0; clear rounding noise.
            v.iter_mut().for_each(|x| *x = x.max(0.0));
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let diag = RunDiagnostics { total_shots: None, meaningful_shots: None, seed: None, keep_fraction: keep };
            Ok((v, diag, None))
        }
        Backend::Shots { shots, seed } => {
            let h = run_shots(plan, &state, shots, seed)?;
            if h.meaningful_shots < opts.meaningful_floor || h.meaningful_shots == 0 {
                return Err(ExperimentError::InsufficientStatistics {
                    meaningful: h.meaningful_shots,
                    total: h.total_shots,
                    fraction: h.meaningful_fraction(),
                    floor: opts.meaningful_floor,
                });
            }
            let v = h.data_amplitudes(n + 1);
            let diag = RunDiagnostics {
                total_shots: Some(h.total_shots),
                meaningful_shots: Some(h.meaningful_shots),
                seed: Some(seed),
                keep_fraction: h.meaningful_fraction(),
            };
            Ok((v, diag, Some(h)))
        }
    }
}

/// Applies `𝒞_𝕋` `m_power` times to a nonnegative input and returns the
/// normalized readout.
pub fn simulated_t_action(
    exp: &TransferExperiment,
    m_power: usize,
    input: &[f64],
    mode: Mode,
    backend: Backend,
    opts: ActionOptions,
) -> Result<ActionResult, ExperimentError> {
    let n = exp.n();
    let input = normalized_positive(input, exp.dim())?;
    match mode {
        Mode::Deep => {
            let plan = build_t_plan(exp.factors(), n, m_power)?;
            let (vector, diag, histogram) = execute(&plan, n, &input, backend, opts)?;
            Ok(ActionResult { vector, runs: vec![diag], histogram })
        }
        Mode::Refeed => {
            if m_power == 0 {
                return Err(ExperimentError::InvalidInput("the 𝕋 circuit needs M ≥ 1".into()));
            }
            let plan = build_t_plan(exp.factors(), n, 1)?;
            let mut cur = input;
            let mut runs = Vec::with_capacity(m_power);
            let mut last = None;
            for step in 0..m_power {
                let (v, diag, h) = execute(&plan, n, &cur, step_backend(backend, step as u64), opts)?;
                cur = v;
                runs.push(diag);
                last = h;
            }
            Ok(ActionResult { vector: cur, runs, histogram: last })
        }
    }
}

/// Per-step seeds of a refeed sequence.
pub(crate) fn step_backend(backend: Backend, step: u64) -> Backend {
    match backend {
        Backend::Exact => Backend::Exact,
        Backend::Shots { shots, seed } => Backend::Shots { shots, seed: derive_seed(seed, step) },
    }
}
