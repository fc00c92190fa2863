use serde::Serialize;

use super::{
    euclidean_distance, power_iterate_psi0, Backend, ExperimentError, PowerOptions, PowerRun, TransferExperiment,
};
use crate::model::VertexModel;
use crate::transfer::TransferError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Distance to the dense-oracle Ψ₀.
    Oracle,
    /// Distance between step `M` and step `M − 1` (no oracle above the cap).
    Successive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: usize,
    pub distance: Option<f64>,
    pub kind: DistanceKind,
    pub shots: u64,
    pub meaningful_fraction: f64,
    pub oracle_lambda1: Option<f64>,
}

/// Refeed power iteration from `start` (uniform when `None`) for every
/// column count in `n_list`, reporting the distance after each `M` in
/// `m_list` (`M = 0` is the input itself).
pub fn convergence_report(
    model: &VertexModel,
    n_list: &[usize],
    m_list: &[usize],
    backend: Backend,
    start_seed: Option<u64>,
    opts: PowerOptions,
) -> Result<Vec<ConvergenceRow>, ExperimentError> {
    let m_max = m_list.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::new();
    for &n in n_list {
        let exp = TransferExperiment::new(model.clone(), n)?;
        let start = start_seed.map(|s| super::random_positive_input(exp.dim(), s, n as u64));
        let run = power_iterate_psi0(
            &exp,
            start.as_deref(),
            backend,
            PowerOptions { max_steps: m_max, tol: None, ..opts },
        )?;
        rows.extend(convergence_rows(&exp, m_list, &run)?);
    }
    Ok(rows)
}

/// Rows for an existing run; `run` must cover every `M` in `m_list`.
pub fn convergence_rows(
    exp: &TransferExperiment,
    m_list: &[usize],
    run: &PowerRun,
) -> Result<Vec<ConvergenceRow>, ExperimentError> {
    let oracle = match exp.oracle() {
        Ok(s) => Some(s),
        Err(TransferError::DimensionCap { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let mut rows = Vec::new();
    for &m in m_list {
        let (distance, kind) = match oracle {
            Some(s) => (Some(euclidean_distance(&run.history[m], &s.psi0_right)), DistanceKind::Oracle),
            None if m == 0 => (None, DistanceKind::Successive),
            None => (Some(run.step_distances[m - 1]), DistanceKind::Successive),
        };
        let (shots, fraction) = match m {
            0 => (0, 1.0),
            _ => {
                let r = &run.runs[m - 1];
                (r.total_shots.unwrap_or(0), r.keep_fraction)
            }
        };
        rows.push(ConvergenceRow {
            n: exp.n(),
            m,
            distance,
            kind,
            shots,
            meaningful_fraction: fraction,
            oracle_lambda1: oracle.map(|s| s.ratio),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{euclidean_distance, uniform_input};
    use crate::model::reference_model;

    #[test]
    fn zero_steps_is_input_distance() {
        let model = reference_model();
        let rows = convergence_report(&model, &[3], &[0, 1, 2], Backend::Exact, None, PowerOptions::default()).unwrap();
        let exp = TransferExperiment::new(model, 3).unwrap();
        let d0 = euclidean_distance(&uniform_input(16), &exp.oracle().unwrap().psi0_right);
        assert_eq!(rows[0].distance, Some(d0));
        assert!(rows[2].distance.unwrap() < rows[1].distance.unwrap());
        assert!(rows.iter().all(|r| r.kind == DistanceKind::Oracle));
    }
}
