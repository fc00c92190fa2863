use std::fmt::Write as _;

use serde::Serialize;

use super::{ConvergenceRow, EstimatorReport};

/// One line of the plot-ready CSV.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReportRow {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub distance: Option<f64>,
    pub shots: Option<u64>,
    pub meaningful_fraction: Option<f64>,
    pub estimate: Option<f64>,
    pub oracle: Option<f64>,
}

impl From<&ConvergenceRow> for ReportRow {
    fn from(r: &ConvergenceRow) -> Self {
        Self {
            n: Some(r.n),
            m: Some(r.m),
            distance: r.distance,
            shots: Some(r.shots),
            meaningful_fraction: Some(r.meaningful_fraction),
            estimate: None,
            oracle: r.oracle_lambda1,
        }
    }
}

impl ReportRow {
    pub fn from_estimate(n: usize, r: &EstimatorReport) -> Self {
        Self {
            n: Some(n),
            m: Some(r.psi0_iterations),
            distance: None,
            shots: Some(r.shots_used),
            meaningful_fraction: None,
            estimate: r.estimate,
            oracle: r.oracle_lambda1,
        }
    }
}

fn cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("N,M,distance,shots,meaningful_fraction,estimate,oracle\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            cell(r.n),
            cell(r.m),
            cell(r.distance),
            cell(r.shots),
            cell(r.meaningful_fraction),
            cell(r.estimate),
            cell(r.oracle)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cells_for_missing_values() {
        let row = ReportRow { n: Some(4), estimate: Some(0.1), ..Default::default() };
        assert_eq!(report_csv(&[row]).lines().nth(1).unwrap(), "4,,,,,0.1,");
    }
}
