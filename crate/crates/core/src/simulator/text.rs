//! Line-oriented circuit format.
//!
//! ```text
//! # vertex circuit v1
//! qubits 3
//! clbits 3
//! unitary 0 0 1
//! unitary 1 0 1 2
//! measure 0 -> c0
//! measure 1 -> c1
//! measure_postselect0 2 -> c2
//! matrix 0 4
//! <re> <im> <re> <im> ...   (one line per row)
//! ```
//! Matrix blocks follow the instructions. Floats are written with enough
//! digits to round-trip exactly.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::plan::{CircuitPlan, Instruction};
use super::state::Gate;
use super::SimError;

pub const HEADER: &str = "# vertex circuit v1";

pub fn export_circuit_text(plan: &CircuitPlan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "qubits {}", plan.n_qubits());
    let _ = writeln!(out, "clbits {}", plan.n_clbits());
    for ins in plan.instructions() {
        match ins {
            Instruction::Unitary { matrix, targets } => {
                let t: Vec<String> = targets.iter().map(|q| q.to_string()).collect();
                let _ = writeln!(out, "unitary {matrix} {}", t.join(" "));
            }
            Instruction::MeasurePostselect0 { qubit, clbit } => {
                let _ = writeln!(out, "measure_postselect0 {qubit} -> c{clbit}");
            }
            Instruction::Measure { qubit, clbit } => {
                let _ = writeln!(out, "measure {qubit} -> c{clbit}");
            }
        }
    }
    for (k, gate) in plan.matrices().iter().enumerate() {
        let _ = writeln!(out, "matrix {k} {}", gate.dim());
        for row in gate.data().chunks(gate.dim()) {
            let cells: Vec<String> = row.iter().map(|z| format!("{:?} {:?}", z.re, z.im)).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> SimError {
    SimError::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, SimError> {
    tok.ok_or_else(|| err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| err(line, format!("bad {what}")))
}

fn measurement(rest: &[&str], line: usize) -> Result<(usize, usize), SimError> {
    match rest {
        [q, "->", c] => {
            let qubit = num(Some(q), line, "qubit")?;
            let clbit = num(c.strip_prefix('c'), line, "clbit")?;
            Ok((qubit, clbit))
        }
        _ => Err(err(line, "expected `<qubit> -> c<index>`")),
    }
}

pub fn parse_circuit_text(text: &str) -> Result<CircuitPlan, SimError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, HEADER)) => {}
        _ => return Err(err(1, format!("expected header `{HEADER}`"))),
    }
    let mut content = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut header_value = |key: &str| -> Result<usize, SimError> {
        let (n, l) = content.next().ok_or_else(|| err(0, format!("missing `{key}` line")))?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some(key) {
            return Err(err(n, format!("expected `{key}`")));
        }
        num(toks.next(), n, key)
    };
    let n_qubits = header_value("qubits")?;
    let n_clbits = header_value("clbits")?;

    let mut instructions = Vec::new();
    let mut matrices: Vec<(usize, Gate)> = Vec::new();
    while let Some((n, l)) = content.next() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "unitary" => {
                let matrix = num(toks.get(1).copied(), n, "matrix index")?;
                let targets = toks[2..].iter().map(|t| num(Some(t), n, "target")).collect::<Result<Vec<usize>, _>>()?;
                instructions.push((n, Instruction::Unitary { matrix, targets }));
            }
            "measure_postselect0" => {
                let (qubit, clbit) = measurement(&toks[1..], n)?;
                instructions.push((n, Instruction::MeasurePostselect0 { qubit, clbit }));
            }
            "measure" => {
                let (qubit, clbit) = measurement(&toks[1..], n)?;
                instructions.push((n, Instruction::Measure { qubit, clbit }));
            }
            "matrix" => {
                let index: usize = num(toks.get(1).copied(), n, "matrix index")?;
                let dim: usize = num(toks.get(2).copied(), n, "matrix dimension")?;
                if index != matrices.len() {
                    return Err(err(n, format!("matrix {index} out of order")));
                }
                let mut data = Vec::with_capacity(dim * dim);
                for _ in 0..dim {
                    let (rn, row) = content.next().ok_or_else(|| err(n, "matrix block ends early"))?;
                    let vals = row.split_whitespace().map(|t| num(Some(t), rn, "matrix entry")).collect::<Result<Vec<f64>, _>>()?;
                    if vals.len() != 2 * dim {
                        return Err(err(rn, format!("expected {} numbers", 2 * dim)));
                    }
                    data.extend(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])));
                }
                let gate = Gate::new(dim, data).map_err(|e| err(n, e.to_string()))?;
                matrices.push((n, gate));
            }
            other => return Err(err(n, format!("unknown instruction `{other}`"))),
        }
    }

    let mut plan = CircuitPlan::new(n_qubits, n_clbits)?;
    for (_, gate) in matrices {
        plan.add_matrix(gate);
    }
    for (n, ins) in instructions {
        let res = match ins {
            Instruction::Unitary { matrix, targets } => plan.unitary(matrix, &targets),
            Instruction::MeasurePostselect0 { qubit, clbit } => plan.measure_postselect0(qubit, clbit),
            Instruction::Measure { qubit, clbit } => plan.measure(qubit, clbit),
        };
        res.map_err(|e| err(n, e.to_string()))?;
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plan_is_header_only() {
        let plan = CircuitPlan::new(0, 0).unwrap();
        assert_eq!(export_circuit_text(&plan), format!("{HEADER}\nqubits 0\nclbits 0\n"));
        assert_eq!(parse_circuit_text(&export_circuit_text(&plan)).unwrap(), plan);
    }

    #[test]
    fn round_trip_keeps_bits() {
        let a = 0.1f64.sqrt();
        let b = 0.9f64.sqrt();
        let mut plan = CircuitPlan::new(2, 2).unwrap();
        plan.push_unitary(Gate::from_real_rows(&[[a, b], [b, -a]]).unwrap(), &[1]).unwrap();
        plan.measure_postselect0(1, 1).unwrap();
        plan.measure(0, 0).unwrap();
        let text = export_circuit_text(&plan);
        assert_eq!(parse_circuit_text(&text).unwrap(), plan);
    }

    #[test]
    fn errors_name_the_line() {
        let text = format!("{HEADER}\nqubits 1\nclbits 1\nfrobnicate 0\n");
        match parse_circuit_text(&text).unwrap_err() {
            SimError::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("{e:?}"),
        }
        let text = format!("{HEADER}\nqubits 1\nclbits 1\nmeasure 0 -> c3\n");
        assert!(matches!(parse_circuit_text(&text), Err(SimError::Parse { line: 4, .. })));
        assert!(parse_circuit_text("qubits 1").is_err());
    }
}
