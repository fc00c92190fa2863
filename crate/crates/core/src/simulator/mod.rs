//! State-vector simulation with mid-circuit post-selection.

mod plan;
mod shots;
mod state;
mod text;

pub use plan::{run_exact, CircuitPlan, Instruction, MAX_CLBITS};
pub use shots::{run_shots, ShotHistogram};
pub use state::{Gate, QuantumState, INPUT_NORM_TOL, UNITARY_TOL};
pub use text::{export_circuit_text, parse_circuit_text, HEADER};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("expected {expected} amplitudes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("state vector is zero")]
    ZeroVector,
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("matrix of dimension {dim} with {len} entries is not a square power-of-two matrix")]
    MatrixShape { dim: usize, len: usize },
    #[error("gate acts on {expected} qubits but {got} targets were given")]
    TargetCount { expected: usize, got: usize },
    #[error("qubit {0} appears twice in the target list")]
    DuplicateTarget(usize),
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitRange { qubit: usize, n_qubits: usize },
    #[error("clbit {clbit} out of range for a {n_clbits}-bit register")]
    ClbitRange { clbit: usize, n_clbits: usize },
    #[error("clbit {0} is written twice")]
    ClbitReused(usize),
    #[error("classical register of {0} bits exceeds 128")]
    ClbitWidth(usize),
    #[error("no matrix with index {0}")]
    MatrixIndex(usize),
    #[error("only terminal measurements may follow a measurement")]
    MeasureNotTerminal,
    #[error("plan has {plan} qubits, state has {state}")]
    QubitCount { plan: usize, state: usize },
    #[error("post-selection on qubit {qubit} has probability {probability:e}")]
    ImpossiblePostselection { qubit: usize, probability: f64 },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
