use super::state::{check_targets, Gate, QuantumState};
use super::SimError;

/// Widest classical register a histogram key can hold.
pub const MAX_CLBITS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    /// Apply `matrices[matrix]` to `targets` (gate bit `j` ↔ `targets[j]`).
    Unitary { matrix: usize, targets: Vec<usize> },
    /// Measure `qubit`, write the outcome to `clbit`, keep only outcome 0.
    MeasurePostselect0 { qubit: usize, clbit: usize },
    /// Terminal measurement of `qubit` into `clbit`.
    Measure { qubit: usize, clbit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitPlan {
    n_qubits: usize,
    n_clbits: usize,
    matrices: Vec<Gate>,
    instructions: Vec<Instruction>,
}

impl CircuitPlan {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Result<Self, SimError> {
        if n_clbits > MAX_CLBITS {
            return Err(SimError::ClbitWidth(n_clbits));
        }
        Ok(Self { n_qubits, n_clbits, matrices: Vec::new(), instructions: Vec::new() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clbits(&self) -> usize {
        self.n_clbits
    }

    pub fn matrices(&self) -> &[Gate] {
        &self.matrices
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    /// Stores a matrix in the table and returns its index.
    pub fn add_matrix(&mut self, gate: Gate) -> usize {
        self.matrices.push(gate);
        self.matrices.len() - 1
    }

    pub fn unitary(&mut self, matrix: usize, targets: &[usize]) -> Result<(), SimError> {
        let gate = self.matrices.get(matrix).ok_or(SimError::MatrixIndex(matrix))?;
        check_targets(self.n_qubits, gate, targets)?;
        self.check_not_after_measure()?;
        self.instructions.push(Instruction::Unitary { matrix, targets: targets.to_vec() });
        Ok(())
    }

    /// Adds the gate to the table and applies it.
    pub fn push_unitary(&mut self, gate: Gate, targets: &[usize]) -> Result<usize, SimError> {
        let index = self.add_matrix(gate);
        self.unitary(index, targets)?;
        Ok(index)
    }

    pub fn measure_postselect0(&mut self, qubit: usize, clbit: usize) -> Result<(), SimError> {
        self.check_slot(qubit, clbit)?;
        self.check_not_after_measure()?;
        self.instructions.push(Instruction::MeasurePostselect0 { qubit, clbit });
        Ok(())
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> Result<(), SimError> {
        self.check_slot(qubit, clbit)?;
        self.instructions.push(Instruction::Measure { qubit, clbit });
        Ok(())
    }

    fn check_slot(&self, qubit: usize, clbit: usize) -> Result<(), SimError> {
        if qubit >= self.n_qubits {
            return Err(SimError::QubitRange { qubit, n_qubits: self.n_qubits });
        }
        if clbit >= self.n_clbits {
            return Err(SimError::ClbitRange { clbit, n_clbits: self.n_clbits });
        }
        let used = self.instructions.iter().any(|ins| match ins {
            Instruction::MeasurePostselect0 { clbit: c, .. } | Instruction::Measure { clbit: c, .. } => *c == clbit,
            Instruction::Unitary { .. } => false,
        });
        if used {
            return Err(SimError::ClbitReused(clbit));
        }
        Ok(())
    }

    fn check_not_after_measure(&self) -> Result<(), SimError> {
        if matches!(self.instructions.last(), Some(Instruction::Measure { .. })) {
            return Err(SimError::MeasureNotTerminal);
        }
        Ok(())
    }

    pub fn n_unitaries(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Unitary { .. })).count()
    }

    pub fn n_postselects(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::MeasurePostselect0 { .. })).count()
    }

    pub fn n_measures(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Measure { .. })).count()
    }

    /// Bits of the classical register written by post-selections.
    pub fn postselect_mask(&self) -> u128 {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::MeasurePostselect0 { clbit, .. } => Some(1u128 << clbit),
                _ => None,
            })
            .fold(0, |a, b| a | b)
    }

    /// Terminal `(qubit, clbit)` pairs.
    pub fn final_measurements(&self) -> Vec<(usize, usize)> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Measure { qubit, clbit } => Some((*qubit, *clbit)),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn check_input(&self, input: &QuantumState) -> Result<(), SimError> {
        if input.n_qubits() != self.n_qubits {
            return Err(SimError::QubitCount { plan: self.n_qubits, state: input.n_qubits() });
        }
        Ok(())
    }
}

/// Runs the plan with exact projections at every post-selection. Terminal
/// measurements are not applied; the returned state is the one they would
/// sample from. The probability is the product of the keep probabilities.
pub fn run_exact(plan: &CircuitPlan, input: &QuantumState) -> Result<(QuantumState, f64), SimError> {
    plan.check_input(input)?;
    let mut state = input.clone();
    let mut keep = 1.0;
    for ins in plan.instructions() {
        match ins {
            Instruction::Unitary { matrix, targets } => state.apply_unchecked(&plan.matrices[*matrix], targets),
            Instruction::MeasurePostselect0 { qubit, .. } => keep *= state.project(*qubit, 0)?,
            Instruction::Measure { .. } => {}
        }
    }
    Ok((state, keep))
}
