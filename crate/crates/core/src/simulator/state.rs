use num_complex::Complex64;

use super::SimError;

/// Tolerance on `‖U†U − I‖` (entrywise) for accepted gates.
pub const UNITARY_TOL: f64 = 1e-10;
/// Inputs must already be normalized to this tolerance.
pub const INPUT_NORM_TOL: f64 = 1e-9;
/// Keep probabilities at or below this are treated as impossible.
pub const MIN_KEEP_PROBABILITY: f64 = 1e-300;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    dim: usize,
    data: Vec<Complex64>,
}

impl Gate {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self, SimError> {
        if !dim.is_power_of_two() || data.len() != dim * dim {
            return Err(SimError::MatrixShape { dim, len: data.len() });
        }
        let gate = Self { dim, data };
        let defect = gate.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(SimError::NotUnitary { defect });
        }
        Ok(gate)
    }

    pub fn from_real_rows<const D: usize>(rows: &[[f64; D]; D]) -> Result<Self, SimError> {
        Self::new(D, rows.iter().flatten().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).expect("X is unitary")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_targets(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.data[k * n + i].conj() * self.data[k * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

/// State vector over `n` qubits; qubit 0 is the least significant bit of the
/// basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn norm_of(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

impl QuantumState {
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Accepts amplitudes whose norm is within `INPUT_NORM_TOL` of 1 and
    /// renormalizes them exactly.
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, SimError> {
        let norm = Self::checked_norm(n_qubits, &amps)?;
        if (norm - 1.0).abs() > INPUT_NORM_TOL {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    /// Normalizes any nonzero vector.
    pub fn from_unnormalized(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, SimError> {
        let norm = Self::checked_norm(n_qubits, &amps)?;
        Ok(Self { n_qubits, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn from_real(n_qubits: usize, amps: &[f64]) -> Result<Self, SimError> {
        Self::from_unnormalized(n_qubits, amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    fn checked_norm(n_qubits: usize, amps: &[Complex64]) -> Result<f64, SimError> {
        let expected = 1usize << n_qubits;
        if amps.len() != expected {
            return Err(SimError::BadLength { expected, got: amps.len() });
        }
        let norm = norm_of(amps);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(SimError::ZeroVector);
        }
        Ok(norm)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Real parts of the amplitudes.
    pub fn real_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    /// Contracts `gate` over `targets`; gate index `Σ_j bit(targets[j])·2^j`.
    pub fn apply_unitary(&mut self, gate: &Gate, targets: &[usize]) -> Result<(), SimError> {
        self.check_targets(gate, targets)?;
        let defect = gate.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(SimError::NotUnitary { defect });
        }
        self.apply_unchecked(gate, targets);
        Ok(())
    }

    pub(crate) fn check_targets(&self, gate: &Gate, targets: &[usize]) -> Result<(), SimError> {
        check_targets(self.n_qubits, gate, targets)
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate, targets: &[usize]) {
        let sub = gate.dim();
        let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
        let offsets: Vec<usize> = (0..sub)
            .map(|j| targets.iter().enumerate().map(|(b, &t)| ((j >> b) & 1) << t).sum())
            .collect();
        let m = gate.data();
        let mut buf = vec![Complex64::new(0.0, 0.0); sub];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (slot, &off) in buf.iter_mut().zip(&offsets) {
                *slot = self.amps[base | off];
            }
            for (i, &off) in offsets.iter().enumerate() {
                let row = &m[i * sub..(i + 1) * sub];
                self.amps[base | off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// Probability that `qubit` reads 0.
    pub fn prob_zero(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        self.amps.iter().enumerate().filter(|(i, _)| i & bit == 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projects `qubit` onto `outcome` and renormalizes; returns the
    /// probability of that outcome.
    pub fn project(&mut self, qubit: usize, outcome: u8) -> Result<f64, SimError> {
        if qubit >= self.n_qubits {
            return Err(SimError::QubitRange { qubit, n_qubits: self.n_qubits });
        }
        let bit = 1usize << qubit;
        let want = if outcome == 0 { 0 } else { bit };
        let p: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & bit == want).map(|(_, a)| a.norm_sqr()).sum();
        if !(p > MIN_KEEP_PROBABILITY) {
            return Err(SimError::ImpossiblePostselection { qubit, probability: p });
        }
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit == want {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(p)
    }

    /// Post-selects the highest qubit (the ancilla) on 0.
    pub fn postselect_ancilla0(&mut self) -> Result<f64, SimError> {
        if self.n_qubits == 0 {
            return Err(SimError::QubitRange { qubit: 0, n_qubits: 0 });
        }
        self.project(self.n_qubits - 1, 0)
    }

    /// Amplitudes of the sub-register where every qubit at or above
    /// `n_data` is 0.
    pub fn data_block(&self, n_data: usize) -> Vec<Complex64> {
        self.amps[..1usize << n_data].to_vec()
    }
}

pub(crate) fn check_targets(n_qubits: usize, gate: &Gate, targets: &[usize]) -> Result<(), SimError> {
    if targets.len() != gate.n_targets() {
        return Err(SimError::TargetCount { expected: gate.n_targets(), got: targets.len() });
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n_qubits {
            return Err(SimError::QubitRange { qubit: t, n_qubits });
        }
        if targets[..i].contains(&t) {
            return Err(SimError::DuplicateTarget(t));
        }
    }
    Ok(())
}
