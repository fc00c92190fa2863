//! Row transfer operator of an `N`-column vertex lattice.
//!
//! The operator acts on `N + 1` qubits. Qubit `k − 1` carries the vertical
//! bond of column `k` (`k = 1..=N`) and qubit `N` carries the lateral bond,
//! so a basis index is `lateral·2^N + Σ_k bond_k·2^(k−1)`. With this layout
//! ```text
//! ⟨l, d₁…d_N | 𝕋 | r, u₁…u_N⟩ = Σ_b R_{d₁}^{u₁}(l,b₁) R_{d₂}^{u₂}(b₁,b₂) ⋯ R_{d_N}^{u_N}(b_{N−1},r)
//! ```
//! which is the product `ℝ₀₁ ℝ₀₂ ⋯ ℝ₀N`, each factor acting on the pair
//! (qubit `k − 1`, qubit `N`) with two-qubit index `2·lateral + vertical`.
//! For `N = 1` the operator is the R matrix itself.

mod enumerate;
mod spectrum;

pub use enumerate::{brute_force_partition, ENUMERATION_BUDGET_BITS};
pub use spectrum::{spectral_summary, EigenBackend, SpectralOptions, SpectralSummary};

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::RMatrix;

/// Dense assembly is limited to `N + 1 ≤ DENSE_CAP_QUBITS` (dimension 8192).
pub const DENSE_CAP_QUBITS: usize = 13;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransferError {
    #[error("lattice needs at least one column and one row, got {n_cols}×{n_rows}")]
    EmptyLattice { n_cols: usize, n_rows: usize },
    #[error("{qubits} qubits exceed the dense cap of {cap} (N + 1 ≤ {cap})")]
    DimensionCap { qubits: usize, cap: usize },
    #[error("vector of length {got} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("boundary row has {got} vertical bonds, lattice has {expected} columns")]
    BoundaryLength { expected: usize, got: usize },
    #[error("bond values must be 0 or 1")]
    BondValue,
    #[error("power must be at least 1")]
    ZeroPower,
    #[error("enumeration needs 2^{bits} configurations, budget is 2^{budget}")]
    EnumerationBudget { bits: usize, budget: usize },
    #[error("partition value {0} is not positive")]
    NonPositivePartition(f64),
    #[error("inverse temperature must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("power iteration did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("transfer operator is not strictly positive")]
    NotPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeShape {
    n_cols: usize,
    n_rows: usize,
}

impl LatticeShape {
    pub fn new(n_cols: usize, n_rows: usize) -> Result<Self, TransferError> {
        if n_cols == 0 || n_rows == 0 {
            return Err(TransferError::EmptyLattice { n_cols, n_rows });
        }
        Ok(Self { n_cols, n_rows })
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_sites(&self) -> usize {
        self.n_cols * self.n_rows
    }

    /// Every bond of the lattice, boundary ones included, after the helical
    /// identification `l₁^{m+1} = r_N^m`.
    pub fn n_bonds(&self) -> usize {
        let (n, m) = (self.n_cols, self.n_rows);
        (m + 1) * n + m * (n - 1) + (m - 1) + 2
    }

    /// Bonds that are summed when the top row, bottom row and both corners
    /// are fixed.
    pub fn n_free_bonds(&self) -> usize {
        let (n, m) = (self.n_cols, self.n_rows);
        (m - 1) * n + m * (n - 1) + (m - 1)
    }
}

/// Fixed bonds along the bottom or top edge: the vertical bond of every
/// column plus the corner lateral bond (`l₁¹` below, `r_N^M` on top).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryRow {
    pub corner: u8,
    /// `bonds[k − 1]` is the bond of column `k`.
    pub bonds: Vec<u8>,
}

impl BoundaryRow {
    pub fn new(corner: u8, bonds: Vec<u8>) -> Result<Self, TransferError> {
        if corner > 1 || bonds.iter().any(|&b| b > 1) {
            return Err(TransferError::BondValue);
        }
        Ok(Self { corner, bonds })
    }

    pub fn zeros(n: usize) -> Self {
        Self { corner: 0, bonds: vec![0; n] }
    }

    /// Decodes a basis index of the `(n + 1)`-qubit register.
    pub fn from_index(n: usize, index: usize) -> Self {
        Self {
            corner: ((index >> n) & 1) as u8,
            bonds: (0..n).map(|k| ((index >> k) & 1) as u8).collect(),
        }
    }

    pub fn basis_index(&self, n: usize) -> Result<usize, TransferError> {
        if self.bonds.len() != n {
            return Err(TransferError::BoundaryLength { expected: n, got: self.bonds.len() });
        }
        let mut index = (self.corner as usize) << n;
        for (k, &b) in self.bonds.iter().enumerate() {
            index |= (b as usize) << k;
        }
        Ok(index)
    }
}

/// Dense `2^(N+1) × 2^(N+1)` transfer matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    n: usize,
    dim: usize,
    entries: Vec<f64>,
    source: RMatrix,
}

pub fn assemble_transfer(r: &RMatrix, n: usize) -> Result<TransferOperator, TransferError> {
    if n == 0 {
        return Err(TransferError::EmptyLattice { n_cols: 0, n_rows: 1 });
    }
    if n + 1 > DENSE_CAP_QUBITS {
        return Err(TransferError::DimensionCap { qubits: n + 1, cap: DENSE_CAP_QUBITS });
    }
    let dim = 1usize << (n + 1);
    let half = 1usize << n;
    let mut entries = vec![0.0; dim * dim];
    // Depth-first over columns: the prefix product of the 2×2 lateral
    // matrices M_k[b][b'] = R[2b + d_k][2b' + u_k] is shared by all
    // completions of (d_1..d_k, u_1..u_k).
    let rm = r.entries();
    let mut stack: Vec<(usize, usize, usize, [[f64; 2]; 2])> =
        vec![(0, 0, 0, [[1.0, 0.0], [0.0, 1.0]])];
    while let Some((depth, dbits, ubits, prefix)) = stack.pop() {
        if depth == n {
            for l in 0..2 {
                for rr in 0..2 {
                    let row = (l << n) | dbits;
                    let col = (rr << n) | ubits;
                    entries[row * dim + col] = prefix[l][rr];
                }
            }
            continue;
        }
        for d in 0..2 {
            for u in 0..2 {
                let mut next = [[0.0; 2]; 2];
                for (a, next_row) in next.iter_mut().enumerate() {
                    for (c, slot) in next_row.iter_mut().enumerate() {
                        *slot = prefix[a][0] * rm[d][2 * c + u] + prefix[a][1] * rm[2 + d][2 * c + u];
                    }
                }
                stack.push((depth + 1, dbits | (d << depth), ubits | (u << depth), next));
            }
        }
    }
    debug_assert_eq!(half * 2, dim);
    Ok(TransferOperator { n, dim, entries, source: *r })
}

impl TransferOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &RMatrix {
        &self.source
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.entries.iter_mut().for_each(|x| *x *= factor);
        out
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.entries.iter().all(|&x| x > 0.0)
    }

    /// `𝕋ᵀ v`, used for the left Perron vector.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>, TransferError> {
        self.check_len(v.len())?;
        let mut out = vec![0.0; self.dim];
        for (row, &x) in self.entries.chunks_exact(self.dim).zip(v) {
            for (o, &t) in out.iter_mut().zip(row) {
                *o += t * x;
            }
        }
        Ok(out)
    }

    /// Full spectrum from a dense Schur factorization, sorted by decreasing
    /// modulus.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let m = nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        let mut ev: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        ev
    }

    /// Row-major CSV dump for debugging.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.entries.chunks_exact(self.dim) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    fn check_len(&self, len: usize) -> Result<(), TransferError> {
        if len != self.dim {
            Err(TransferError::DimensionMismatch { expected: self.dim, got: len })
        } else {
            Ok(())
        }
    }
}

/// Dense `𝕋 v`.
pub fn apply_transfer(t: &TransferOperator, v: &[f64]) -> Result<Vec<f64>, TransferError> {
    t.check_len(v.len())?;
    let row_dot = |row: &[f64]| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let out = if t.dim >= 1024 {
        t.entries.par_chunks_exact(t.dim).map(row_dot).collect()
    } else {
        t.entries.chunks_exact(t.dim).map(row_dot).collect()
    };
    Ok(out)
}

/// Matrix-free `𝕋 v`: contracts one R factor at a time, rightmost first.
/// Works for any `N` whose state vector fits in memory.
pub fn apply_transfer_matrix_free(r: &RMatrix, n: usize, v: &[f64]) -> Result<Vec<f64>, TransferError> {
    if n == 0 {
        return Err(TransferError::EmptyLattice { n_cols: 0, n_rows: 1 });
    }
    let dim = 1usize << (n + 1);
    if v.len() != dim {
        return Err(TransferError::DimensionMismatch { expected: dim, got: v.len() });
    }
    let rm = r.entries();
    let lat = 1usize << n;
    let mut cur = v.to_vec();
    let mut next = vec![0.0; dim];
    for k in (0..n).rev() {
        let vert = 1usize << k;
        for base in 0..dim {
            if base & (lat | vert) != 0 {
                continue;
            }
            let idx = [base, base | vert, base | lat, base | lat | vert];
            let input = [cur[idx[0]], cur[idx[1]], cur[idx[2]], cur[idx[3]]];
            for (i, &slot) in idx.iter().enumerate() {
                next[slot] = rm[i].iter().zip(&input).map(|(a, b)| a * b).sum();
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// `⟨bottom| 𝕋^m |top⟩`: the partition function of an `N × m` lattice with
/// fixed bottom and top bonds, fixed corners and summed helical lateral bonds.
pub fn partition_element(
    t: &TransferOperator,
    m: usize,
    bottom: &BoundaryRow,
    top: &BoundaryRow,
) -> Result<f64, TransferError> {
    if m == 0 {
        return Err(TransferError::ZeroPower);
    }
    let row = bottom.basis_index(t.n)?;
    let col = top.basis_index(t.n)?;
    let mut v = vec![0.0; t.dim];
    v[col] = 1.0;
    for _ in 0..m {
        v = apply_transfer(t, &v)?;
    }
    Ok(v[row])
}

/// `f = −ln Z / (β N M)`.
pub fn free_energy_density(z: f64, shape: LatticeShape, beta: f64) -> Result<f64, TransferError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(TransferError::NonPositivePartition(z));
    }
    if !(beta > 0.0) {
        return Err(TransferError::InvalidBeta(beta));
    }
    Ok(-z.ln() / (beta * shape.n_sites() as f64))
}

/// Writes `(index, value)` pairs as CSV.
pub fn vector_to_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v:e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_model, r_matrix, reference_r_matrix};
    use proptest::prelude::*;

    fn ones() -> RMatrix {
        RMatrix::new([[1.0; 4]; 4]).unwrap()
    }

    #[test]
    fn single_column_is_r_itself() {
        let r = reference_r_matrix();
        let t = assemble_transfer(&r, 1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(t.get(i, j), r.entries()[i][j]);
            }
        }
    }

    #[test]
    fn all_ones_two_columns_counts_lateral_sum() {
        let t = assemble_transfer(&ones(), 2).unwrap();
        assert!(t.entries().iter().all(|&x| x == 2.0));
    }

    #[test]
    fn dense_entry_matches_explicit_sum() {
        let r = r_matrix(&generate_model(0.4, 2.0, 5).unwrap());
        let n = 3;
        let t = assemble_transfer(&r, n).unwrap();
        for row in 0..t.dim() {
            for col in 0..t.dim() {
                let bottom = BoundaryRow::from_index(n, row);
                let top = BoundaryRow::from_index(n, col);
                let mut sum = 0.0;
                for b in 0..(1 << (n - 1)) {
                    let lateral = |k: usize| -> u8 {
                        if k == 0 {
                            bottom.corner
                        } else if k == n {
                            top.corner
                        } else {
                            ((b >> (k - 1)) & 1) as u8
                        }
                    };
                    let mut prod = 1.0;
                    for k in 1..=n {
                        prod *= r.weight(bottom.bonds[k - 1], top.bonds[k - 1], lateral(k - 1), lateral(k));
                    }
                    sum += prod;
                }
                assert!((t.get(row, col) - sum).abs() <= 1e-15 * sum);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = assemble_transfer(&ones(), DENSE_CAP_QUBITS).unwrap_err();
        assert_eq!(err, TransferError::DimensionCap { qubits: DENSE_CAP_QUBITS + 1, cap: DENSE_CAP_QUBITS });
    }

    #[test]
    fn apply_basis_vector_gives_column() {
        let t = assemble_transfer(&reference_r_matrix(), 3).unwrap();
        for k in [0, 5, 15] {
            let mut e = vec![0.0; t.dim()];
            e[k] = 1.0;
            let col = apply_transfer(&t, &e).unwrap();
            for (row, &x) in col.iter().enumerate() {
                assert_eq!(x, t.get(row, k));
            }
        }
        assert_eq!(
            apply_transfer(&t, &[1.0; 3]).unwrap_err(),
            TransferError::DimensionMismatch { expected: 16, got: 3 }
        );
    }

    #[test]
    fn all_ones_uniform_vector_is_constant() {
        let t = assemble_transfer(&ones(), 2).unwrap();
        let out = apply_transfer(&t, &[0.5; 8]).unwrap();
        assert!(out.iter().all(|&x| (x - out[0]).abs() < 1e-15));
    }

    #[test]
    fn boundary_index_round_trip_and_errors() {
        for idx in 0..32 {
            assert_eq!(BoundaryRow::from_index(4, idx).basis_index(4).unwrap(), idx);
        }
        assert_eq!(
            BoundaryRow::zeros(2).basis_index(3).unwrap_err(),
            TransferError::BoundaryLength { expected: 3, got: 2 }
        );
        assert_eq!(BoundaryRow::new(2, vec![0]).unwrap_err(), TransferError::BondValue);
    }

    #[test]
    fn one_by_one_element_is_r_entry() {
        let r = reference_r_matrix();
        let t = assemble_transfer(&r, 1).unwrap();
        for (l, d, rr, u) in [(0, 0, 0, 0), (1, 0, 0, 1), (1, 1, 1, 1), (0, 1, 1, 0)] {
            let bottom = BoundaryRow::new(l, vec![d]).unwrap();
            let top = BoundaryRow::new(rr, vec![u]).unwrap();
            let z = partition_element(&t, 1, &bottom, &top).unwrap();
            assert_eq!(z, r.weight(d, u, l, rr));
        }
    }

    #[test]
    fn all_ones_counts_free_bonds() {
        let t = assemble_transfer(&ones(), 2).unwrap();
        let shape = LatticeShape::new(2, 2).unwrap();
        let z = partition_element(&t, 2, &BoundaryRow::zeros(2), &BoundaryRow::zeros(2)).unwrap();
        assert_eq!(shape.n_free_bonds(), 5);
        assert_eq!(z, 32.0);
    }

    #[test]
    fn zero_power_rejected() {
        let t = assemble_transfer(&ones(), 1).unwrap();
        let b = BoundaryRow::zeros(1);
        assert_eq!(partition_element(&t, 0, &b, &b).unwrap_err(), TransferError::ZeroPower);
    }

    #[test]
    fn free_energy_examples() {
        let one = LatticeShape::new(1, 1).unwrap();
        assert_eq!(free_energy_density(1.0, one, 2.0).unwrap(), 0.0);
        let beta: f64 = 1.7;
        assert!((free_energy_density((-beta).exp(), one, beta).unwrap() - 1.0).abs() < 1e-15);
        assert!(free_energy_density(0.0, one, 1.0).is_err());
        assert!(free_energy_density(-1.0, one, 1.0).is_err());
    }

    #[test]
    fn lattice_shape_rejects_empty() {
        assert!(LatticeShape::new(0, 3).is_err());
        assert!(LatticeShape::new(3, 0).is_err());
        let s = LatticeShape::new(3, 2).unwrap();
        assert_eq!(s.n_bonds(), 3 * 3 + 2 * 2 + 1 + 2);
    }

    proptest! {
        #[test]
        fn matrix_free_matches_dense(seed in any::<u64>(), n in 1usize..6, vseed in any::<u64>()) {
            let r = r_matrix(&generate_model(0.3, 2.0, seed).unwrap());
            let t = assemble_transfer(&r, n).unwrap();
            let v = crate::rng::CounterRng::new(vseed, crate::rng::Domain::Inputs, 0).uniform_vec(t.dim());
            let a = apply_transfer(&t, &v).unwrap();
            let b = apply_transfer_matrix_free(&r, n, &v).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-13 * x.abs().max(1e-300));
            }
        }

        #[test]
        fn strictly_positive_from_positive_r(seed in any::<u64>(), n in 1usize..5) {
            let r = r_matrix(&generate_model(1.0, 2.0, seed).unwrap());
            prop_assert!(assemble_transfer(&r, n).unwrap().is_strictly_positive());
        }

        #[test]
        fn powers_compose(seed in any::<u64>(), a in 1usize..4, b in 1usize..4, row in 0usize..16, col in 0usize..16) {
            let r = r_matrix(&generate_model(0.4, 2.0, seed).unwrap());
            let t = assemble_transfer(&r, 3).unwrap();
            let bottom = BoundaryRow::from_index(3, row);
            let top = BoundaryRow::from_index(3, col);
            let whole = partition_element(&t, a + b, &bottom, &top).unwrap();
            let mut v = vec![0.0; 16];
            v[col] = 1.0;
            for _ in 0..b { v = apply_transfer(&t, &v).unwrap(); }
            for _ in 0..a { v = apply_transfer(&t, &v).unwrap(); }
            prop_assert!((whole - v[row]).abs() <= 1e-12 * whole);
        }
    }
}
