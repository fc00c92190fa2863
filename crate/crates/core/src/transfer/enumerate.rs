//! Direct configuration sum, independent of the transfer operator.
//!
//! Vertex `(m, k)` (row `m = 1..=M` from the bottom, column `k = 1..=N`) sees
//! `d = v[m−1][k]`, `u = v[m][k]`, `l = h[m][k−1]`, `r = h[m][k]`. Row 0 and
//! row `M` of verticals are the fixed boundaries, `h[1][0]` and `h[M][N]` are
//! the fixed corners and `h[m][N] = h[m+1][0] = s_m` is summed.

use rayon::join;

use super::{BoundaryRow, LatticeShape, TransferError};
use crate::model::{energy_index, VertexModel};

/// At most `2^26` configurations are enumerated.
pub const ENUMERATION_BUDGET_BITS: usize = 26;

struct Layout {
    n: usize,
    m: usize,
    bottom: Vec<u8>,
    top: Vec<u8>,
    l_corner: u8,
    r_corner: u8,
    eps: [f64; 16],
    beta: f64,
}

impl Layout {
    fn weight(&self, config: u64, v: &mut [u8], h: &mut [u8]) -> f64 {
        let (n, m) = (self.n, self.m);
        // Vertical bonds, (m + 1) rows of n.
        v[..n].copy_from_slice(&self.bottom);
        v[m * n..].copy_from_slice(&self.top);
        let mut bit = 0;
        let mut take = || {
            let b = ((config >> bit) & 1) as u8;
            bit += 1;
            b
        };
        for slot in &mut v[n..m * n] {
            *slot = take();
        }
        // Horizontal bonds, m rows of n + 1 (index 0 = left edge).
        let w = n + 1;
        for row in 0..m {
            for k in 1..n {
                h[row * w + k] = take();
            }
        }
        for row in 0..m - 1 {
            let s = take();
            h[row * w + n] = s;
            h[(row + 1) * w] = s;
        }
        h[0] = self.l_corner;
        h[(m - 1) * w + n] = self.r_corner;

        let mut energy = 0.0;
        for row in 0..m {
            for k in 0..n {
                let d = v[row * n + k];
                let u = v[(row + 1) * n + k];
                let l = h[row * w + k];
                let r = h[row * w + k + 1];
                energy += self.eps[energy_index(d, u, l, r)];
            }
        }
        (-self.beta * energy).exp()
    }

    fn sum(&self, lo: u64, hi: u64) -> f64 {
        if hi - lo <= 64 {
            let mut v = vec![0u8; (self.m + 1) * self.n];
            let mut h = vec![0u8; self.m * (self.n + 1)];
            return (lo..hi).map(|c| self.weight(c, &mut v, &mut h)).sum();
        }
        let mid = lo + (hi - lo) / 2;
        if hi - lo >= 1 << 14 {
            let (a, b) = join(|| self.sum(lo, mid), || self.sum(mid, hi));
            a + b
        } else {
            self.sum(lo, mid) + self.sum(mid, hi)
        }
    }
}

/// `Σ_Q exp(−β E(Q))` over all configurations with the given bottom and top
/// rows and corners; the reduction tree is fixed, so the result is bit-stable.
pub fn brute_force_partition(
    model: &VertexModel,
    shape: LatticeShape,
    bottom: &BoundaryRow,
    top: &BoundaryRow,
) -> Result<f64, TransferError> {
    let n = shape.n_cols();
    for row in [bottom, top] {
        if row.bonds.len() != n {
            return Err(TransferError::BoundaryLength { expected: n, got: row.bonds.len() });
        }
        if row.corner > 1 || row.bonds.iter().any(|&b| b > 1) {
            return Err(TransferError::BondValue);
        }
    }
    let bits = shape.n_free_bonds();
    if bits > ENUMERATION_BUDGET_BITS {
        return Err(TransferError::EnumerationBudget { bits, budget: ENUMERATION_BUDGET_BITS });
    }
    let layout = Layout {
        n,
        m: shape.n_rows(),
        bottom: bottom.bonds.clone(),
        top: top.bonds.clone(),
        l_corner: bottom.corner,
        r_corner: top.corner,
        eps: *model.energies(),
        beta: model.beta(),
    };
    Ok(layout.sum(0, 1u64 << bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_model, r_matrix};
    use crate::transfer::{assemble_transfer, partition_element};

    #[test]
    fn single_vertex_is_one_boltzmann_factor() {
        let model = generate_model(0.4, 2.0, 9).unwrap();
        let shape = LatticeShape::new(1, 1).unwrap();
        for i in 0..16usize {
            let (d, u, l, r) = crate::model::bonds_of_index(i);
            let z = brute_force_partition(
                &model,
                shape,
                &BoundaryRow::new(l, vec![d]).unwrap(),
                &BoundaryRow::new(r, vec![u]).unwrap(),
            )
            .unwrap();
            assert_eq!(z, (-2.0 * model.energy(d, u, l, r)).exp());
        }
    }

    #[test]
    fn zero_energies_count_configurations() {
        let model = VertexModel::from_energies([0.0; 16], 1.3).unwrap();
        for (n, m) in [(1, 1), (2, 2), (3, 2), (2, 3)] {
            let shape = LatticeShape::new(n, m).unwrap();
            let z = brute_force_partition(&model, shape, &BoundaryRow::zeros(n), &BoundaryRow::zeros(n)).unwrap();
            assert_eq!(z, (1u64 << shape.n_free_bonds()) as f64);
        }
    }

    #[test]
    fn two_by_two_matches_transfer() {
        let model = generate_model(0.3, 2.0, 21).unwrap();
        let t = assemble_transfer(&r_matrix(&model), 2).unwrap();
        let shape = LatticeShape::new(2, 2).unwrap();
        let b = BoundaryRow::zeros(2);
        let direct = brute_force_partition(&model, shape, &b, &b).unwrap();
        let via_t = partition_element(&t, 2, &b, &b).unwrap();
        assert!((direct - via_t).abs() <= 1e-12 * direct);
    }

    #[test]
    fn budget_guard() {
        let model = VertexModel::from_energies([0.0; 16], 1.0).unwrap();
        let shape = LatticeShape::new(6, 6).unwrap();
        let err = brute_force_partition(&model, shape, &BoundaryRow::zeros(6), &BoundaryRow::zeros(6)).unwrap_err();
        assert!(matches!(err, TransferError::EnumerationBudget { .. }));
    }
}
