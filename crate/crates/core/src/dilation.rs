//! Scaled SVD of the R gate and its lift to orthogonal circuits.
//!
//! All 4×4 objects use the two-qubit index `2·lateral + vertical`; the 8×8
//! dilation appends the ancilla as the high bit, `4·ancilla + 2·lateral + vertical`.

use serde::Serialize;
use thiserror::Error;

use crate::model::RMatrix;

pub type Mat4 = [[f64; 4]; 4];
pub type Mat8 = [[f64; 8]; 8];

const RECONSTRUCTION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DilationError {
    #[error("scaled singular value d[{index}] = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("leading scaled singular value must be exactly 1, got {0}")]
    LeadingNotOne(f64),
    #[error("SVD residual {residual:e} exceeds {RECONSTRUCTION_TOL:e}")]
    Numerical { residual: f64 },
}

/// `ℝ = u · diag(d0_raw · d) · v` with orthogonal `u`, `v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvdFactors {
    pub u: Mat4,
    pub v: Mat4,
    pub d: [f64; 4],
    pub d0_raw: f64,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..4).map(|k| self.u[i][k] * self.d0_raw * self.d[k] * self.v[k][j]).sum();
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("factors serialize")
    }
}

fn frobenius(m: &Mat4) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn transpose(m: &Mat4) -> Mat4 {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[j][i] = m[i][j];
        }
    }
    t
}

fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Largest entry of `|mᵀm − I|`.
pub fn orthogonality_defect(m: &Mat4) -> f64 {
    let g = mul4(&transpose(m), m);
    let mut worst: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((x - target).abs());
        }
    }
    worst
}

/// One-sided Jacobi SVD of a general real 4×4 matrix.
pub fn svd_scaled_matrix(a: &Mat4) -> Result<SvdFactors, DilationError> {
    // Columns of w are rotated until mutually orthogonal; a = w · vsᵀ.
    let mut w = *a;
    let mut vs = [[0.0; 4]; 4];
    for (i, row) in vs.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..3 {
            for q in p + 1..4 {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for row in &w {
                    alpha += row[p] * row[p];
                    beta += row[q] * row[q];
                    gamma += row[p] * row[q];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut vs] {
                    for row in m.iter_mut() {
                        let (x, y) = (row[p], row[q]);
                        row[p] = c * x - s * y;
                        row[q] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..4).map(|j| w.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt()).collect();
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let d0_raw = norms[order[0]];
    if !(d0_raw > 0.0) || !d0_raw.is_finite() {
        return Err(DilationError::Numerical { residual: f64::NAN });
    }

    // Left vectors: normalized columns, re-orthogonalized; null directions are
    // completed from the standard basis.
    let mut ucols: Vec<[f64; 4]> = Vec::with_capacity(4);
    let mut sigma = [0.0; 4];
    let mut vrows = [[0.0; 4]; 4];
    for (slot, &j) in order.iter().enumerate() {
        let col: [f64; 4] = std::array::from_fn(|i| w[i][j]);
        let mut cand = if norms[j] > 1e-300 { col.map(|x| x / norms[j]) } else { [0.0; 4] };
        let mut ok = orthogonalize(&mut cand, &ucols);
        let mut basis = 0;
        while !ok {
            cand = [0.0; 4];
            cand[basis] = 1.0;
            basis += 1;
            ok = orthogonalize(&mut cand, &ucols);
        }
        ucols.push(cand);
        // Keep u·σ equal to the Jacobi column.
        sigma[slot] = (0..4).map(|i| cand[i] * col[i]).sum::<f64>().max(0.0);
        for k in 0..4 {
            vrows[slot][k] = vs[k][j];
        }
    }

    let mut u = [[0.0; 4]; 4];
    for (j, col) in ucols.iter().enumerate() {
        let pivot = col.iter().copied().find(|x| x.abs() > 1e-14).unwrap_or(0.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..4 {
            u[i][j] = sign * col[i];
        }
        for x in vrows[j].iter_mut() {
            *x *= sign;
        }
    }

    let mut d = sigma.map(|s| (s / d0_raw).clamp(0.0, 1.0));
    d[0] = 1.0;
    let factors = SvdFactors { u, v: vrows, d, d0_raw };

    let rec = factors.reconstruct();
    let mut diff = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            diff[i][j] = rec[i][j] - a[i][j];
        }
    }
    let residual = frobenius(&diff) / frobenius(a);
    let ortho = orthogonality_defect(&factors.u).max(orthogonality_defect(&transpose(&factors.v)));
    if !(residual <= RECONSTRUCTION_TOL) || !(ortho <= RECONSTRUCTION_TOL) {
        return Err(DilationError::Numerical { residual: residual.max(ortho) });
    }
    Ok(factors)
}

/// Gram–Schmidt step against `basis`; false when nothing independent remains.
fn orthogonalize(v: &mut [f64; 4], basis: &[[f64; 4]]) -> bool {
    for _ in 0..2 {
        for b in basis {
            let c: f64 = (0..4).map(|i| v[i] * b[i]).sum();
            for i in 0..4 {
                v[i] -= c * b[i];
            }
        }
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-8 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

pub fn svd_scaled(r: &RMatrix) -> Result<SvdFactors, DilationError> {
    svd_scaled_matrix(r.entries())
}

/// The 8×8 orthogonal lift `[[D, S], [S, −D]]` with `S = √(I − D²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationGate {
    pub matrix: Mat8,
    pub source_d: [f64; 4],
}

fn check_range(d: &[f64; 4]) -> Result<(), DilationError> {
    for (index, &value) in d.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(DilationError::OutOfRange { index, value });
        }
    }
    Ok(())
}

fn complement(a: f64) -> f64 {
    (1.0 - a * a).max(0.0).sqrt()
}

pub fn dilate(d: [f64; 4]) -> Result<DilationGate, DilationError> {
    check_range(&d)?;
    let mut matrix = [[0.0; 8]; 8];
    for i in 0..4 {
        let s = complement(d[i]);
        matrix[i][i] = d[i];
        matrix[i][i + 4] = s;
        matrix[i + 4][i] = s;
        matrix[i + 4][i + 4] = -d[i];
    }
    Ok(DilationGate { matrix, source_d: d })
}

/// Kept branch of `𝔻(|0⟩_a ⊗ α)`: normalized `Dα` and its probability `‖Dα‖²`.
pub fn dilation_kept_branch(d: &[f64; 4], alpha: &[f64; 4]) -> ([f64; 4], f64) {
    let kept: [f64; 4] = std::array::from_fn(|i| d[i] * alpha[i]);
    let p: f64 = kept.iter().map(|x| x * x).sum();
    let norm = p.sqrt();
    (kept.map(|x| if norm > 0.0 { x / norm } else { 0.0 }), p)
}

/// `𝒩(d, α) = 1 / √(Σᵢ dᵢ² αᵢ²)`.
pub fn normalization_constant(d: &[f64; 4], alpha: &[f64; 4]) -> f64 {
    1.0 / d.iter().zip(alpha).map(|(a, b)| (a * b).powi(2)).sum::<f64>().sqrt()
}

/// `S(a) = [[a, √(1−a²)], [√(1−a²), −a]]`.
pub fn s_gate(a: f64) -> [[f64; 2]; 2] {
    let s = complement(a);
    [[a, s], [s, -a]]
}

/// One step of the three-measurement construction: flip the selected data
/// qubits, then apply `S(a)` to the ancilla when both data qubits are 1 and
/// post-select the ancilla on 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TerashimaStep {
    pub flip_vertical: bool,
    pub flip_lateral: bool,
    pub a: f64,
}

/// `D = Diag(1,d₁,1,1)·Diag(1,1,d₂,1)·Diag(1,1,1,d₃)` as three controlled
/// steps with the X conjugations merged between neighbours. After the last
/// step both data qubits are back in place.
pub fn terashima_decomposition(d: [f64; 4]) -> Result<Vec<TerashimaStep>, DilationError> {
    if d[0] != 1.0 {
        return Err(DilationError::LeadingNotOne(d[0]));
    }
    check_range(&d)?;
    Ok(vec![
        TerashimaStep { flip_vertical: false, flip_lateral: true, a: d[1] },
        TerashimaStep { flip_vertical: true, flip_lateral: true, a: d[2] },
        TerashimaStep { flip_vertical: true, flip_lateral: false, a: d[3] },
    ])
}

impl TerashimaStep {
    /// Orthogonal 8×8 matrix of the step (X layer, then controlled S).
    pub fn matrix(&self) -> Mat8 {
        let mut flip = 0;
        if self.flip_vertical {
            flip |= 1;
        }
        if self.flip_lateral {
            flip |= 2;
        }
        let ccs = controlled_s(self.a);
        let mut out = [[0.0; 8]; 8];
        for col in 0..8 {
            let moved = col ^ flip;
            for row in 0..8 {
                out[row][col] = ccs[row][moved];
            }
        }
        out
    }
}

/// `S(a)` on the ancilla controlled by both data qubits.
pub fn controlled_s(a: f64) -> Mat8 {
    let mut m = [[0.0; 8]; 8];
    for i in 0..3 {
        m[i][i] = 1.0;
        m[i + 4][i + 4] = 1.0;
    }
    let s = s_gate(a);
    m[3][3] = s[0][0];
    m[3][7] = s[0][1];
    m[7][3] = s[1][0];
    m[7][7] = s[1][1];
    m
}

/// Runs the three steps on a real two-qubit input with exact post-selection.
/// Returns the normalized kept state and each step's keep probability.
pub fn apply_terashima(steps: &[TerashimaStep], alpha: &[f64; 4]) -> ([f64; 4], Vec<f64>) {
    let mut state = *alpha;
    let mut flips = 0usize;
    let mut probs = Vec::with_capacity(steps.len());
    for step in steps {
        if step.flip_vertical {
            flips ^= 1;
        }
        if step.flip_lateral {
            flips ^= 2;
        }
        // Physical index 3 holds logical index 3 ^ flips.
        let logical = 3 ^ flips;
        state[logical] *= step.a;
        let p: f64 = state.iter().map(|x| x * x).sum();
        probs.push(p);
        let n = p.sqrt();
        if n > 0.0 {
            state.iter_mut().for_each(|x| *x /= n);
        }
    }
    debug_assert_eq!(flips, 0);
    (state, probs)
}
