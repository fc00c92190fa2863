use super::ExperimentError;
use crate::dilation::{dilate, SvdFactors};
use crate::simulator::{CircuitPlan, Gate};

#[derive(Debug, Clone, PartialEq)]
pub struct TCircuitSpec {
    pub n: usize,
    pub factors: SvdFactors,
    pub m_power: usize,
}

impl TCircuitSpec {
    pub fn build(&self) -> Result<CircuitPlan, ExperimentError> {
        build_t_plan(&self.factors, self.n, self.m_power)
    }
}

/// Classical register width of the 𝕋 circuit: `N·M` post-selection slots on
/// top of `N + 1` data bits.
pub fn t_plan_clbits(n: usize, m_power: usize) -> usize {
    n * m_power + n + 1
}

/// `M` blocks of `𝕋 = ℝ₀₁⋯ℝ₀N` on `N + 2` qubits: data `q₀…q_{N−1}`,
/// lateral `q_N`, ancilla `q_{N+1}`. Within a block the rightmost factor acts
/// first, so column `k = N, …, 1` (qubit `k − 1`) gets V, 𝔻, a post-selection
/// and U. Post-selection bits fill the register from the top; data qubit `j`
/// is finally read into `c_j`.
pub fn build_t_plan(factors: &SvdFactors, n: usize, m_power: usize) -> Result<CircuitPlan, ExperimentError> {
    if n == 0 || m_power == 0 {
        return Err(ExperimentError::InvalidInput("the 𝕋 circuit needs N ≥ 1 and M ≥ 1".into()));
    }
    let width = t_plan_clbits(n, m_power);
    let mut plan = CircuitPlan::new(n + 2, width)?;
    let v = plan.add_matrix(Gate::from_real_rows(&factors.v)?);
    let dil = plan.add_matrix(Gate::from_real_rows(&dilate(factors.d)?.matrix)?);
    let u = plan.add_matrix(Gate::from_real_rows(&factors.u)?);
    let (lat, anc) = (n, n + 1);
    for block in 0..m_power {
        for j in 0..n {
            let q = n - 1 - j;
            plan.unitary(v, &[q, lat])?;
            plan.unitary(dil, &[q, lat, anc])?;
            plan.measure_postselect0(anc, width - 1 - j - block * n)?;
            plan.unitary(u, &[q, lat])?;
        }
    }
    for q in 0..=n {
        plan.measure(q, q)?;
    }
    Ok(plan)
}

/// Real orthogonal reflection taking `|00⟩` to the unit vector `alpha`.
pub fn householder_prep(alpha: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut w = alpha.map(|x| -x);
    w[0] += 1.0;
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let mut h = [[0.0; 4]; 4];
    for i in 0..4 {
        h[i][i] = 1.0;
        if ww > 1e-30 {
            for j in 0..4 {
                h[i][j] -= 2.0 * w[i] * w[j] / ww;
            }
        }
    }
    h
}

/// Single-dilation test: prepare `α` on `q₀q₁`, apply 𝔻 with the ancilla on
/// `q₂`, post-select the ancilla into `c₂` and read the data into `c₀c₁`.
pub fn d_test_plan(d: [f64; 4], alpha: &[f64; 4]) -> Result<CircuitPlan, ExperimentError> {
    let norm = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(ExperimentError::InvalidInput("zero input state".into()));
    }
    let alpha = alpha.map(|x| x / norm);
    let mut plan = CircuitPlan::new(3, 3)?;
    plan.push_unitary(Gate::from_real_rows(&householder_prep(&alpha))?, &[0, 1])?;
    plan.push_unitary(Gate::from_real_rows(&dilate(d)?.matrix)?, &[0, 1, 2])?;
    plan.measure_postselect0(2, 2)?;
    plan.measure(0, 0)?;
    plan.measure(1, 1)?;
    Ok(plan)
}
