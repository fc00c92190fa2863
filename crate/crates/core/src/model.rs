//! Vertex models and their 4×4 Boltzmann gate.
//!
//! A vertex carries four bonds: down `d`, up `u`, left `l`, right `r`, each
//! weak (0) or strong (1). The model is the table of the 16 vertex energies.
//!
//! Flat energy index: `8·l + 4·d + 2·r + u`. Read as a 4-bit string
//! `b₀b₁b₂b₃ = (l, d, r, u)`, the entry lands in row `2b₀ + b₁ = 2l + d` and
//! column `2b₂ + b₃ = 2r + u` of the [`RMatrix`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{CounterRng, Domain};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("energy table entry {index} is not finite ({value})")]
    NonFiniteEnergy { index: usize, value: f64 },
    #[error("R-matrix entry ({row}, {col}) = {value} is not strictly positive and finite")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    #[error("expected 16 energies, got {0}")]
    EnergyCount(usize),
    #[error("model file gives neither `energies` nor both `c` and `seed`")]
    MissingSource,
    #[error("malformed model JSON: {0}")]
    Json(String),
}

/// Flat position of `ε_d^u(l, r)` in the energy table.
#[inline]
pub fn energy_index(d: u8, u: u8, l: u8, r: u8) -> usize {
    debug_assert!(d < 2 && u < 2 && l < 2 && r < 2);
    8 * l as usize + 4 * d as usize + 2 * r as usize + u as usize
}

/// Inverse of [`energy_index`]: returns `(d, u, l, r)`.
#[inline]
pub fn bonds_of_index(index: usize) -> (u8, u8, u8, u8) {
    let bit = |k: usize| ((index >> k) & 1) as u8;
    (bit(2), bit(0), bit(3), bit(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexModel {
    energies: [f64; 16],
    beta: f64,
    /// Strength of the deterministic part; `None` for tables given verbatim.
    c: Option<f64>,
    seed: Option<u64>,
}

impl VertexModel {
    /// The energy unit. Energies are stored in these units.
    pub const DELTA: f64 = 1.0;

    pub fn from_energies(energies: [f64; 16], beta: f64) -> Result<Self, ModelError> {
        check_beta(beta)?;
        if let Some((index, &value)) = energies.iter().enumerate().find(|(_, e)| !e.is_finite()) {
            return Err(ModelError::NonFiniteEnergy { index, value });
        }
        Ok(Self { energies, beta, c: None, seed: None })
    }

    /// Recovers the energy table that produces a given R matrix at `beta`,
    /// `ε = −ln(R) / β`.
    pub fn from_r_matrix(r: &RMatrix, beta: f64) -> Result<Self, ModelError> {
        check_beta(beta)?;
        let mut energies = [0.0; 16];
        for (i, e) in energies.iter_mut().enumerate() {
            let (d, u, l, rr) = bonds_of_index(i);
            *e = -r.weight(d, u, l, rr).ln() / beta;
        }
        Self::from_energies(energies, beta)
    }

    pub fn energies(&self) -> &[f64; 16] {
        &self.energies
    }

    pub fn energy(&self, d: u8, u: u8, l: u8, r: u8) -> f64 {
        self.energies[energy_index(d, u, l, r)]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c(&self) -> Option<f64> {
        self.c
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Returns a copy with one energy replaced.
    pub fn with_energy(&self, index: usize, value: f64) -> Result<Self, ModelError> {
        let mut energies = self.energies;
        energies[index] = value;
        let mut out = Self::from_energies(energies, self.beta)?;
        out.c = None;
        out.seed = None;
        Ok(out)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            beta: self.beta,
            c: self.c,
            seed: self.seed,
            energies: Some(self.energies.to_vec()),
        }
    }
}

fn check_beta(beta: f64) -> Result<(), ModelError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidBeta(beta))
    }
}

/// Randomized model: `ε_d^u(l,r) = c·(d+u+l+r)·Δ + ξ·Δ`, with one
/// `ξ ~ Uniform[0,1)` per table entry drawn in flat-index order from the
/// model-energy stream of `seed`.
pub fn generate_model(c: f64, beta: f64, seed: u64) -> Result<VertexModel, ModelError> {
    check_beta(beta)?;
    let mut rng = CounterRng::new(seed, Domain::ModelEnergies, 0);
    let mut energies = [0.0; 16];
    for (i, e) in energies.iter_mut().enumerate() {
        let active = (i as u32).count_ones() as f64;
        *e = c * active * VertexModel::DELTA + rng.uniform() * VertexModel::DELTA;
    }
    let mut model = VertexModel::from_energies(energies, beta)?;
    model.c = Some(c);
    model.seed = Some(seed);
    Ok(model)
}

/// The 4×4 gate of Boltzmann weights; `entries[2l + d][2r + u] = exp(−β ε_d^u(l,r))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RMatrix {
    entries: [[f64; 4]; 4],
}

impl RMatrix {
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self, ModelError> {
        for (row, line) in entries.iter().enumerate() {
            for (col, &value) in line.iter().enumerate() {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(ModelError::NonPositiveEntry { row, col, value });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    #[inline]
    pub fn weight(&self, d: u8, u: u8, l: u8, r: u8) -> f64 {
        self.entries[2 * l as usize + d as usize][2 * r as usize + u as usize]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let mut entries = self.entries;
        entries.iter_mut().flatten().for_each(|x| *x *= factor);
        Self::new(entries)
    }
}

pub fn r_matrix(model: &VertexModel) -> RMatrix {
    let mut entries = [[0.0; 4]; 4];
    for i in 0..16 {
        let (d, u, l, r) = bonds_of_index(i);
        entries[2 * l as usize + d as usize][2 * r as usize + u as usize] =
            (-model.beta * model.energies[i]).exp();
    }
    // Underflow to zero is possible for absurd β·ε; callers that need strict
    // positivity go through `RMatrix::new`.
    RMatrix { entries }
}

/// Reference instance generated with `c = 0.4`, `β = 2` from an unrecorded
/// random stream. Kept verbatim as a fixture.
pub const REFERENCE_R: [[f64; 4]; 4] = [
    [0.5265, 0.1508, 0.0963, 0.0305],
    [0.1941, 0.1467, 0.0410, 0.0370],
    [0.3334, 0.2018, 0.1079, 0.0126],
    [0.1588, 0.0160, 0.0546, 0.0302],
];

pub const REFERENCE_BETA: f64 = 2.0;

pub fn reference_r_matrix() -> RMatrix {
    RMatrix::new(REFERENCE_R).expect("reference entries are positive")
}

pub fn reference_model() -> VertexModel {
    VertexModel::from_r_matrix(&reference_r_matrix(), REFERENCE_BETA)
        .expect("reference entries are positive")
}

/// On-disk model description. `energies` wins over `(c, seed)` when both
/// are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<VertexModel, ModelError> {
        match (self.energies, self.c, self.seed) {
            (Some(list), c, seed) => {
                let energies: [f64; 16] =
                    list.as_slice().try_into().map_err(|_| ModelError::EnergyCount(list.len()))?;
                let mut model = VertexModel::from_energies(energies, self.beta)?;
                model.c = c;
                model.seed = seed;
                Ok(model)
            }
            (None, Some(c), Some(seed)) => generate_model(c, self.beta, seed),
            _ => Err(ModelError::MissingSource),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_layout_matches_row_and_column() {
        for i in 0..16 {
            let (d, u, l, r) = bonds_of_index(i);
            assert_eq!(energy_index(d, u, l, r), i);
            // b0 b1 | b2 b3 read MSB first
            let b = [(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1];
            assert_eq!(2 * l as usize + d as usize, 2 * b[0] + b[1]);
            assert_eq!(2 * r as usize + u as usize, 2 * b[2] + b[3]);
        }
    }

    #[test]
    fn large_c_dominates_random_part() {
        let m = generate_model(10.0, 2.0, 3).unwrap();
        for (i, &e) in m.energies().iter().enumerate() {
            let active = (i as u32).count_ones() as f64;
            assert!(e >= 10.0 * active && e < 10.0 * active + 1.0);
        }
    }

    #[test]
    fn zero_c_gives_uniform_draws() {
        let m = generate_model(0.0, 2.0, 11).unwrap();
        assert!(m.energies().iter().all(|&e| (0.0..1.0).contains(&e)));
        let mut rng = CounterRng::new(11, Domain::ModelEnergies, 0);
        let expected = rng.uniform_vec(16);
        assert_eq!(m.energies().as_slice(), expected.as_slice());
    }

    #[test]
    fn generator_is_pinned() {
        // Golden values frozen from the first run of the seeded generator.
        let r = r_matrix(&generate_model(0.4, 2.0, 7).unwrap());
        let got: Vec<f64> = r.entries().iter().flatten().copied().collect();
        for (g, e) in got.iter().zip(PINNED_C04_SEED7.iter()) {
            assert!((g - e).abs() < 1e-15, "{got:?}");
        }
    }

    // Cross-checked against a from-scratch ChaCha20 written outside this crate.
    const PINNED_C04_SEED7: [f64; 16] = [
        0.3999245320366684, 0.20009736381514587, 0.15374409733541075, 0.027372872662082427, 0.09824489704618397, 0.04968784317779381, 0.09010823062416004, 0.056209311287862766, 0.26656993652536143,
        0.1508873645003158, 0.10628088883742916, 0.021560169646095327, 0.12367610504212086, 0.08318155409943455, 0.023587346714109062, 0.012100602519291057,
    ];

    #[test]
    fn zero_energies_give_unit_weights() {
        let m = VertexModel::from_energies([0.0; 16], 2.0).unwrap();
        let r = r_matrix(&m);
        assert!(r.entries().iter().flatten().all(|&x| x == 1.0));
    }

    #[test]
    fn bond_count_energies_give_product_weights() {
        let mut energies = [0.0; 16];
        for (i, e) in energies.iter_mut().enumerate() {
            *e = (i as u32).count_ones() as f64;
        }
        let r = r_matrix(&VertexModel::from_energies(energies, 2.0).unwrap());
        let w = [1.0, (-2.0f64).exp()];
        for row in 0..4 {
            for col in 0..4 {
                let expect = w[row >> 1] * w[row & 1] * w[col >> 1] * w[col & 1];
                assert!((r.entries()[row][col] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reference_model_round_trips_to_fixture() {
        let r = r_matrix(&reference_model());
        for (a, b) in r.entries().iter().flatten().zip(REFERENCE_R.iter().flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(generate_model(0.4, 0.0, 1).unwrap_err(), ModelError::InvalidBeta(0.0));
        let mut e = [0.0; 16];
        e[5] = f64::NAN;
        assert!(matches!(
            VertexModel::from_energies(e, 1.0),
            Err(ModelError::NonFiniteEnergy { index: 5, .. })
        ));
        let mut bad = REFERENCE_R;
        bad[1][2] = 0.0;
        assert!(RMatrix::new(bad).is_err());
    }

    #[test]
    fn model_file_precedence_and_errors() {
        let generated = generate_model(0.4, 2.0, 9).unwrap();
        let file = generated.to_file();
        let text = file.to_json();
        let back = ModelFile::from_json(&text).unwrap().into_model().unwrap();
        assert_eq!(back.energies(), generated.energies());

        // energies win over (c, seed)
        let mut f = ModelFile::from_json(&text).unwrap();
        f.seed = Some(1234);
        assert_eq!(f.into_model().unwrap().energies(), generated.energies());

        let only_params = ModelFile { beta: 2.0, c: Some(0.4), seed: Some(9), energies: None };
        assert_eq!(only_params.into_model().unwrap().energies(), generated.energies());

        let missing = ModelFile { beta: 2.0, c: Some(0.4), seed: None, energies: None };
        assert_eq!(missing.into_model().unwrap_err(), ModelError::MissingSource);
        let short = ModelFile { beta: 2.0, c: None, seed: None, energies: Some(vec![0.0; 3]) };
        assert_eq!(short.into_model().unwrap_err(), ModelError::EnergyCount(3));
    }

    proptest! {
        #[test]
        fn weights_positive(energies in prop::array::uniform16(-20.0f64..20.0), beta in 0.01f64..5.0) {
            let r = r_matrix(&VertexModel::from_energies(energies, beta).unwrap());
            prop_assert!(r.entries().iter().flatten().all(|&x| x > 0.0));
            prop_assert!(RMatrix::new(*r.entries()).is_ok());
        }

        #[test]
        fn raising_one_energy_lowers_one_weight(
            energies in prop::array::uniform16(-5.0f64..5.0),
            index in 0usize..16,
            bump in 0.01f64..3.0,
        ) {
            let m = VertexModel::from_energies(energies, 1.5).unwrap();
            let before = r_matrix(&m);
            let after = r_matrix(&m.with_energy(index, energies[index] + bump).unwrap());
            let (d, u, l, r) = bonds_of_index(index);
            let (row, col) = (2 * l as usize + d as usize, 2 * r as usize + u as usize);
            for i in 0..4 {
                for j in 0..4 {
                    if (i, j) == (row, col) {
                        prop_assert!(after.entries()[i][j] < before.entries()[i][j]);
                    } else {
                        prop_assert_eq!(after.entries()[i][j], before.entries()[i][j]);
                    }
                }
            }
        }

        #[test]
        fn generator_deterministic(c in 0.0f64..3.0, seed in any::<u64>()) {
            prop_assert_eq!(generate_model(c, 2.0, seed).unwrap(), generate_model(c, 2.0, seed).unwrap());
        }
    }
}
