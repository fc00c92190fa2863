//! Planar vertex models, their row transfer matrices, and the post-selected
//! circuits that apply those matrices on a simulated quantum register.

// `!(x > 0.0)` is deliberate so NaN is rejected; index loops read better
// than iterator chains in the small dense kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dilation;
pub mod experiments;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod transfer;

pub use dilation::{dilate, svd_scaled, DilationGate, SvdFactors};
pub use experiments::{Backend, ExperimentError, Mode, TransferExperiment};
pub use model::{generate_model, r_matrix, RMatrix, VertexModel};
pub use simulator::{run_exact, run_shots, CircuitPlan, QuantumState, ShotHistogram};
pub use transfer::{assemble_transfer, spectral_summary, LatticeShape, SpectralSummary, TransferOperator};

/// Coarse failure category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    InsufficientStatistics,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Validation => 2,
            Self::InsufficientStatistics => 3,
            Self::Numerical => 4,
        }
    }
}

impl model::ModelError {
    pub fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

impl transfer::TransferError {
    pub fn class(&self) -> ErrorClass {
        match self {
            Self::NoConvergence { .. } | Self::NotPositive | Self::NonPositivePartition(_) => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }
}

impl dilation::DilationError {
    pub fn class(&self) -> ErrorClass {
        match self {
            Self::Numerical { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }
}

impl simulator::SimError {
    pub fn class(&self) -> ErrorClass {
        match self {
            Self::ImpossiblePostselection { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }
}
