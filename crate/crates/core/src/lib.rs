//! Hamiltonian-evolution amplitude estimation from Suzuki–Trotter product
//! formulas, windowed sinc fractional queries and Chebyshev extrapolation to
//! zero step size.
//!
//! Modules, bottom up:
//!
//! - [`linalg`]: dense complex matrices, eigendecompositions, `exp`, `log`.
//! - [`trotter`]: product formulas, effective Hamiltonians, commutator sums.
//! - [`sinc`]: fractional powers from integer ones, with error and noise bounds.
//! - [`cheb`]: extrapolation weights and node budgets.
//! - [`pipeline`]: parameter selection, sampling, query accounting, noise studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb;
pub mod error;
pub mod linalg;
pub mod pipeline;
pub mod sinc;
pub mod trotter;

pub use num_complex::Complex64;

pub use cheb::{ChebPlan, NodeBudget};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, StateVector};
pub use pipeline::{
    EstimateOptions, EstimateReport, EvolutionProblem, EvolutionStage, NoiseMoments,
    NoiseStatistics, Overrides, ParameterChoice,
};
pub use sinc::{AmplitudeSeries, QChoice, SincPlan};
pub use trotter::{DecomposedHamiltonian, FormulaOrder};
