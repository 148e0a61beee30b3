//! Simulation and compilation toolkit for parametrically driven Kerr
//! nonlinear resonators stabilizing two-component cat states.
//!
//! The crate is organized around a small set of layers:
//!
//! - [`fock_core`]: truncated Fock-space linear algebra (operators, states,
//!   displacement, Wigner/Husimi grids, overlaps).
//! - [`hamiltonians`]: the engineered cat Hamiltonian, its drive-parameter
//!   form, displaced and lossy variants, the semiclassical metapotential,
//!   and multi-mode control Hamiltonians.
//! - [`spectrum`]: exact diagonalization, gap analysis and ground-manifold
//!   verification.
//! - [`cat_states`]: closed-form cat/collision-state algebra, photon
//!   statistics, Mandel Q, dephasing projection.
//! - [`dynamics`]: Schrödinger and Lindblad evolution under time-dependent
//!   well schedules, steady-state root solving under loss.
//! - [`holonomy`]: phase-space path geometry, coherent geometric phases and
//!   the collision-state transport unitary.
//! - [`compiler`]: holonomy-correct preparation paths and single-/multi-qubit
//!   gate schedules, plus code-space unitary prediction.
//! - [`circuit_map`]: closed-form map between superconducting-circuit
//!   hardware parameters and effective rotating-frame parameters.

pub mod cat_states;
pub mod circuit_map;
pub mod compiler;
pub mod dynamics;
pub mod fock_core;
pub mod hamiltonians;
pub mod holonomy;
pub mod spectrum;

pub use fock_core::{
    coherent_state, displaced_fock, displacement_operator, fidelity, ladder_operators,
    wigner_grid, DensityMatrix, Operator, PhasePoint, StateVector, TruncatedSpace, C64,
};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: dim {dim} (need at least 2)")]
    InvalidSpace { dim: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("truncation inadequate: dim {actual} too small, recommend at least {required}")]
    TruncationInadequate { required: usize, actual: usize },

    #[error("argument out of range: {what}")]
    OutOfRange { what: String },

    #[error("quantity undefined at well collision: {what}")]
    CollisionLimit { what: String },

    #[error("value {value:e} below numerical floor {floor:e}; request the exact branch instead")]
    PrecisionFloor { floor: f64, value: f64 },

    #[error("degenerate target: alpha0 = alpha1")]
    DegenerateTarget,

    #[error("path is open; operation requires a closed path")]
    OpenPath,

    #[error("{what} failed to converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("truncation breach at t = {time}: edge occupation {occupation:e} exceeds budget")]
    TruncationBreach { time: f64, occupation: f64 },

    #[error("infeasible design: {constraint}")]
    Infeasible { constraint: String },

    #[error("numerical failure: {what}")]
    Numerical { what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
