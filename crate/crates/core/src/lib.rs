//! Exact-arithmetic toolkit for quantum 2-SAT.
//!
//! * [`field`]: Gaussian-rational scalars and dense linear algebra, generic
//!   over [`field::Field`].
//! * [`instance`]: quantum k-SAT instances and their JSON format.
//! * [`solver`]: the polynomial-time quantum 2-SAT algorithm with transcript
//!   replay.
//! * [`classical`]: implication-graph 2-SAT and its diagonal embedding.
//! * [`oracle`]: brute-force nullity, state verification, energies.
//! * [`reduction`]: circuit to 4-local Hamiltonian compiler with history states.

pub mod classical;
pub mod field;
pub mod instance;
pub mod oracle;
pub mod reduction;
pub mod solver;

pub use field::{Field, Matrix, Scalar};

/// Exact dense matrix over Gaussian rationals.
pub type Mat = Matrix<Scalar>;
/// Double-precision complex matrix, used by spectral checks.
pub type MatF64 = Matrix<num_complex::Complex64>;
/// A 2×2 constraint tensor contracted directly against the state.
pub type ConstraintTensor = Mat;
