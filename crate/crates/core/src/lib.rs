//! Variational shadow quantum learning.
//!
//! Parameterized circuits on a few contiguous qubits are slid across an
//! `n`-qubit input; the Pauli `X⊗…⊗X` expectation of each placement is a
//! classical *shadow feature*, and a single fully-connected layer turns the
//! features into a sigmoid (binary) or softmax (multi-class) prediction.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below name the common instantiations.

pub mod analysis;
pub mod data;
pub mod error;
pub mod grad;
pub mod head;
pub mod linalg;
pub mod qcore;
pub mod scalar;
pub mod shadow;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Real;

pub type PureStateF64 = qcore::PureState<f64>;
pub type PureStateF32 = qcore::PureState<f32>;
pub type DensityMatrixF64 = qcore::DensityMatrix<f64>;
pub type DensityMatrixF32 = qcore::DensityMatrix<f32>;
pub type QuantumStateF64 = qcore::QuantumState<f64>;
pub type QuantumStateF32 = qcore::QuantumState<f32>;
