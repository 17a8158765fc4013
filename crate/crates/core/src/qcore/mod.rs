//! Complex linear algebra for small qubit registers: amplitude vectors, density
//! matrices, window circuits, Pauli-X product expectations and contiguous
//! partial traces.

mod gate;
mod ops;
mod shots;
mod state;

pub use gate::{Gate, GateKind, Mat2, Pauli};
pub use ops::{
    apply_circuit, circuit_unitary, expectation_xx, expectation_xx_density, expectation_xx_pure,
    partial_trace_density, partial_trace_pure, partial_trace_window, Evolve, Window,
};
pub use shots::{sample_expectation, stream_key, ShotConfig, ShotMode};
pub use state::{DensityMatrix, PureState, QuantumState};
