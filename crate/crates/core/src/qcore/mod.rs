//! Dense linear algebra and the state, channel and measurement primitives.

pub mod channel;
pub mod eig;
pub mod gates;
pub mod matrix;
pub mod povm;
pub mod random;
pub mod state;

pub use channel::Channel;
pub use eig::{eigvalsh, hermitian_eig, HermitianEigen};
pub use matrix::{ComplexMatrix, C64};
pub use povm::{Effect, Povm};
pub use state::{partial_trace, trace_distance, DensityMatrix, PureState};

/// `Σ_k K ρ K†` for a channel and a state; errors on dimension mismatch.
pub fn apply_channel(c: &Channel, rho: &DensityMatrix) -> crate::Result<DensityMatrix> {
    c.apply(rho)
}

/// Kronecker product, big-endian: `a` acts on the high-order qubits.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}
