//! Pauli strings on many qubits, signed stabilizer groups, and the states
//! `w · 2^{-m} Σ_{s ∈ S} s` that they define.

mod group;
mod state;
mod string;

pub use group::StabilizerGroup;
pub use state::{CosetMixtureState, DENSE_QUBIT_CAP};
pub use string::{i_pow, PauliString};
