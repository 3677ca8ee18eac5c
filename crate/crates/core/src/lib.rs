//! Finite-dimensional operator-algebra numerics: relative entropy and Holevo χ,
//! conditional expectations on block matrix algebras with their Pimsner–Popa
//! index, entropic disturbance, stabilizer states, and a toric-code
//! experiment that realizes the block approximation of the anyon transporter
//! algebra.

pub mod error;
pub mod io;
pub mod blockalg;
pub mod linalg;
pub mod pauli;
pub mod toric;

pub use error::{Error, Result};
