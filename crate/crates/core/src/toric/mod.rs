//! Kitaev toric code on a finite patch of the square lattice: two separated
//! cone regions, the string operators that transport charges and fluxes
//! between them, and the four-block inclusion they generate.
//!
//! The ground-state reduced density matrix is available in two forms. The
//! dense form comes from a sparse projector oracle and is limited to small
//! regions. The stabilizer form is exact at every size.

mod experiment;
mod geometry;
mod ground;
mod hat;
mod strings;

pub use experiment::{
    compare_backends, disturbance_experiment, omega_decomposition, sector_pieces, toric_setup, BackendComparison,
    EntropyComparison, OmegaDecomposition, StructureChecks, ToricBackend, ToricConfig, ToricReport, ToricSetup,
    INDEX_BLOCK_CAP, ORTHOGONALITY_FAILURE, QUANTUM_DIMENSION_SQ, SECTORS, STRUCTURE_TOL,
};
pub use geometry::{
    build_region, ConeConfig, Direction, Edge, GeometryConfig, LatticeRegion, Opening, Patch, PathConfig, Shape,
    Vertex, DEFAULT_GEOMETRY, GEOMETRY_VERSION, MIN_SEPARATION,
};
pub use ground::{
    dense_rdm, ground_state_rdm, partial_trace_sparse, patch_group, patch_stabilizers, projector_ground_state,
    stabilizer_rdm, Backend, DenseCaps, RegionState, DEFAULT_AMPLITUDE_CAP, DEFAULT_DENSE_EDGE_CAP,
};
pub use hat::{
    build_hat_inclusion, verify_projected_expectations, watatani_index_check, HatInclusion, Letter,
    ProjectedExpectations, QuasiBasis, SignTable, WatataniCheck, DEFAULT_HAT_DENSE_CAP, QUASI_BASIS_TOL,
};
pub use strings::{build_strings, TransporterData, SIGN_X, SIGN_Z};
