use std::collections::HashMap;

use faer::Mat;
use num_complex::Complex64;

use super::geometry::{LatticeRegion, Patch};
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, HermitianMatrix};
use crate::pauli::{CosetMixtureState, PauliString, StabilizerGroup, DENSE_QUBIT_CAP};

/// Default ceiling on region edges for a dense reduced density matrix.
pub const DEFAULT_DENSE_EDGE_CAP: usize = 12;

/// Default ceiling on stored amplitudes in the projector oracle.
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Stabilizer,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Dense => "dense",
            Backend::Stabilizer => "stabilizer",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Backend::Dense),
            "stabilizer" => Ok(Backend::Stabilizer),
            other => Err(Error::Parse(format!("unknown backend {other:?}"))),
        }
    }
}

/// Star operators `Π σ_x` (truncated at the patch boundary) and plaquette
/// operators `Π σ_z` of a patch.
pub fn patch_stabilizers(patch: &Patch) -> (Vec<PauliString>, Vec<PauliString>) {
    let n = patch.num_edges();
    let stars = patch.vertices().map(|v| PauliString::x_on(n, &patch.star(v))).collect();
    let plaquettes = patch
        .plaquettes()
        .map(|p| PauliString::z_on(n, &patch.plaquette(p)))
        .collect();
    (stars, plaquettes)
}

/// Stabilizer group of the patch ground state, every sign `+1`.
pub fn patch_group(patch: &Patch) -> Result<StabilizerGroup> {
    let (stars, plaquettes) = patch_stabilizers(patch);
    StabilizerGroup::new(patch.num_edges(), stars.into_iter().chain(plaquettes).collect())
}

/// `ρ_0` on the region: the patch stabilizers supported inside it.
pub fn stabilizer_rdm(region: &LatticeRegion) -> Result<CosetMixtureState> {
    let group = patch_group(&region.patch)?;
    CosetMixtureState::ground(group).reduce_to(region.patch_qubits())
}

/// Caps for the projector oracle.
#[derive(Clone, Copy, Debug)]
pub struct DenseCaps {
    pub max_region_edges: usize,
    pub max_amplitudes: usize,
}

impl Default for DenseCaps {
    fn default() -> Self {
        Self {
            max_region_edges: DEFAULT_DENSE_EDGE_CAP,
            max_amplitudes: DEFAULT_AMPLITUDE_CAP,
        }
    }
}

/// Ground state of the patch as sparse real amplitudes in the `σ_z` basis,
/// built by applying every `(1 + A_v)/2` and `(1 + B_p)/2` to `|0…0⟩`.
pub fn projector_ground_state(patch: &Patch, max_amplitudes: usize) -> Result<HashMap<u64, f64>> {
    let n = patch.num_edges();
    if n > 64 {
        return Err(Error::CapExceeded {
            what: "patch edges for the projector oracle",
            required: n,
            cap: 64,
        });
    }
    let mask_of = |sites: Vec<usize>| sites.into_iter().fold(0u64, |m, q| m | (1u64 << q));
    let mut psi: HashMap<u64, f64> = HashMap::from([(0u64, 1.0)]);
    for v in patch.vertices() {
        let flip = mask_of(patch.star(v));
        let mut next = HashMap::with_capacity(psi.len() * 2);
        for (&b, &a) in &psi {
            *next.entry(b).or_insert(0.0) += 0.5 * a;
            *next.entry(b ^ flip).or_insert(0.0) += 0.5 * a;
        }
        next.retain(|_, a| *a != 0.0);
        if next.len() > max_amplitudes {
            return Err(Error::CapExceeded {
                what: "amplitudes in the projector oracle",
                required: next.len(),
                cap: max_amplitudes,
            });
        }
        psi = next;
    }
    for p in patch.plaquettes() {
        let zmask = mask_of(patch.plaquette(p));
        psi.retain(|&b, _| (b & zmask).count_ones() % 2 == 0);
    }
    let norm: f64 = psi.values().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Internal("projected reference state vanished".into()));
    }
    for a in psi.values_mut() {
        *a /= norm;
    }
    Ok(psi)
}

/// Reduced density matrix of a sparse real state on the listed qubits.
pub fn partial_trace_sparse(psi: &HashMap<u64, f64>, keep: &[usize]) -> Result<DensityMatrix> {
    let m = keep.len();
    if m > DENSE_QUBIT_CAP {
        return Err(Error::CapExceeded {
            what: "qubits kept in a dense partial trace",
            required: m,
            cap: DENSE_QUBIT_CAP,
        });
    }
    let keep_mask = keep.iter().fold(0u64, |acc, &q| acc | (1u64 << q));
    let mut rows: Vec<(u64, usize, f64)> = psi
        .iter()
        .map(|(&b, &a)| {
            let inner = keep
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &q)| acc | ((((b >> q) & 1) as usize) << k));
            (b & !keep_mask, inner, a)
        })
        .collect();
    rows.sort_unstable_by_key(|r| (r.0, r.1));
    let d = 1usize << m;
    let mut rho = vec![0.0f64; d * d];
    for group in rows.chunk_by(|a, b| a.0 == b.0) {
        for &(_, i, ai) in group {
            for &(_, j, aj) in group {
                rho[i * d + j] += ai * aj;
            }
        }
    }
    let mat = Mat::from_fn(d, d, |i, j| Complex64::new(rho[i * d + j], 0.0));
    Ok(DensityMatrix::from_psd_unchecked(HermitianMatrix::symmetrized(mat)))
}

/// `ρ_0` on the region from the projector oracle.
pub fn dense_rdm(region: &LatticeRegion, caps: DenseCaps) -> Result<DensityMatrix> {
    let m = region.num_edges();
    let cap = caps.max_region_edges.min(DENSE_QUBIT_CAP);
    if m > cap {
        return Err(Error::CapExceeded {
            what: "region edges for a dense density matrix",
            required: m,
            cap,
        });
    }
    let psi = projector_ground_state(&region.patch, caps.max_amplitudes)?;
    partial_trace_sparse(&psi, region.patch_qubits())
}

/// `ρ_0` in either representation.
#[derive(Clone, Debug)]
pub enum RegionState {
    Dense(DensityMatrix),
    Stabilizer(CosetMixtureState),
}

pub fn ground_state_rdm(region: &LatticeRegion, backend: Backend) -> Result<RegionState> {
    match backend {
        Backend::Dense => dense_rdm(region, DenseCaps::default()).map(RegionState::Dense),
        Backend::Stabilizer => stabilizer_rdm(region).map(RegionState::Stabilizer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::QuantumState;
    use crate::toric::geometry::{build_region, Edge, GeometryConfig};

    #[test]
    fn patch_has_a_unique_ground_state() {
        let patch = Patch::new(0, 3, 0, 2).unwrap();
        let g = patch_group(&patch).unwrap();
        assert_eq!(g.rank(), patch.num_edges());
    }

    #[test]
    fn single_edge_is_maximally_mixed() {
        let region =
            LatticeRegion::from_edges(1, [vec![Edge::H(1, 1)], vec![Edge::H(4, 1)]], 1).unwrap();
        let stab = stabilizer_rdm(&region).unwrap();
        assert_eq!(stab.group().rank(), 0);
        let dense = dense_rdm(&region, DenseCaps::default()).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!(dense.frobenius_distance(&mixed).unwrap() < 1e-12);
    }

    #[test]
    fn full_star_gives_order_two_group() {
        let star = vec![Edge::H(0, 1), Edge::H(1, 1), Edge::V(1, 0), Edge::V(1, 1)];
        let region = LatticeRegion::from_edges(1, [star, vec![Edge::H(4, 1)]], 0).unwrap();
        let stab = stabilizer_rdm(&region).unwrap();
        assert_eq!(stab.group().rank(), 1);
        let dense = dense_rdm(&region, DenseCaps::default()).unwrap();
        assert!(stab.to_dense().unwrap().frobenius_distance(&dense).unwrap() < 1e-10);
    }

    #[test]
    fn backends_agree_on_default_n1() {
        let region = build_region(1, &GeometryConfig::default_geometry()).unwrap();
        let stab = stabilizer_rdm(&region).unwrap();
        let dense = dense_rdm(&region, DenseCaps::default()).unwrap();
        assert!((dense.trace() - 1.0).abs() < 1e-12);
        assert!(stab.to_dense().unwrap().frobenius_distance(&dense).unwrap() < 1e-10);
    }

    #[test]
    fn oracle_respects_caps() {
        let region = build_region(3, &GeometryConfig::default_geometry()).unwrap();
        assert!(matches!(
            dense_rdm(&region, DenseCaps::default()),
            Err(Error::CapExceeded { .. })
        ));
    }
}
