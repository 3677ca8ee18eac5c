use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::{build_region, GeometryConfig, LatticeRegion};
use super::ground::{dense_rdm, stabilizer_rdm, Backend, DenseCaps, DEFAULT_AMPLITUDE_CAP};
use super::hat::{build_hat_inclusion, verify_projected_expectations, watatani_index_check, HatInclusion};
use super::strings::{build_strings, TransporterData, SIGN_X, SIGN_Z};
use crate::blockalg::{
    block_average_expectation, entropic_disturbance, invariant_state_check, pimsner_popa_constant, BlockPiece,
    BlockState, INVARIANCE_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    support_projection, DensityMatrix, Ensemble, ExtendedReal, HermitianMatrix, QuantumState, SUPPORT_TOL,
};
use crate::pauli::{CosetMixtureState, PauliString};

/// Number of superselection sectors weighted by squared dimension.
pub const QUANTUM_DIMENSION_SQ: u32 = 4;

/// Sign pairs `(s_X, s_Z)` of the four compressions, in block order.
pub const SECTORS: [(i8, i8); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];

/// Support overlaps above this are treated as a routing failure.
pub const ORTHOGONALITY_FAILURE: f64 = 1e-8;

/// Tolerance for the reported structural flags.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Largest block dimension used for the index estimate.
pub const INDEX_BLOCK_CAP: usize = 16;

fn sector_index(s: (i8, i8)) -> usize {
    usize::from(s.0 < 0) + 2 * usize::from(s.1 < 0)
}

/// Operations the decomposition needs from a state representation.
pub trait ToricBackend: BlockPiece {
    const BACKEND: Backend;

    /// `(I + sF)/2 · ρ · (I + sF)/2`.
    fn compress(&self, f: &PauliString, sign: i8) -> Result<Self>;

    /// `‖P_ρ P_σ‖_F` for the support projections.
    fn support_overlap(&self, other: &Self) -> Result<f64>;

    fn rescaled(&self, s: f64) -> Result<Self>;

    fn dense(&self) -> Result<DensityMatrix>;
}

impl ToricBackend for DensityMatrix {
    const BACKEND: Backend = Backend::Dense;

    fn compress(&self, f: &PauliString, sign: i8) -> Result<Self> {
        let rho = self.as_mat();
        let s = sign as f64;
        let f_rho = f.left_mul_dense(rho);
        let rho_f = f.right_mul_dense(rho);
        let f_rho_f = f.right_mul_dense(&f_rho);
        let out = faer::Mat::from_fn(rho.nrows(), rho.ncols(), |i, j| {
            (rho[(i, j)] + (f_rho[(i, j)] + rho_f[(i, j)]) * s + f_rho_f[(i, j)]) * 0.25
        });
        Ok(DensityMatrix::from_psd_unchecked(HermitianMatrix::symmetrized(out)))
    }

    fn support_overlap(&self, other: &Self) -> Result<f64> {
        let p = support_projection(self, SUPPORT_TOL)?;
        let q = support_projection(other, SUPPORT_TOL)?;
        Ok((p.as_mat() * q.as_mat()).norm_l2())
    }

    fn rescaled(&self, s: f64) -> Result<Self> {
        self.scaled(s)
    }

    fn dense(&self) -> Result<DensityMatrix> {
        Ok(self.clone())
    }
}

impl ToricBackend for CosetMixtureState {
    const BACKEND: Backend = Backend::Stabilizer;

    fn compress(&self, f: &PauliString, sign: i8) -> Result<Self> {
        let h = if sign < 0 { f.negated() } else { f.clone() };
        self.project(&h)
    }

    fn support_overlap(&self, other: &Self) -> Result<f64> {
        CosetMixtureState::support_overlap(self, other)
    }

    fn rescaled(&self, s: f64) -> Result<Self> {
        self.scaled(s)
    }

    fn dense(&self) -> Result<DensityMatrix> {
        self.to_dense()
    }
}

/// `Π_s ρ₀ Π_s` for the four sign pairs, in block order.
pub fn sector_pieces<B: ToricBackend>(rho0: &B, t: &TransporterData) -> Result<[Arc<B>; 4]> {
    let pieces = SECTORS
        .iter()
        .map(|&(sx, sz)| Ok(Arc::new(rho0.compress(&t.f_x, sx)?.compress(&t.f_z, sz)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(pieces.try_into().unwrap_or_else(|_| unreachable!()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureChecks {
    /// Largest `‖P_x P_y‖_F` between distinct members.
    pub max_support_overlap: f64,
    /// Largest `|Tr ρ_x − 1|`.
    pub max_trace_error: f64,
    /// Largest distance between two restrictions to the region algebra.
    pub restriction_spread: f64,
    pub barycenter_invariant: bool,
    /// Every block of the barycenter equals `ρ₀/4`.
    pub barycenter_matches_rho0: bool,
    /// Largest `‖barycenter_b − ρ₀/4‖_F`.
    pub barycenter_distance: f64,
    /// Invariance flag of each member.
    pub members_invariant: [bool; 4],
}

pub struct OmegaDecomposition<B> {
    pub pieces: [Arc<B>; 4],
    pub ensemble: Ensemble<BlockState<B>>,
    pub checks: StructureChecks,
}

/// The four states `ρ_{jk}` with weights `1/4`. Block `b` of `ρ_{jk}` is
/// `Π_s ρ₀ Π_s` with `s = (j·s_X(b), k·s_Z(b))`.
pub fn omega_decomposition<B: ToricBackend>(
    rho0: &B,
    t: &TransporterData,
    hat: &HatInclusion,
) -> Result<OmegaDecomposition<B>> {
    let pieces = sector_pieces(rho0, t)?;
    let members = SECTORS
        .iter()
        .map(|&(j, k)| {
            let blocks = (0..4)
                .map(|b| pieces[sector_index((j * SIGN_X[b], k * SIGN_Z[b]))].clone())
                .collect();
            BlockState::from_shared(blocks)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pair = [[0.0f64; 4]; 4];
    for a in 0..4 {
        for b in a + 1..4 {
            let ov = pieces[a].support_overlap(&pieces[b])?;
            pair[a][b] = ov;
            pair[b][a] = ov;
        }
    }
    let mut max_overlap = 0.0f64;
    for x in 0..4 {
        for y in x + 1..4 {
            let sq: f64 = (0..4).map(|b| pair[b ^ x][b ^ y].powi(2)).sum();
            max_overlap = max_overlap.max(sq.sqrt());
        }
    }
    if max_overlap > ORTHOGONALITY_FAILURE {
        return Err(Error::Internal(format!(
            "member supports overlap ({max_overlap:.3e}); the string routing does not separate sectors"
        )));
    }
    let max_trace_error = members
        .iter()
        .map(|m| (m.trace() - 1.0).abs())
        .fold(0.0, f64::max);
    let e = &hat.expectation;
    let restrictions = members
        .iter()
        .map(|m| e.restrict_state(m))
        .collect::<Result<Vec<_>>>()?;
    let mut spread = 0.0f64;
    for a in 0..4 {
        for b in a + 1..4 {
            spread = spread.max(restrictions[a].frobenius_distance(&restrictions[b])?);
        }
    }
    let members_invariant = members
        .iter()
        .map(|m| invariant_state_check(m, e, INVARIANCE_TOL))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = Ensemble::uniform(members)?;
    let bary = ensemble.barycenter()?;
    let quarter = rho0.rescaled(0.25)?;
    let barycenter_distance = bary
        .blocks()
        .iter()
        .map(|blk| blk.frobenius_distance(&quarter))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(OmegaDecomposition {
        pieces,
        checks: StructureChecks {
            max_support_overlap: max_overlap,
            max_trace_error,
            restriction_spread: spread,
            barycenter_invariant: invariant_state_check(&bary, e, INVARIANCE_TOL)?,
            barycenter_matches_rho0: barycenter_distance <= STRUCTURE_TOL,
            barycenter_distance,
            members_invariant: members_invariant.try_into().unwrap_or_else(|_| unreachable!()),
        },
        ensemble,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToricConfig {
    pub geometry: GeometryConfig,
    /// Largest region for the dense backend.
    pub dense_edge_cap: usize,
    /// Random positive probes for the index estimate.
    pub index_trials: usize,
    /// Observables for the projected-expectation and quasi-basis checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ToricConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default_geometry(),
            dense_edge_cap: super::hat::DEFAULT_HAT_DENSE_CAP,
            index_trials: 200,
            samples: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ToricReport {
    pub n: usize,
    pub backend: Backend,
    pub edges: usize,
    pub subregion_edges: [usize; 2],
    pub patch_edges: usize,
    pub separation: u32,
    pub chi_ambient: f64,
    pub chi_sub: f64,
    pub disturbance: f64,
    /// `ln D²`.
    pub expected: f64,
    pub quantum_dimension_sq: u32,
    /// `Σ p_x S(ρ_x, ρ_x ∘ E)`.
    pub chain_form: ExtendedReal,
    pub support_orthogonal: bool,
    pub max_support_overlap: f64,
    pub max_trace_error: f64,
    pub restriction_spread: f64,
    pub barycenter_invariant: bool,
    pub barycenter_matches_rho0: bool,
    pub members_invariant: bool,
    pub index_hat: ExtendedReal,
    pub index_samples: usize,
    /// Block size of the inclusion the index was estimated on.
    pub index_block_dim: usize,
    pub watatani_residual: Option<f64>,
    pub projected_residual: Option<f64>,
    pub degenerate_strings: bool,
}

impl ToricReport {
    pub fn passes(&self, tol: f64) -> bool {
        (self.disturbance - self.expected).abs() <= tol
    }
}

/// Everything about `Λ_n` that does not depend on the backend.
pub struct ToricSetup {
    pub region: LatticeRegion,
    pub strings: TransporterData,
    pub hat: HatInclusion,
}

pub fn toric_setup(n: usize, geometry: &GeometryConfig) -> Result<ToricSetup> {
    let region = build_region(n, geometry)?;
    let strings = build_strings(&region, geometry)?;
    let hat = build_hat_inclusion(&strings)?;
    Ok(ToricSetup { region, strings, hat })
}

fn run<B: ToricBackend>(setup: &ToricSetup, rho0: &B, cfg: &ToricConfig) -> Result<ToricReport> {
    let ToricSetup { region, strings, hat } = setup;
    let dec = omega_decomposition(rho0, strings, hat)?;
    let dist = entropic_disturbance(&dec.ensemble, &hat.expectation)?;
    let index_block_dim = hat.block_dim().min(INDEX_BLOCK_CAP);
    let pp = pimsner_popa_constant(
        &block_average_expectation(4, index_block_dim)?,
        cfg.index_trials,
        cfg.seed,
    )?;
    let (watatani, projected) = if hat.qubits <= cfg.dense_edge_cap.min(super::hat::DEFAULT_HAT_DENSE_CAP) {
        let rho_dense = rho0.dense()?;
        let pe = verify_projected_expectations(hat, &rho_dense, strings, cfg.samples, cfg.seed)?;
        let w = watatani_index_check(hat, strings, cfg.samples, cfg.seed)?;
        (Some(w.residual()), Some(pe.max_residual.max(pe.cross_term_residual)))
    } else {
        (None, None)
    };
    let c = &dec.checks;
    Ok(ToricReport {
        n: region.n,
        backend: B::BACKEND,
        edges: region.num_edges(),
        subregion_edges: [region.subregions[0].len(), region.subregions[1].len()],
        patch_edges: region.patch.num_edges(),
        separation: region.separation,
        chi_ambient: dist.chi_ambient,
        chi_sub: dist.chi_sub,
        disturbance: dist.disturbance,
        expected: (QUANTUM_DIMENSION_SQ as f64).ln(),
        quantum_dimension_sq: QUANTUM_DIMENSION_SQ,
        chain_form: dist.chain_form,
        support_orthogonal: c.max_support_overlap <= STRUCTURE_TOL,
        max_support_overlap: c.max_support_overlap,
        max_trace_error: c.max_trace_error,
        restriction_spread: c.restriction_spread,
        barycenter_invariant: c.barycenter_invariant,
        barycenter_matches_rho0: c.barycenter_matches_rho0,
        members_invariant: c.members_invariant.iter().any(|&v| v),
        index_hat: pp.index_hat,
        index_samples: pp.samples,
        index_block_dim,
        watatani_residual: watatani,
        projected_residual: projected,
        degenerate_strings: strings.is_degenerate(),
    })
}

/// The disturbance experiment on `Λ_n` with the chosen backend.
pub fn disturbance_experiment(n: usize, backend: Backend, cfg: &ToricConfig) -> Result<ToricReport> {
    let setup = toric_setup(n, &cfg.geometry)?;
    match backend {
        Backend::Dense => {
            let caps = DenseCaps {
                max_region_edges: cfg.dense_edge_cap,
                max_amplitudes: DEFAULT_AMPLITUDE_CAP,
            };
            let rho0 = dense_rdm(&setup.region, caps)?;
            run(&setup, &rho0, cfg)
        }
        Backend::Stabilizer => {
            let rho0 = stabilizer_rdm(&setup.region)?;
            run(&setup, &rho0, cfg)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyComparison {
    pub label: String,
    pub dense: ExtendedReal,
    pub stabilizer: ExtendedReal,
}

impl EntropyComparison {
    pub fn residual(&self) -> f64 {
        match (self.dense, self.stabilizer) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs(),
            (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendComparison {
    pub edges: usize,
    /// `‖ρ₀^dense − ρ₀^stab‖_F`.
    pub rho0_distance: f64,
    /// `‖Π_s ρ₀ Π_s‖` differences in block order.
    pub piece_distances: [f64; 4],
    pub entropies: Vec<EntropyComparison>,
    /// `χ` on the extended algebra from each backend.
    pub chi_ambient: [f64; 2],
    pub chi_sub: [f64; 2],
}

impl BackendComparison {
    pub fn max_residual(&self) -> f64 {
        let mut worst = self.rho0_distance;
        for d in self.piece_distances {
            worst = worst.max(d);
        }
        for e in &self.entropies {
            worst = worst.max(e.residual());
        }
        worst
            .max((self.chi_ambient[0] - self.chi_ambient[1]).abs())
            .max((self.chi_sub[0] - self.chi_sub[1]).abs())
    }
}

/// Dense and stabilizer results on one region, built one piece at a time so
/// that regions of up to `caps.max_region_edges` edges fit in memory.
///
/// `χ` on the extended algebra is assembled blockwise from
/// `S(Π_s ρ₀ Π_s, pinch(ρ₀)/4)`, and `χ` on the region algebra from
/// `S(pinch(ρ₀), pinch(ρ₀))`, since every member restricts to `pinch(ρ₀)`.
pub fn compare_backends(region: &LatticeRegion, t: &TransporterData, caps: DenseCaps) -> Result<BackendComparison> {
    let rho_d = dense_rdm(region, caps)?;
    let rho_s = stabilizer_rdm(region)?;
    let rho0_distance = rho_s.to_dense()?.frobenius_distance(&rho_d)?;

    let dense_piece = |s: (i8, i8)| -> Result<DensityMatrix> { rho_d.compress(&t.f_x, s.0)?.compress(&t.f_z, s.1) };
    let stab_pieces = sector_pieces(&rho_s, t)?;
    let mut piece_distances = [0.0; 4];
    let mut pinch: Option<DensityMatrix> = None;
    for (k, &s) in SECTORS.iter().enumerate() {
        let pd = dense_piece(s)?;
        piece_distances[k] = stab_pieces[k].to_dense()?.frobenius_distance(&pd)?;
        pinch = Some(match pinch {
            None => pd,
            Some(acc) => DensityMatrix::weighted_sum(&[1.0, 1.0], &[&acc, &pd])?,
        });
    }
    let pinch_d = pinch.expect("four sectors");
    let pinch_s = CosetMixtureState::mixture(&[1.0; 4], &stab_pieces.iter().map(|p| p.as_ref()).collect::<Vec<_>>())?;
    let quarter_rho_d = rho_d.scaled(0.25)?;
    let quarter_rho_s = rho_s.scaled(0.25)?;
    let quarter_pinch_d = pinch_d.scaled(0.25)?;
    let quarter_pinch_s = pinch_s.scaled(0.25)?;

    let mut entropies = Vec::new();
    let mut push = |label: String, d: ExtendedReal, s: ExtendedReal| {
        entropies.push(EntropyComparison {
            label,
            dense: d,
            stabilizer: s,
        })
    };
    push(
        "S(pinch/4, rho0/4)".into(),
        quarter_pinch_d.relative_entropy(&quarter_rho_d)?,
        quarter_pinch_s.relative_entropy(&quarter_rho_s)?,
    );
    let chi_sub_d = pinch_d.relative_entropy(&pinch_d)?;
    let chi_sub_s = pinch_s.relative_entropy(&pinch_s)?;
    push("S(pinch, pinch)".into(), chi_sub_d, chi_sub_s);
    let mut chi_d = 0.0;
    let mut chi_s = 0.0;
    for (k, &s) in SECTORS.iter().enumerate() {
        let pd = dense_piece(s)?;
        let ps = stab_pieces[k].as_ref();
        let tag = format!("({:+},{:+})", s.0, s.1);
        push(
            format!("S(piece{tag}, rho0/4)"),
            pd.relative_entropy(&quarter_rho_d)?,
            ps.relative_entropy(&quarter_rho_s)?,
        );
        let to_bary_d = pd.relative_entropy(&quarter_pinch_d)?;
        let to_bary_s = ps.relative_entropy(&quarter_pinch_s)?;
        chi_d += to_bary_d.as_f64();
        chi_s += to_bary_s.as_f64();
        push(format!("S(piece{tag}, pinch/4)"), to_bary_d, to_bary_s);
    }
    Ok(BackendComparison {
        edges: region.num_edges(),
        rho0_distance,
        piece_distances,
        entropies,
        chi_ambient: [chi_d, chi_s],
        chi_sub: [chi_sub_d.as_f64(), chi_sub_s.as_f64()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN4: f64 = 1.386_294_361_119_890_6;

    #[test]
    fn dense_n1_reaches_ln4() {
        let r = disturbance_experiment(1, Backend::Dense, &ToricConfig::default()).unwrap();
        assert!((r.disturbance - LN4).abs() < 1e-9, "{r:?}");
        assert!(r.chi_sub.abs() < 1e-9);
        assert!(r.support_orthogonal && r.barycenter_invariant && !r.members_invariant);
        assert!(r.barycenter_matches_rho0);
        assert!((r.index_hat.as_f64() - 4.0).abs() < 1e-6);
        assert!(r.watatani_residual.unwrap() < 1e-10);
        assert!(r.projected_residual.unwrap() < 1e-10);
    }

    #[test]
    fn stabilizer_matches_dense_at_n1() {
        let cfg = ToricConfig::default();
        let d = disturbance_experiment(1, Backend::Dense, &cfg).unwrap();
        let s = disturbance_experiment(1, Backend::Stabilizer, &cfg).unwrap();
        assert!((d.chi_ambient - s.chi_ambient).abs() < 1e-10);
        assert!((d.chi_sub - s.chi_sub).abs() < 1e-10);
    }

    #[test]
    fn stabilizer_is_constant_in_n() {
        let cfg = ToricConfig::default();
        for n in 1..=3 {
            let r = disturbance_experiment(n, Backend::Stabilizer, &cfg).unwrap();
            assert!((r.disturbance - LN4).abs() < 1e-9, "n = {n}: {r:?}");
            assert!(r.chi_sub.abs() < 1e-9);
            assert!(r.barycenter_matches_rho0 && r.barycenter_invariant);
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        assert!(matches!(
            disturbance_experiment(2, Backend::Dense, &ToricConfig::default()),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn comparison_at_n1() {
        let setup = toric_setup(1, &GeometryConfig::default_geometry()).unwrap();
        let cmp = compare_backends(&setup.region, &setup.strings, DenseCaps::default()).unwrap();
        assert!(cmp.max_residual() < 1e-10, "{cmp:?}");
        assert!((cmp.chi_ambient[1] - LN4).abs() < 1e-12);
    }
}
