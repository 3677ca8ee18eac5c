use rand::Rng;
use serde::{Deserialize, Serialize};

use super::strings::{TransporterData, SIGN_X, SIGN_Z};
use crate::blockalg::{block_average_expectation, BlockElement, ConditionalExpectation};
use crate::error::{Error, Result};
use crate::linalg::random::{ginibre, seeded_rng};
use crate::linalg::{identity, max_abs_diff, scale, trace, trace_product, CMat, DensityMatrix};
use crate::pauli::PauliString;

/// Largest block size for which the extended algebra is built densely.
pub const DEFAULT_HAT_DENSE_CAP: usize = 10;

/// Tolerance at which the transporter quasi-basis is accepted.
pub const QUASI_BASIS_TOL: f64 = 1e-10;

/// `I, V_X, V_Y, V_Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

    /// Block sign of the transporter image of this letter in block `b`.
    pub fn block_sign(self, b: usize) -> i8 {
        match self {
            Letter::I => 1,
            Letter::X => SIGN_X[b],
            Letter::Y => SIGN_X[b] * SIGN_Z[b],
            Letter::Z => SIGN_Z[b],
        }
    }

    /// `F_k` on the region qubits.
    pub fn string(self, t: &TransporterData) -> PauliString {
        match self {
            Letter::I => PauliString::identity(t.num_qubits()),
            Letter::X => t.f_x.clone(),
            Letter::Y => t.f_y(),
            Letter::Z => t.f_z.clone(),
        }
    }
}

/// `c(i, j, k)` for `i, j = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignTable;

impl SignTable {
    pub fn c(i: i8, j: i8, k: Letter) -> i8 {
        match k {
            Letter::I => 1,
            Letter::X => i,
            Letter::Y => i * j,
            Letter::Z => j,
        }
    }

    /// All sixteen `(i, j, k)` cases.
    pub fn cases() -> impl Iterator<Item = (i8, i8, Letter)> {
        [1i8, -1].into_iter().flat_map(|i| {
            [1i8, -1]
                .into_iter()
                .flat_map(move |j| Letter::ALL.into_iter().map(move |k| (i, j, k)))
        })
    }
}

/// The four-block extension `⊕⁴ M_{2^m} ⊃ M_{2^m}` with `A ↦ diag(A, A, A, A)`
/// and the block-average expectation.
#[derive(Clone, Debug)]
pub struct HatInclusion {
    pub expectation: ConditionalExpectation,
    pub qubits: usize,
}

pub fn build_hat_inclusion(t: &TransporterData) -> Result<HatInclusion> {
    let m = t.num_qubits();
    if m >= usize::BITS as usize - 2 {
        return Err(Error::CapExceeded {
            what: "region qubits for the extended algebra",
            required: m,
            cap: usize::BITS as usize - 3,
        });
    }
    Ok(HatInclusion {
        expectation: block_average_expectation(4, 1usize << m)?,
        qubits: m,
    })
}

fn half_projector(f: &PauliString, sign: i8) -> CMat {
    let d = 1usize << f.num_qubits();
    let fm = f.to_dense();
    let mut out = identity(d);
    out += scale(&fm, sign as f64);
    scale(&out, 0.5)
}

impl HatInclusion {
    pub fn block_dim(&self) -> usize {
        1usize << self.qubits
    }

    fn dense_guard(&self) -> Result<()> {
        if self.qubits > DEFAULT_HAT_DENSE_CAP {
            return Err(Error::CapExceeded {
                what: "region qubits for a dense extended algebra",
                required: self.qubits,
                cap: DEFAULT_HAT_DENSE_CAP,
            });
        }
        Ok(())
    }

    /// `diag(A, A, A, A)`.
    pub fn embed_region(&self, a: &CMat) -> Result<BlockElement> {
        self.expectation.embed(&BlockElement::new(vec![a.clone()])?)
    }

    /// Image of `V_k`: `sign_k(b) · F_k` in block `b`.
    pub fn transporter_image(&self, t: &TransporterData, k: Letter) -> Result<BlockElement> {
        self.dense_guard()?;
        let f = k.string(t).to_dense();
        BlockElement::new((0..4).map(|b| scale(&f, k.block_sign(b) as f64)).collect())
    }

    /// `P_i Q_j = (I + i·V_X)/2 · (I + j·V_Z)/2` in the block representation.
    pub fn sector_projector(&self, t: &TransporterData, i: i8, j: i8) -> Result<BlockElement> {
        self.dense_guard()?;
        BlockElement::new(
            (0..4)
                .map(|b| half_projector(&t.f_x, i * SIGN_X[b]) * half_projector(&t.f_z, j * SIGN_Z[b]))
                .collect(),
        )
    }

    /// `(1/4) diag(ρ₀, ρ₀, ρ₀, ρ₀)`.
    pub fn lifted_state(&self, rho0: &DensityMatrix) -> Result<BlockElement> {
        self.dense_guard()?;
        BlockElement::new(vec![scale(rho0.as_mat(), 0.25); 4])
    }
}

/// Residuals of the projected-expectation identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectedExpectations {
    /// `max |ω₀(P_i Q_j A V_k P_i Q_j) − c(i,j,k)/16 · Σ_l ω₀(V_l A V_l)|`.
    pub max_residual: f64,
    /// `max |ω₀(A V_k)|` over `k ≠ 0`.
    pub cross_term_residual: f64,
    pub cases: usize,
    pub samples: usize,
}

fn sum_blocks(x: &BlockElement) -> CMat {
    let mut acc = x.part(0).clone();
    for p in &x.parts()[1..] {
        acc += p;
    }
    acc
}

fn random_observable<R: Rng + ?Sized>(rng: &mut R, t: &TransporterData, s: usize) -> CMat {
    let d = 1usize << t.num_qubits();
    match s {
        0 => identity(d),
        1 => t.f_x.to_dense(),
        2 => t.f_z.to_dense(),
        3 => t.f_y().to_dense(),
        _ => {
            let g = ginibre(rng, d, d);
            let norm = g.norm_l2();
            scale(&g, 1.0 / norm)
        }
    }
}

/// Checks the projected-expectation identity for `ω₀ = Tr(ρ̂ ·)` with
/// `ρ̂ = (1/4) diag(ρ₀, …)` on `samples` observables of the region algebra
/// (the identity, the three strings, then random matrices), over all sixteen
/// sign cases.
pub fn verify_projected_expectations(
    hat: &HatInclusion,
    rho0: &DensityMatrix,
    t: &TransporterData,
    samples: usize,
    seed: u64,
) -> Result<ProjectedExpectations> {
    hat.dense_guard()?;
    let lifted = hat.lifted_state(rho0)?;
    let images: Vec<BlockElement> = Letter::ALL
        .iter()
        .map(|&k| hat.transporter_image(t, k))
        .collect::<Result<_>>()?;
    // Σ_l V_l ρ̂ V_l summed over blocks, so that Tr(R A) is the bracket.
    let mut bracket = sum_blocks(&images[0].mul(&lifted).mul(&images[0]));
    for v in &images[1..] {
        bracket += sum_blocks(&v.mul(&lifted).mul(v));
    }
    let mut lhs_ops = Vec::with_capacity(16);
    for (i, j, k) in SignTable::cases() {
        let pq = hat.sector_projector(t, i, j)?;
        let vk = &images[Letter::ALL.iter().position(|&l| l == k).unwrap()];
        // Tr(ρ̂ PQ A V PQ) = Tr(V PQ ρ̂ PQ · A) blockwise.
        lhs_ops.push((i, j, k, sum_blocks(&vk.mul(&pq).mul(&lifted).mul(&pq))));
    }
    let cross_ops: Vec<CMat> = images[1..]
        .iter()
        .map(|v| sum_blocks(&v.mul(&lifted)))
        .collect();
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    let mut cross = 0.0f64;
    for s in 0..samples {
        let a = random_observable(&mut rng, t, s);
        let rhs_base = trace_product(&bracket, &a) / 16.0;
        for (i, j, k, op) in &lhs_ops {
            let lhs = trace_product(op, &a);
            let rhs = rhs_base * SignTable::c(*i, *j, *k) as f64;
            worst = worst.max((lhs - rhs).norm());
        }
        for op in &cross_ops {
            cross = cross.max(trace_product(op, &a).norm());
        }
    }
    Ok(ProjectedExpectations {
        max_residual: worst,
        cross_term_residual: cross,
        cases: lhs_ops
            .iter()
            .map(|(i, j, k, _)| (*i, *j, *k))
            .collect::<std::collections::HashSet<_>>()
            .len(),
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuasiBasis {
    /// `u_{jk} = 2 P_j Q_k`.
    Transporter,
    /// `u_b = 2 e_b` with `e_b` the block units.
    BlockUnits,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WatataniCheck {
    pub basis: QuasiBasis,
    /// `max ‖Σ_u u E(u* X) − X‖` over samples, Frobenius.
    pub reconstruction_residual: f64,
    /// `max |Σ u u* − 4 I|` entrywise.
    pub index_residual: f64,
    /// `max |Tr(E(A) B) − Tr(A B)|` for `B` in the subalgebra.
    pub trace_residual: f64,
    pub samples: usize,
}

impl WatataniCheck {
    pub fn residual(&self) -> f64 {
        self.reconstruction_residual.max(self.index_residual)
    }
}

fn check_basis(
    e: &ConditionalExpectation,
    basis: &[BlockElement],
    samples: &[BlockElement],
    index: f64,
) -> Result<(f64, f64)> {
    let ambient = e.ambient();
    let mut sum_uu = ambient.zero();
    for u in basis {
        sum_uu = sum_uu.add(&u.mul(&u.adjoint()));
    }
    let target = ambient.identity().scale(index);
    let index_residual = sum_uu
        .parts()
        .iter()
        .zip(target.parts())
        .map(|(a, b)| max_abs_diff(a, b))
        .fold(0.0, f64::max);
    let mut recon = 0.0f64;
    for x in samples {
        let mut acc = ambient.zero();
        for u in basis {
            acc = acc.add(&u.mul(&e.embed(&e.apply(&u.adjoint().mul(x))?)?));
        }
        recon = recon.max(acc.sub(x).norm());
    }
    Ok((recon, index_residual))
}

/// Quasi-basis identities for the extended algebra. The transporter basis is
/// tried first; if it fails, the block-unit basis is checked instead and
/// reported.
pub fn watatani_index_check(
    hat: &HatInclusion,
    t: &TransporterData,
    samples: usize,
    seed: u64,
) -> Result<WatataniCheck> {
    hat.dense_guard()?;
    let e = &hat.expectation;
    let mut rng = seeded_rng(seed);
    let xs: Vec<BlockElement> = (0..samples)
        .map(|_| {
            let x = e.ambient().random_element(&mut rng);
            let n = x.norm();
            x.scale(1.0 / n)
        })
        .collect();
    let mut trace_residual = 0.0f64;
    for x in &xs {
        let b = e.sub().random_element(&mut rng);
        let eb = e.embed(&b)?;
        let lhs = sum_blocks(&e.embed(&e.apply(x)?)?.mul(&eb));
        let rhs = sum_blocks(&x.mul(&eb));
        trace_residual = trace_residual.max((trace(&lhs) - trace(&rhs)).norm());
    }
    let transporter: Vec<BlockElement> = [(1i8, 1i8), (-1, 1), (1, -1), (-1, -1)]
        .iter()
        .map(|&(i, j)| hat.sector_projector(t, i, j).map(|p| p.scale(2.0)))
        .collect::<Result<_>>()?;
    let (recon, idx) = check_basis(e, &transporter, &xs, 4.0)?;
    if recon <= QUASI_BASIS_TOL && idx <= QUASI_BASIS_TOL {
        return Ok(WatataniCheck {
            basis: QuasiBasis::Transporter,
            reconstruction_residual: recon,
            index_residual: idx,
            trace_residual,
            samples,
        });
    }
    let d = hat.block_dim();
    let units: Vec<BlockElement> = (0..4)
        .map(|b| {
            BlockElement::new(
                (0..4)
                    .map(|c2| if c2 == b { scale(&identity(d), 2.0) } else { CMat::zeros(d, d) })
                    .collect(),
            )
        })
        .collect::<Result<_>>()?;
    let (recon, idx) = check_basis(e, &units, &xs, 4.0)?;
    Ok(WatataniCheck {
        basis: QuasiBasis::BlockUnits,
        reconstruction_residual: recon,
        index_residual: idx,
        trace_residual,
        samples,
    })
}
