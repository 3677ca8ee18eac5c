//! Direct sums of full matrix blocks, diagonal unital inclusions between them,
//! and the block-averaging conditional expectations.
//!
//! An inclusion is described by a map from ambient blocks to sub blocks: the
//! sub block `g` is copied diagonally into every ambient block `j` with
//! `group[j] == g`. The conditional expectation averages the ambient blocks of
//! each group. States are kept per block, so the same code serves dense
//! matrices and the symbolic stabilizer forms.

mod disturbance;
mod index;
mod tensor;

use std::sync::Arc;

use faer::Mat;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::random::{ginibre, seeded_rng};
use crate::linalg::{
    c, frobenius, identity, scale, CMat, DensityMatrix, ExtendedReal, HermitianMatrix, QuantumState,
};

pub use disturbance::{
    chain_rule_residual, entropic_disturbance, invariant_state_check, maximize_disturbance,
    quantum_privacy, random_invariant_ensemble, DisturbanceReport, MaximizeConfig,
    MaximizeOutcome, INVARIANCE_TOL,
};
pub use index::{pimsner_popa_constant, pimsner_popa_lambda, PimsnerPopa, PP_SUPPORT_TOL};
pub use tensor::{product_ensemble, tensor_power, tensor_product, DEFAULT_TENSOR_CAP};

/// `⊕_j M_{n_j}(ℂ)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockAlgebra {
    dims: Vec<usize>,
}

impl BlockAlgebra {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidInput("block algebra needs at least one block".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidInput("block dimensions must be positive".into()));
        }
        Ok(Self { dims })
    }

    pub fn uniform(k: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; k])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    /// Dimension of the Hilbert space the algebra acts on.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn identity(&self) -> BlockElement {
        BlockElement {
            parts: self.dims.iter().map(|&n| identity(n)).collect(),
        }
    }

    pub fn zero(&self) -> BlockElement {
        BlockElement {
            parts: self.dims.iter().map(|&n| Mat::zeros(n, n)).collect(),
        }
    }

    /// Element with i.i.d. complex Gaussian entries in every block.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockElement {
        BlockElement {
            parts: self.dims.iter().map(|&n| ginibre(rng, n, n)).collect(),
        }
    }

    /// `G G†` per block.
    pub fn random_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockElement {
        let g = self.random_element(rng);
        g.mul(&g.adjoint())
    }

    fn check(&self, x: &BlockElement) -> Result<()> {
        if x.parts.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found: x.parts.len(),
            });
        }
        for (p, &n) in x.parts.iter().zip(&self.dims) {
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.nrows(),
                });
            }
        }
        Ok(())
    }
}

/// An element of a block algebra, one square matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockElement {
    parts: Vec<CMat>,
}

impl BlockElement {
    pub fn new(parts: Vec<CMat>) -> Result<Self> {
        for p in &parts {
            if p.nrows() != p.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: p.nrows(),
                    found: p.ncols(),
                });
            }
        }
        if parts.is_empty() {
            return Err(Error::InvalidInput("element needs at least one block".into()));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[CMat] {
        &self.parts
    }

    pub fn part(&self, j: usize) -> &CMat {
        &self.parts[j]
    }

    pub fn into_parts(self) -> Vec<CMat> {
        self.parts
    }

    pub fn dims(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.nrows()).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            parts: self.parts.iter().zip(&other.parts).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            parts: self.parts.iter().zip(&other.parts).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            parts: self.parts.iter().zip(&other.parts).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            parts: self.parts.iter().map(|a| scale(a, s)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            parts: self.parts.iter().map(|a| a.adjoint().to_owned()).collect(),
        }
    }

    /// Frobenius norm of the block-diagonal matrix.
    pub fn norm(&self) -> f64 {
        self.parts.iter().map(|p| frobenius(p).powi(2)).sum::<f64>().sqrt()
    }

    /// Largest singular value over all blocks.
    pub fn operator_norm(&self) -> Result<f64> {
        let mut best = 0.0f64;
        for p in &self.parts {
            let gram = HermitianMatrix::symmetrized(p.adjoint() * p);
            let spec = crate::linalg::eig_hermitian(&gram)?;
            best = best.max(spec.max_abs_eigenvalue().sqrt());
        }
        Ok(best)
    }

    /// The block-diagonal matrix on `⊕ ℂ^{n_j}`.
    pub fn to_dense(&self) -> CMat {
        let total: usize = self.parts.iter().map(|p| p.nrows()).sum();
        let mut out = Mat::zeros(total, total);
        let mut off = 0;
        for p in &self.parts {
            let n = p.nrows();
            out.as_mut().submatrix_mut(off, off, n, n).copy_from(p);
            off += n;
        }
        out
    }
}

/// Pieces a [`BlockState`] can be made of.
pub trait BlockPiece: QuantumState + Send + Sync {
    /// The zero functional with the same shape.
    fn zero_like(&self) -> Self;
}

impl BlockPiece for DensityMatrix {
    fn zero_like(&self) -> Self {
        DensityMatrix::zero(self.dim())
    }
}

/// A state on a block algebra stored as one sub-state per block.
///
/// Blocks are reference counted so ensembles whose members share blocks (the
/// decompositions produced by the toric experiment) share the storage and the
/// cached spectra.
#[derive(Clone, Debug)]
pub struct BlockState<B> {
    blocks: Vec<Arc<B>>,
}

impl<B: BlockPiece> BlockState<B> {
    /// Checks that the block traces add up to one.
    pub fn new(blocks: Vec<B>) -> Result<Self> {
        Self::from_shared(blocks.into_iter().map(Arc::new).collect())
    }

    pub fn from_shared(blocks: Vec<Arc<B>>) -> Result<Self> {
        let state = Self::unchecked(blocks);
        let t = state.trace();
        if (t - 1.0).abs() > 1e-10 {
            return Err(Error::BadTrace {
                trace: t,
                kind: "block state",
            });
        }
        Ok(state)
    }

    pub(crate) fn unchecked(blocks: Vec<Arc<B>>) -> Self {
        assert!(!blocks.is_empty());
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Arc<B>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &B {
        &self.blocks[j]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Trace carried by each block.
    pub fn block_weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace()).collect()
    }
}

impl BlockState<DensityMatrix> {
    /// `ρ` in block `j` and zero elsewhere.
    pub fn concentrated(algebra: &BlockAlgebra, j: usize, rho: DensityMatrix) -> Result<Self> {
        if rho.dim() != algebra.dims[j] {
            return Err(Error::DimensionMismatch {
                expected: algebra.dims[j],
                found: rho.dim(),
            });
        }
        let blocks = algebra
            .dims
            .iter()
            .enumerate()
            .map(|(i, &n)| if i == j { rho.clone() } else { DensityMatrix::zero(n) })
            .collect();
        Self::new(blocks)
    }

    pub fn algebra(&self) -> BlockAlgebra {
        BlockAlgebra {
            dims: self.blocks.iter().map(|b| b.dim()).collect(),
        }
    }

    /// The block-diagonal density on the full Hilbert space.
    pub fn to_dense(&self) -> DensityMatrix {
        let parts = self.blocks.iter().map(|b| b.as_mat().clone()).collect();
        let el = BlockElement { parts };
        DensityMatrix::from_psd_unchecked(HermitianMatrix::symmetrized(el.to_dense()))
    }

    /// Splits a block-diagonal density according to `algebra`. Off-block
    /// entries must vanish.
    pub fn from_dense(algebra: &BlockAlgebra, rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != algebra.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: algebra.total_dim(),
                found: rho.dim(),
            });
        }
        let m = rho.as_mat();
        let mut offsets = Vec::with_capacity(algebra.dims.len());
        let mut off = 0;
        for &n in &algebra.dims {
            offsets.push((off, n));
            off += n;
        }
        let mut stray = 0.0f64;
        for &(oi, ni) in &offsets {
            for &(oj, nj) in &offsets {
                if oi == oj {
                    continue;
                }
                for i in oi..oi + ni {
                    for j in oj..oj + nj {
                        stray = stray.max(m[(i, j)].norm());
                    }
                }
            }
        }
        if stray > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "state has off-block entries of size {stray:e}"
            )));
        }
        let blocks = offsets
            .iter()
            .map(|&(o, n)| {
                let b = m.submatrix(o, o, n, n).to_owned();
                DensityMatrix::from_psd_unchecked(HermitianMatrix::symmetrized(b))
            })
            .collect::<Vec<_>>();
        Self::new(blocks)
    }

    /// `Tr(ρ X)` for a block element.
    pub fn expectation(&self, x: &BlockElement) -> num_complex::Complex64 {
        self.blocks
            .iter()
            .zip(x.parts())
            .map(|(b, p)| b.expectation(p))
            .sum()
    }
}

impl<B: BlockPiece> QuantumState for BlockState<B> {
    fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// Sum of the blockwise relative entropies.
    fn relative_entropy(&self, other: &Self) -> Result<ExtendedReal> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                found: other.blocks.len(),
            });
        }
        let mut total = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            match a.relative_entropy(b)? {
                ExtendedReal::Finite(v) => total += v,
                ExtendedReal::PosInfinity => return Ok(ExtendedReal::PosInfinity),
            }
        }
        ExtendedReal::finite(total)
    }

    fn mixture(weights: &[f64], members: &[&Self]) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidInput("empty mixture".into()));
        };
        let k = first.blocks.len();
        if members.iter().any(|m| m.blocks.len() != k) {
            return Err(Error::InvalidInput("mixture members have different block counts".into()));
        }
        let mut blocks = Vec::with_capacity(k);
        for j in 0..k {
            let pieces: Vec<&B> = members.iter().map(|m| m.blocks[j].as_ref()).collect();
            // A single shared block with unit weight is reused as is.
            if weights.len() == 1 && weights[0] == 1.0 {
                blocks.push(members[0].blocks[j].clone());
            } else {
                blocks.push(Arc::new(B::mixture(weights, &pieces)?));
            }
        }
        Ok(Self::unchecked(blocks))
    }

    fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        let mut acc = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            acc += a.frobenius_distance(b)?.powi(2);
        }
        Ok(acc.sqrt())
    }
}

/// A unital diagonal inclusion `N ↪ M`: sub block `group[j]` is copied into
/// ambient block `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitalInclusion {
    sub: BlockAlgebra,
    ambient: BlockAlgebra,
    group: Vec<usize>,
}

impl UnitalInclusion {
    pub fn new(sub: BlockAlgebra, ambient: BlockAlgebra, group: Vec<usize>) -> Result<Self> {
        if group.len() != ambient.num_blocks() {
            return Err(Error::DimensionMismatch {
                expected: ambient.num_blocks(),
                found: group.len(),
            });
        }
        let mut hit = vec![false; sub.num_blocks()];
        for (j, &g) in group.iter().enumerate() {
            if g >= sub.num_blocks() {
                return Err(Error::InvalidInput(format!("ambient block {j} maps to missing sub block {g}")));
            }
            if ambient.dims[j] != sub.dims[g] {
                return Err(Error::DimensionMismatch {
                    expected: sub.dims[g],
                    found: ambient.dims[j],
                });
            }
            hit[g] = true;
        }
        if let Some(g) = hit.iter().position(|h| !h) {
            return Err(Error::InvalidInput(format!(
                "sub block {g} is not embedded, so the inclusion is not unital"
            )));
        }
        Ok(Self { sub, ambient, group })
    }

    pub fn sub(&self) -> &BlockAlgebra {
        &self.sub
    }

    pub fn ambient(&self) -> &BlockAlgebra {
        &self.ambient
    }

    pub fn group(&self) -> &[usize] {
        &self.group
    }

    /// Ambient blocks lying over each sub block.
    pub fn members_of(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        self.group.iter().enumerate().filter(move |(_, &h)| h == g).map(|(j, _)| j)
    }

    pub fn multiplicity(&self, g: usize) -> usize {
        self.members_of(g).count()
    }

    pub fn embed(&self, a: &BlockElement) -> Result<BlockElement> {
        self.sub.check(a)?;
        Ok(BlockElement {
            parts: self.group.iter().map(|&g| a.parts[g].clone()).collect(),
        })
    }
}

/// The block-averaging conditional expectation of a diagonal inclusion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionalExpectation {
    inclusion: UnitalInclusion,
}

impl ConditionalExpectation {
    pub fn new(inclusion: UnitalInclusion) -> Self {
        Self { inclusion }
    }

    pub fn inclusion(&self) -> &UnitalInclusion {
        &self.inclusion
    }

    pub fn sub(&self) -> &BlockAlgebra {
        &self.inclusion.sub
    }

    pub fn ambient(&self) -> &BlockAlgebra {
        &self.inclusion.ambient
    }

    pub fn embed(&self, a: &BlockElement) -> Result<BlockElement> {
        self.inclusion.embed(a)
    }

    /// `E(⊕ X_j)_g = (1/k_g) Σ_{group[j]=g} X_j`.
    pub fn apply(&self, x: &BlockElement) -> Result<BlockElement> {
        self.inclusion.ambient.check(x)?;
        let parts = (0..self.inclusion.sub.num_blocks())
            .map(|g| {
                let n = self.inclusion.sub.dims[g];
                let mut acc: CMat = Mat::zeros(n, n);
                let mut k = 0usize;
                for j in self.inclusion.members_of(g) {
                    acc = &acc + &x.parts[j];
                    k += 1;
                }
                scale(&acc, 1.0 / k as f64)
            })
            .collect();
        Ok(BlockElement { parts })
    }

    /// Closed-form Pimsner–Popa index of a block average: the largest group size.
    pub fn index(&self) -> f64 {
        (0..self.inclusion.sub.num_blocks())
            .map(|g| self.inclusion.multiplicity(g))
            .max()
            .unwrap_or(1) as f64
    }

    fn check_state<B: BlockPiece>(&self, phi: &BlockState<B>) -> Result<()> {
        if phi.num_blocks() != self.inclusion.ambient.num_blocks() {
            return Err(Error::DimensionMismatch {
                expected: self.inclusion.ambient.num_blocks(),
                found: phi.num_blocks(),
            });
        }
        Ok(())
    }

    /// Density of `φ ∘ embed` on the subalgebra: the blocks of each group summed.
    pub fn restrict_state<B: BlockPiece>(&self, phi: &BlockState<B>) -> Result<BlockState<B>> {
        self.check_state(phi)?;
        let blocks = (0..self.inclusion.sub.num_blocks())
            .map(|g| {
                let idx: Vec<usize> = self.inclusion.members_of(g).collect();
                if idx.len() == 1 {
                    return Ok(phi.blocks[idx[0]].clone());
                }
                let pieces: Vec<&B> = idx.iter().map(|&j| phi.blocks[j].as_ref()).collect();
                Ok(Arc::new(B::mixture(&vec![1.0; idx.len()], &pieces)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockState::unchecked(blocks))
    }

    /// Density of `φ ∘ E` on the ambient algebra: each block replaced by the
    /// average of its group.
    pub fn dual<B: BlockPiece>(&self, phi: &BlockState<B>) -> Result<BlockState<B>> {
        self.check_state(phi)?;
        let averages = (0..self.inclusion.sub.num_blocks())
            .map(|g| {
                let idx: Vec<usize> = self.inclusion.members_of(g).collect();
                if idx.len() == 1 {
                    return Ok(phi.blocks[idx[0]].clone());
                }
                let k = idx.len() as f64;
                let pieces: Vec<&B> = idx.iter().map(|&j| phi.blocks[j].as_ref()).collect();
                Ok(Arc::new(B::mixture(&vec![1.0 / k; idx.len()], &pieces)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let blocks = self.inclusion.group.iter().map(|&g| averages[g].clone()).collect();
        Ok(BlockState::unchecked(blocks))
    }

    /// Largest Frobenius residual of `E(a·B·c) − A·E(B)·C` over seeded samples
    /// with `a = embed(A)`, `c = embed(C)`.
    pub fn verify_bimodule(&self, trials: usize, seed: u64) -> Result<f64> {
        let mut rng = seeded_rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..trials.max(1) {
            let a = self.sub().random_element(&mut rng);
            let cc = self.sub().random_element(&mut rng);
            let b = self.ambient().random_element(&mut rng);
            let lhs = self.apply(&self.embed(&a)?.mul(&b).mul(&self.embed(&cc)?))?;
            let rhs = a.mul(&self.apply(&b)?).mul(&cc);
            worst = worst.max(lhs.sub(&rhs).norm());
        }
        Ok(worst)
    }
}

/// `M_n ↪ ⊕^k M_n`, `A ↦ diag(A, …, A)`, with `E` the block average.
pub fn block_average_expectation(k: usize, n: usize) -> Result<ConditionalExpectation> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidInput(format!("block average needs k, n ≥ 1 (got {k}, {n})")));
    }
    let inc = UnitalInclusion::new(BlockAlgebra::uniform(1, n)?, BlockAlgebra::uniform(k, n)?, vec![0; k])?;
    Ok(ConditionalExpectation::new(inc))
}

/// `⊕_g M_n ↪ ⊕^k M_n` where ambient block `j` carries a copy of sub block
/// `groups[j]`, with `E` averaging inside each group. Group labels must be
/// `0..g` with none skipped.
pub fn partition_expectation(groups: &[usize], n: usize) -> Result<ConditionalExpectation> {
    if groups.is_empty() || n == 0 {
        return Err(Error::InvalidInput("partition needs at least one block of positive size".into()));
    }
    let g = groups.iter().max().map_or(0, |m| m + 1);
    let inc = UnitalInclusion::new(
        BlockAlgebra::uniform(g, n)?,
        BlockAlgebra::uniform(groups.len(), n)?,
        groups.to_vec(),
    )?;
    Ok(ConditionalExpectation::new(inc))
}

/// `E = id` on the given algebra.
pub fn identity_expectation(algebra: &BlockAlgebra) -> ConditionalExpectation {
    let group = (0..algebra.num_blocks()).collect();
    ConditionalExpectation::new(UnitalInclusion {
        sub: algebra.clone(),
        ambient: algebra.clone(),
        group,
    })
}

/// Diagonal matrix helper for block elements.
pub fn diagonal_part(values: &[f64]) -> CMat {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { c(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_density;

    #[test]
    fn k1_is_identity_map() {
        let e = block_average_expectation(1, 3).unwrap();
        let mut rng = seeded_rng(4);
        let x = e.ambient().random_element(&mut rng);
        let y = e.apply(&x).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn fixes_the_subalgebra() {
        let e = block_average_expectation(4, 3).unwrap();
        let mut rng = seeded_rng(5);
        let a = e.sub().random_element(&mut rng);
        let back = e.apply(&e.embed(&a).unwrap()).unwrap();
        assert!(back.sub(&a).norm() < 1e-14);
    }

    #[test]
    fn kills_signed_copies() {
        let e = block_average_expectation(4, 2).unwrap();
        let mut rng = seeded_rng(6);
        let a = e.sub().random_element(&mut rng).into_parts().remove(0);
        let minus = scale(&a, -1.0);
        let x = BlockElement::new(vec![a.clone(), minus.clone(), a, minus]).unwrap();
        assert!(e.apply(&x).unwrap().norm() < 1e-15);
    }

    #[test]
    fn bimodule_residuals() {
        let id = identity_expectation(&BlockAlgebra::new(vec![2, 3]).unwrap());
        assert_eq!(id.verify_bimodule(10, 1).unwrap(), 0.0);
        let e = block_average_expectation(4, 2).unwrap();
        assert!(e.verify_bimodule(100, 2).unwrap() <= 1e-12);
    }

    #[test]
    fn restriction_examples() {
        let e = block_average_expectation(4, 3).unwrap();
        let mut rng = seeded_rng(7);
        let rho = random_density(&mut rng, 3, 3);
        let quarter = rho.scaled(0.25).unwrap();
        let phi = BlockState::new(vec![quarter.clone(), quarter.clone(), quarter.clone(), quarter]).unwrap();
        let r = e.restrict_state(&phi).unwrap();
        assert!(r.block(0).frobenius_distance(&rho).unwrap() < 1e-14);

        let single = BlockState::concentrated(e.ambient(), 2, rho.clone()).unwrap();
        let r = e.restrict_state(&single).unwrap();
        assert!(r.block(0).frobenius_distance(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn restriction_reproduces_expectations() {
        let e = block_average_expectation(4, 2).unwrap();
        let mut rng = seeded_rng(8);
        let blocks: Vec<DensityMatrix> = (0..4)
            .map(|_| random_density(&mut rng, 2, 2).scaled(0.25).unwrap())
            .collect();
        let phi = BlockState::new(blocks).unwrap();
        let r = e.restrict_state(&phi).unwrap();
        for _ in 0..50 {
            let a = e.sub().random_element(&mut rng);
            let lhs = r.expectation(&a);
            let rhs = phi.expectation(&e.embed(&a).unwrap());
            assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    #[test]
    fn dual_is_trace_adjoint() {
        let e = block_average_expectation(3, 2).unwrap();
        let mut rng = seeded_rng(10);
        let blocks: Vec<DensityMatrix> = [0.2, 0.5, 0.3]
            .iter()
            .map(|w| random_density(&mut rng, 2, 2).scaled(*w).unwrap())
            .collect();
        let phi = BlockState::new(blocks).unwrap();
        let d = e.dual(&phi).unwrap();
        for _ in 0..20 {
            let x = e.ambient().random_element(&mut rng);
            let lhs = d.expectation(&x);
            let rhs = phi.expectation(&e.embed(&e.apply(&x).unwrap()).unwrap());
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn inclusion_validation() {
        let sub = BlockAlgebra::new(vec![2, 3]).unwrap();
        let amb = BlockAlgebra::new(vec![2, 2]).unwrap();
        assert!(UnitalInclusion::new(sub.clone(), amb, vec![0, 0]).is_err());
        let amb = BlockAlgebra::new(vec![2, 3, 3]).unwrap();
        assert!(UnitalInclusion::new(sub.clone(), amb.clone(), vec![0, 1, 1]).is_ok());
        assert!(UnitalInclusion::new(sub, amb, vec![0, 0, 1]).is_err());
        assert!(block_average_expectation(0, 2).is_err());
    }

    #[test]
    fn dense_round_trip() {
        let alg = BlockAlgebra::new(vec![1, 2]).unwrap();
        let mut rng = seeded_rng(11);
        let phi = BlockState::new(vec![
            DensityMatrix::from_diagonal(&[0.4]).unwrap(),
            random_density(&mut rng, 2, 2).scaled(0.6).unwrap(),
        ])
        .unwrap();
        let dense = phi.to_dense();
        let back = BlockState::from_dense(&alg, &dense).unwrap();
        assert!(back.frobenius_distance(&phi).unwrap() < 1e-15);
    }
}
