use std::sync::Arc;

use super::{BlockAlgebra, BlockState, ConditionalExpectation, UnitalInclusion};
use crate::error::{Error, Result};
use crate::linalg::{kron, DensityMatrix, Ensemble, HermitianMatrix};

/// Default ceiling on the total ambient dimension of a tensor power.
pub const DEFAULT_TENSOR_CAP: usize = 4096;

/// `E₁ ⊗ E₂` on `M₁ ⊗ M₂ ⊃ N₁ ⊗ N₂`. Block `(a, b)` of a product algebra has
/// index `a · k₂ + b`.
pub fn tensor_product(
    e1: &ConditionalExpectation,
    e2: &ConditionalExpectation,
    cap: usize,
) -> Result<ConditionalExpectation> {
    let total = e1
        .ambient()
        .total_dim()
        .checked_mul(e2.ambient().total_dim())
        .unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::CapExceeded {
            what: "tensor product ambient dimension",
            required: total,
            cap,
        });
    }
    let prod = |a: &[usize], b: &[usize]| -> Vec<usize> {
        a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
    };
    let i1 = e1.inclusion();
    let i2 = e2.inclusion();
    let k2_sub = i2.sub().num_blocks();
    let group = i1
        .group()
        .iter()
        .flat_map(|&g1| i2.group().iter().map(move |&g2| g1 * k2_sub + g2))
        .collect();
    let inc = UnitalInclusion::new(
        BlockAlgebra::new(prod(i1.sub().dims(), i2.sub().dims()))?,
        BlockAlgebra::new(prod(i1.ambient().dims(), i2.ambient().dims()))?,
        group,
    )?;
    Ok(ConditionalExpectation::new(inc))
}

/// `E^{⊗n}`.
pub fn tensor_power(e: &ConditionalExpectation, n: usize, cap: usize) -> Result<ConditionalExpectation> {
    if n == 0 {
        return Err(Error::InvalidInput("tensor power needs n ≥ 1".into()));
    }
    let mut acc = e.clone();
    for _ in 1..n {
        acc = tensor_product(&acc, e, cap)?;
    }
    Ok(acc)
}

impl BlockState<DensityMatrix> {
    /// Product state on the tensor product of the two block algebras.
    pub fn kron(&self, other: &Self) -> Self {
        let blocks = self
            .blocks()
            .iter()
            .flat_map(|a| {
                other.blocks().iter().map(move |b| {
                    let m = kron(a.as_mat(), b.as_mat());
                    Arc::new(DensityMatrix::from_psd_unchecked(HermitianMatrix::symmetrized(m)))
                })
            })
            .collect();
        BlockState::unchecked(blocks)
    }
}

/// `{p_x q_y, φ_x ⊗ ψ_y}`.
pub fn product_ensemble(
    a: &Ensemble<BlockState<DensityMatrix>>,
    b: &Ensemble<BlockState<DensityMatrix>>,
) -> Result<Ensemble<BlockState<DensityMatrix>>> {
    let mut weights = Vec::with_capacity(a.len() * b.len());
    let mut members = Vec::with_capacity(a.len() * b.len());
    for (p, x) in a.iter() {
        for (q, y) in b.iter() {
            weights.push(p * q);
            members.push(x.kron(y));
        }
    }
    Ensemble::new(weights, members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockalg::{block_average_expectation, pimsner_popa_constant};
    use crate::linalg::random::seeded_rng;

    #[test]
    fn first_power_is_unchanged() {
        let e = block_average_expectation(4, 2).unwrap();
        assert_eq!(tensor_power(&e, 1, DEFAULT_TENSOR_CAP).unwrap(), e);
    }

    #[test]
    fn square_is_a_sixteen_fold_average() {
        let e = block_average_expectation(4, 2).unwrap();
        let sq = tensor_power(&e, 2, DEFAULT_TENSOR_CAP).unwrap();
        assert_eq!(sq.ambient().num_blocks(), 16);
        assert_eq!(sq.sub().dims(), &[4]);
        assert!(sq.verify_bimodule(20, 3).unwrap() < 1e-12);
        let pp = pimsner_popa_constant(&sq, 20, 4).unwrap();
        assert!((pp.index_hat.as_f64() - 16.0).abs() < 1e-8);
    }

    #[test]
    fn apply_of_products_factorizes() {
        let e = block_average_expectation(2, 2).unwrap();
        let sq = tensor_power(&e, 2, DEFAULT_TENSOR_CAP).unwrap();
        let mut rng = seeded_rng(5);
        let x = e.ambient().random_element(&mut rng);
        let y = e.ambient().random_element(&mut rng);
        let xy = super::super::BlockElement::new(
            x.parts()
                .iter()
                .flat_map(|a| y.parts().iter().map(move |b| kron(a, b)))
                .collect(),
        )
        .unwrap();
        let lhs = sq.apply(&xy).unwrap();
        let ex = e.apply(&x).unwrap();
        let ey = e.apply(&y).unwrap();
        let rhs = kron(ex.part(0), ey.part(0));
        assert!((lhs.part(0) - &rhs).norm_l2() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let e = block_average_expectation(4, 40).unwrap();
        assert!(matches!(
            tensor_power(&e, 2, DEFAULT_TENSOR_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }
}
