use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;

use super::{BlockElement, ConditionalExpectation};
use crate::error::Result;
use crate::linalg::random::{random_unit_vector, seeded_rng};
use crate::linalg::{eig_hermitian, CMat, ExtendedReal, HermitianMatrix};

/// Eigenvalues of a probe below this fraction of its largest one are dropped.
pub const PP_SUPPORT_TOL: f64 = 1e-12;

/// Estimate of the best constant in `E(x) ≥ λ x`.
#[derive(Clone, Debug, Serialize)]
pub struct PimsnerPopa {
    pub lambda_hat: f64,
    pub index_hat: ExtendedReal,
    pub samples: usize,
}

/// Largest `λ` with `embed(E(x)) − λ x ≥ 0`, computed per block as the
/// smallest eigenvalue of the pencil `(embed(E(x)), x)` on the support of `x`.
pub fn pimsner_popa_lambda(e: &ConditionalExpectation, x: &BlockElement) -> Result<f64> {
    let ex = e.embed(&e.apply(x)?)?;
    let mut lambda = f64::INFINITY;
    for (xj, ej) in x.parts().iter().zip(ex.parts()) {
        let spec = eig_hermitian(&HermitianMatrix::symmetrized(xj.clone()))?;
        let top = spec.max_abs_eigenvalue();
        if top == 0.0 {
            continue;
        }
        let support: Vec<usize> = (0..spec.dim())
            .filter(|&i| spec.eigenvalues[i] > PP_SUPPORT_TOL * top)
            .collect();
        let n = xj.nrows();
        let r = support.len();
        // W = V D^{-1/2} restricted to the support.
        let w = Mat::from_fn(n, r, |i, k| {
            let col = support[k];
            spec.eigenvectors[(i, col)] / spec.eigenvalues[col].sqrt()
        });
        let pencil = w.adjoint() * ej * &w;
        let reduced = eig_hermitian(&HermitianMatrix::symmetrized(pencil))?;
        lambda = lambda.min(reduced.eigenvalues[0]);
    }
    if lambda.is_infinite() {
        // x = 0 imposes no constraint.
        return Ok(1.0);
    }
    Ok(lambda.max(0.0))
}

/// `⟨v| embed(E(|v⟩⟨v|))_j |v⟩` for a unit vector placed in ambient block `j`.
fn rank_one_lambda(e: &ConditionalExpectation, j: usize, v: &[Complex64]) -> Result<f64> {
    let mut x = e.ambient().zero();
    let n = v.len();
    let outer: CMat = Mat::from_fn(n, n, |a, b| v[a] * v[b].conj());
    let mut parts = x.parts.clone();
    parts[j] = outer;
    x.parts = parts;
    let ex = e.embed(&e.apply(&x)?)?;
    let ej = ex.part(j);
    let mut q = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            q += v[a].conj() * ej[(a, b)] * v[b];
        }
    }
    Ok(q.re)
}

/// Minimum of `λ(x)` over a deterministic family of rank-one probes (every
/// basis vector of every ambient block, plus one random unit vector per
/// block) and `trials` random positive elements `G G†`.
pub fn pimsner_popa_constant(e: &ConditionalExpectation, trials: usize, seed: u64) -> Result<PimsnerPopa> {
    let mut rng = seeded_rng(seed);
    let mut lambda = f64::INFINITY;
    let mut samples = 0usize;
    for (j, &n) in e.ambient().dims().iter().enumerate() {
        for i in 0..n {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[i] = Complex64::new(1.0, 0.0);
            lambda = lambda.min(rank_one_lambda(e, j, &v)?);
            samples += 1;
        }
        let v = random_unit_vector(&mut rng, n);
        lambda = lambda.min(rank_one_lambda(e, j, &v)?);
        samples += 1;
    }
    for _ in 0..trials {
        let x = e.ambient().random_positive(&mut rng);
        lambda = lambda.min(pimsner_popa_lambda(e, &x)?);
        samples += 1;
    }
    let index_hat = if lambda > 0.0 {
        ExtendedReal::Finite(1.0 / lambda)
    } else {
        ExtendedReal::PosInfinity
    };
    Ok(PimsnerPopa {
        lambda_hat: lambda,
        index_hat,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockalg::{block_average_expectation, identity_expectation, BlockAlgebra};

    #[test]
    fn identity_has_index_one() {
        let e = identity_expectation(&BlockAlgebra::new(vec![2, 3]).unwrap());
        let pp = pimsner_popa_constant(&e, 20, 1).unwrap();
        assert!((pp.lambda_hat - 1.0).abs() < 1e-10);
    }

    #[test]
    fn four_blocks_have_index_four() {
        for n in 1..=3 {
            let e = block_average_expectation(4, n).unwrap();
            let pp = pimsner_popa_constant(&e, 50, n as u64).unwrap();
            assert!((pp.index_hat.as_f64() - 4.0).abs() < 1e-9, "{pp:?}");
        }
    }

    #[test]
    fn random_positive_is_at_least_a_quarter() {
        let e = block_average_expectation(4, 3).unwrap();
        let mut rng = seeded_rng(2);
        for _ in 0..30 {
            let x = e.ambient().random_positive(&mut rng);
            assert!(pimsner_popa_lambda(&e, &x).unwrap() >= 0.25 - 1e-10);
        }
    }
}
