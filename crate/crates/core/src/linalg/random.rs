//! Seeded samplers for matrices and states.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CMat, DensityMatrix, HermitianMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    Mat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(ginibre(rng, dim, dim))
}

/// Unit vector drawn uniformly from the complex sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Positive semidefinite `G G†` with `G` of shape `dim × rank`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    let g = ginibre(rng, dim, rank.max(1));
    &g * g.adjoint()
}

/// Unit-trace state of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let m = random_psd(rng, dim, rank);
    let h = HermitianMatrix::symmetrized(m);
    let t = h.trace();
    DensityMatrix::from_psd_unchecked(HermitianMatrix::symmetrized(super::scale(h.as_mat(), 1.0 / t)))
}

/// Uniform sample from the probability simplex.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_is_valid() {
        let mut rng = seeded_rng(1);
        let rho = random_density(&mut rng, 6, 3);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        let spec = rho.spectrum().unwrap();
        assert!(spec.eigenvalues[0] > -1e-12);
        assert!(spec.eigenvalues[2] < 1e-12);
    }

    #[test]
    fn same_seed_same_sample() {
        let a = ginibre(&mut seeded_rng(9), 3, 3);
        let b = ginibre(&mut seeded_rng(9), 3, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn simplex_sums_to_one() {
        let w = random_simplex(&mut seeded_rng(2), 7);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(w.iter().all(|x| *x >= 0.0));
    }
}
