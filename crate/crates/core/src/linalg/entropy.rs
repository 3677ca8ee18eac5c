use super::{block_spectra, DensityMatrix, ExtendedReal, SpectralDecomposition, SUPPORT_TOL};
use crate::error::{Error, Result};

/// States that support the entropy functionals used by the ensemble code.
///
/// Implemented by dense [`DensityMatrix`] values, by block-diagonal states and
/// by the symbolic stabilizer forms, so χ and the disturbance can be written
/// once.
pub trait QuantumState: Clone {
    fn trace(&self) -> f64;

    /// `S(self, other)` in nats.
    fn relative_entropy(&self, other: &Self) -> Result<ExtendedReal>;

    /// `Σ w_i m_i`.
    fn mixture(weights: &[f64], members: &[&Self]) -> Result<Self>;

    fn frobenius_distance(&self, other: &Self) -> Result<f64>;
}

impl QuantumState for DensityMatrix {
    fn trace(&self) -> f64 {
        DensityMatrix::trace(self)
    }

    fn relative_entropy(&self, other: &Self) -> Result<ExtendedReal> {
        relative_entropy(self, other)
    }

    fn mixture(weights: &[f64], members: &[&Self]) -> Result<Self> {
        DensityMatrix::weighted_sum(weights, members)
    }

    fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok((self.as_mat() - other.as_mat()).norm_l2())
    }
}

/// `−Tr ρ log ρ`, with eigenvalues below the support tolerance dropped.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let spec = rho.spectrum()?;
    let cut = SUPPORT_TOL * spec.max_abs_eigenvalue();
    Ok(-spec
        .eigenvalues
        .iter()
        .filter(|&&l| l > cut)
        .map(|&l| l * l.ln())
        .sum::<f64>())
}

/// `S(ρ, σ) = Tr ρ log ρ − Tr ρ log σ` with the default support tolerance.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    relative_entropy_with_tol(rho, sigma, SUPPORT_TOL)
}

/// Relative entropy evaluated on the joint eigenbasis overlap.
///
/// Eigenvalues at or below `tol` times the largest one are treated as exact
/// zeros. The weight of `ρ` that falls outside the support of `σ` is
/// `Tr((I − P_σ) ρ)`; if it exceeds `dim · tol` the result is `+∞`.
/// Sub-states are accepted, so finite values may be negative.
pub fn relative_entropy_with_tol(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: f64,
) -> Result<ExtendedReal> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidInput(format!("support tolerance {tol} outside (0, 1)")));
    }
    // Blocks shared by both patterns are independent; cross-block overlaps vanish.
    let comps = super::pattern_components(&[rho.as_mat(), sigma.as_mat()]);
    let owned: Vec<(SpectralDecomposition, SpectralDecomposition)>;
    let pieces: Vec<(&SpectralDecomposition, &SpectralDecomposition)> = if comps.len() <= 1 {
        vec![(rho.spectrum()?, sigma.spectrum()?)]
    } else {
        owned = block_spectra(rho.as_mat(), &comps)?
            .into_iter()
            .zip(block_spectra(sigma.as_mat(), &comps)?)
            .collect();
        owned.iter().map(|(r, s)| (r, s)).collect()
    };
    let top = |spectra: Vec<&SpectralDecomposition>| {
        spectra
            .iter()
            .filter_map(|s| s.eigenvalues.last().copied())
            .fold(0.0f64, f64::max)
    };
    let top_r = top(pieces.iter().map(|p| p.0).collect());
    if top_r <= 0.0 {
        return Ok(ExtendedReal::Finite(0.0));
    }
    let top_s = top(pieces.iter().map(|p| p.1).collect());
    if top_s <= 0.0 {
        return Ok(ExtendedReal::PosInfinity);
    }
    let cut_r = tol * top_r;
    let cut_s = tol * top_s;

    let mut self_term = 0.0;
    let mut cross = 0.0;
    let mut leak = 0.0;
    for (sr, ss) in pieces {
        let active: Vec<usize> = (0..sr.dim()).filter(|&i| sr.eigenvalues[i] > cut_r).collect();
        if active.is_empty() {
            continue;
        }
        let log_s: Vec<Option<f64>> = ss
            .eigenvalues
            .iter()
            .map(|&m| (m > cut_s).then(|| m.ln()))
            .collect();
        // Overlaps |⟨u_i|v_j⟩|² only for the active rows of ρ.
        let overlap = sr.eigenvectors.adjoint() * &ss.eigenvectors;
        for &i in &active {
            let lam = sr.eigenvalues[i];
            self_term += lam * lam.ln();
            let mut row_cross = 0.0;
            let mut row_leak = 0.0;
            for (j, ls) in log_s.iter().enumerate() {
                let q = overlap[(i, j)].norm_sqr();
                match ls {
                    Some(l) => row_cross += q * l,
                    None => row_leak += q,
                }
            }
            cross += lam * row_cross;
            leak += lam * row_leak;
        }
    }
    if leak > rho.dim() as f64 * tol {
        return Ok(ExtendedReal::PosInfinity);
    }
    ExtendedReal::finite(self_term - cross)
}

/// Weights `p_x ≥ 0` summing to one, paired with member states.
#[derive(Clone, Debug)]
pub struct Ensemble<S> {
    weights: Vec<f64>,
    members: Vec<S>,
}

impl<S: QuantumState> Ensemble<S> {
    pub fn new(weights: Vec<f64>, members: Vec<S>) -> Result<Self> {
        if weights.is_empty() || weights.len() != members.len() {
            return Err(Error::InvalidInput(format!(
                "ensemble needs matching non-empty weights and members ({} vs {})",
                weights.len(),
                members.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidInput(format!("negative ensemble weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { weights, members })
    }

    /// Equal weights.
    pub fn uniform(members: Vec<S>) -> Result<Self> {
        let k = members.len();
        Self::new(vec![1.0 / k as f64; k], members)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> &[S] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> {
        self.weights.iter().copied().zip(self.members.iter())
    }

    pub fn barycenter(&self) -> Result<S> {
        let refs: Vec<&S> = self.members.iter().collect();
        S::mixture(&self.weights, &refs)
    }

    /// Applies `f` to every member, keeping the weights.
    pub fn map<T: QuantumState, F: FnMut(&S) -> Result<T>>(&self, mut f: F) -> Result<Ensemble<T>> {
        let members = self.members.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Ensemble {
            weights: self.weights.clone(),
            members,
        })
    }
}

/// `χ = Σ p_x S(φ_x, φ)` against the ensemble's own barycenter.
pub fn holevo_chi<S: QuantumState>(ens: &Ensemble<S>) -> Result<f64> {
    let bary = ens.barycenter()?;
    holevo_chi_against(ens, &bary)
}

/// χ with a precomputed barycenter.
pub fn holevo_chi_against<S: QuantumState>(ens: &Ensemble<S>, bary: &S) -> Result<f64> {
    let mut chi = 0.0;
    for (member, (p, state)) in ens.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        match state.relative_entropy(bary)? {
            ExtendedReal::Finite(s) => chi += p * s,
            ExtendedReal::PosInfinity => return Err(Error::SupportEscape { member }),
        }
    }
    if chi < -1e-10 {
        return Err(Error::Internal(format!("negative Holevo quantity {chi:e}")));
    }
    Ok(chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, seeded_rng};
    use std::f64::consts::LN_2;

    fn diag(d: &[f64]) -> DensityMatrix {
        DensityMatrix::from_diagonal(d).unwrap()
    }

    #[test]
    fn self_entropy_is_zero() {
        let mut rng = seeded_rng(3);
        let rho = random_density(&mut rng, 5, 5);
        let s = relative_entropy(&rho, &rho).unwrap().value().unwrap();
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn pure_against_mixed_qubit() {
        let s = relative_entropy(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])).unwrap();
        assert!((s.value().unwrap() - LN_2).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_supports_are_infinite() {
        let s = relative_entropy(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap();
        assert_eq!(s, ExtendedReal::PosInfinity);
    }

    #[test]
    fn member_against_quarter_of_itself() {
        let rho = diag(&[0.5, 0.5, 0.0, 0.0]);
        let quarter = rho.scaled(0.25).unwrap();
        let s = relative_entropy(&rho, &quarter).unwrap().value().unwrap();
        assert!((s - 2.0 * LN_2).abs() < 1e-13);
    }

    #[test]
    fn sub_state_can_be_negative() {
        let s = relative_entropy(&diag(&[0.25, 0.0]), &diag(&[0.5, 0.5])).unwrap();
        assert!((s.value().unwrap() - 0.25 * (0.5f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn zero_state_has_zero_entropy() {
        let s = relative_entropy(&DensityMatrix::zero(2), &diag(&[0.0, 1.0])).unwrap();
        assert_eq!(s, ExtendedReal::Finite(0.0));
    }

    #[test]
    fn chi_examples() {
        let single = Ensemble::new(vec![1.0], vec![diag(&[0.3, 0.7])]).unwrap();
        assert!(holevo_chi(&single).unwrap().abs() < 1e-12);

        let pair = Ensemble::uniform(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        assert!((holevo_chi(&pair).unwrap() - LN_2).abs() < 1e-13);

        let four = (0..4)
            .map(|k| {
                let mut d = [0.0; 4];
                d[k] = 1.0;
                diag(&d)
            })
            .collect();
        let four = Ensemble::uniform(four).unwrap();
        assert!((holevo_chi(&four).unwrap() - 2.0 * LN_2).abs() < 1e-13);
    }

    #[test]
    fn ensemble_validation() {
        assert!(Ensemble::new(vec![0.5], vec![diag(&[1.0])]).is_err());
        assert!(Ensemble::new(vec![1.5, -0.5], vec![diag(&[1.0]), diag(&[1.0])]).is_err());
        assert!(Ensemble::<DensityMatrix>::new(vec![], vec![]).is_err());
    }
}
