use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::{BlockPiece, BlockState, ConditionalExpectation};
use crate::error::{Error, Result};
use crate::linalg::random::{random_density, random_simplex, seeded_rng};
use crate::linalg::{holevo_chi_against, DensityMatrix, Ensemble, ExtendedReal, QuantumState};

/// Frobenius tolerance for `φ ∘ E = φ`.
pub const INVARIANCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct DisturbanceReport {
    pub chi_ambient: f64,
    pub chi_sub: f64,
    pub disturbance: f64,
    /// `Σ p_x S(φ_x, φ_x ∘ E)`.
    pub chain_form: ExtendedReal,
    /// Whether the barycenter is `E`-invariant.
    pub invariant_flag: bool,
    /// `log` of the index.
    pub bound: f64,
}

/// χ on the ambient algebra minus χ after restriction to the subalgebra.
pub fn entropic_disturbance<B: BlockPiece>(
    ens: &Ensemble<BlockState<B>>,
    e: &ConditionalExpectation,
) -> Result<DisturbanceReport> {
    let bary = ens.barycenter()?;
    let chi_ambient = holevo_chi_against(ens, &bary)?;
    let restricted = ens.map(|m| e.restrict_state(m))?;
    let chi_sub = holevo_chi_against(&restricted, &e.restrict_state(&bary)?)?;
    let mut chain = 0.0;
    let mut chain_finite = true;
    for (p, m) in ens.iter() {
        if p == 0.0 {
            continue;
        }
        match m.relative_entropy(&e.dual(m)?)? {
            ExtendedReal::Finite(v) => chain += p * v,
            ExtendedReal::PosInfinity => chain_finite = false,
        }
    }
    let chain_form = if chain_finite {
        ExtendedReal::finite(chain)?
    } else {
        ExtendedReal::PosInfinity
    };
    Ok(DisturbanceReport {
        chi_ambient,
        chi_sub,
        disturbance: chi_ambient - chi_sub,
        chain_form,
        invariant_flag: invariant_state_check(&bary, e, INVARIANCE_TOL)?,
        bound: e.index().ln(),
    })
}

/// True iff the blocks of `φ` agree within each group, which for a block
/// average is the same as `φ ∘ E = φ`.
pub fn invariant_state_check<B: BlockPiece>(
    phi: &BlockState<B>,
    e: &ConditionalExpectation,
    tol: f64,
) -> Result<bool> {
    if phi.num_blocks() != e.ambient().num_blocks() {
        return Err(Error::DimensionMismatch {
            expected: e.ambient().num_blocks(),
            found: phi.num_blocks(),
        });
    }
    for g in 0..e.sub().num_blocks() {
        let mut members = e.inclusion().members_of(g);
        let Some(first) = members.next() else { continue };
        for j in members {
            if phi.block(first).frobenius_distance(phi.block(j))? > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `|S(ω, φ) − S(ω|N, φ|N) − S(ω, ω ∘ E)|` for invariant `φ`. `None` when one
/// of the three terms is infinite.
pub fn chain_rule_residual<B: BlockPiece>(
    omega: &BlockState<B>,
    phi: &BlockState<B>,
    e: &ConditionalExpectation,
) -> Result<Option<f64>> {
    if !invariant_state_check(phi, e, INVARIANCE_TOL)? {
        return Err(Error::InvalidInput("reference state is not E-invariant".into()));
    }
    let full = omega.relative_entropy(phi)?;
    let sub = e.restrict_state(omega)?.relative_entropy(&e.restrict_state(phi)?)?;
    let ce = omega.relative_entropy(&e.dual(omega)?)?;
    match (full, sub, ce) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b), ExtendedReal::Finite(c)) => {
            Ok(Some((a - b - c).abs()))
        }
        _ => Ok(None),
    }
}

/// χ seen by Bob minus χ seen by Eve. Eve's algebra must sit inside Bob's,
/// i.e. her block partition must be coarser.
pub fn quantum_privacy<B: BlockPiece>(
    ens: &Ensemble<BlockState<B>>,
    bob: &ConditionalExpectation,
    eve: &ConditionalExpectation,
) -> Result<f64> {
    if bob.ambient() != eve.ambient() {
        return Err(Error::InvalidInput("Bob and Eve see different ambient algebras".into()));
    }
    let (gb, ge) = (bob.inclusion().group(), eve.inclusion().group());
    for i in 0..gb.len() {
        for j in 0..gb.len() {
            if gb[i] == gb[j] && ge[i] != ge[j] {
                return Err(Error::InvalidInput(format!(
                    "Eve's algebra is not contained in Bob's (ambient blocks {i} and {j})"
                )));
            }
        }
    }
    let bary = ens.barycenter()?;
    let chi = |e: &ConditionalExpectation| -> Result<f64> {
        let restricted = ens.map(|m| e.restrict_state(m))?;
        holevo_chi_against(&restricted, &e.restrict_state(&bary)?)
    };
    Ok(chi(bob)? - chi(eve)?)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Ambient block reached from `j` by moving `t` places cyclically inside its group.
fn shifted(e: &ConditionalExpectation, j: usize, t: usize) -> usize {
    let g = e.inclusion().group()[j];
    let members: Vec<usize> = e.inclusion().members_of(g).collect();
    let pos = members.iter().position(|&m| m == j).expect("block belongs to its group");
    members[(pos + t) % members.len()]
}

/// Averages every base state over all cyclic shifts inside the groups, which
/// makes the barycenter invariant.
fn symmetrize(
    e: &ConditionalExpectation,
    bases: &[(f64, BlockState<DensityMatrix>)],
) -> Result<Ensemble<BlockState<DensityMatrix>>> {
    let period = (0..e.sub().num_blocks())
        .map(|g| e.inclusion().multiplicity(g))
        .fold(1, |acc, k| acc / gcd(acc, k) * k);
    let nb = e.ambient().num_blocks();
    let mut weights = Vec::with_capacity(bases.len() * period);
    let mut members = Vec::with_capacity(bases.len() * period);
    for (p, base) in bases {
        for t in 0..period {
            let blocks: Vec<Arc<DensityMatrix>> =
                (0..nb).map(|j| base.blocks()[shifted(e, j, t)].clone()).collect();
            weights.push(p / period as f64);
            members.push(BlockState::unchecked(blocks));
        }
    }
    Ensemble::new(weights, members)
}

fn random_base<R: Rng + ?Sized>(
    e: &ConditionalExpectation,
    rng: &mut R,
    masses: &[f64],
) -> Result<BlockState<DensityMatrix>> {
    let blocks = e
        .ambient()
        .dims()
        .iter()
        .zip(masses)
        .map(|(&n, &m)| {
            let rank = rng.random_range(1..=n);
            random_density(rng, n, rank).scaled(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockState::unchecked(blocks.into_iter().map(Arc::new).collect()))
}

fn random_masses<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut m = random_simplex(rng, k);
    // Occasionally concentrate on fewer blocks to reach the boundary.
    if rng.random_bool(0.3) {
        let keep = rng.random_range(0..k);
        for (i, x) in m.iter_mut().enumerate() {
            if i != keep && rng.random_bool(0.5) {
                *x = 0.0;
            }
        }
        let total: f64 = m.iter().sum();
        m.iter_mut().for_each(|x| *x /= total);
    }
    m
}

/// A random ensemble with `E`-invariant barycenter: `bases` random block
/// states, each averaged over the cyclic shifts inside the groups.
pub fn random_invariant_ensemble<R: Rng + ?Sized>(
    e: &ConditionalExpectation,
    rng: &mut R,
    bases: usize,
) -> Result<Ensemble<BlockState<DensityMatrix>>> {
    let weights = random_simplex(rng, bases.max(1));
    let k = e.ambient().num_blocks();
    let states = weights
        .into_iter()
        .map(|p| {
            let masses = random_masses(rng, k);
            Ok((p, random_base(e, rng, &masses)?))
        })
        .collect::<Result<Vec<_>>>()?;
    symmetrize(e, &states)
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximizeConfig {
    pub seed: u64,
    pub restarts: usize,
    pub steps: usize,
    pub bases: usize,
}

impl Default for MaximizeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            steps: 40,
            bases: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MaximizeOutcome {
    pub best: f64,
    pub ensemble: Ensemble<BlockState<DensityMatrix>>,
    pub seed: u64,
    /// The random search spent its budget without reaching `log index` by itself.
    pub budget_exhausted: bool,
    pub evaluations: usize,
}

/// Searches invariant ensembles for the largest entropic disturbance.
///
/// The deterministic candidate puts the maximally mixed state of the largest
/// group into each of its blocks with equal weights. It is followed by a
/// seeded hill climb over the block masses of random shift-symmetrized
/// ensembles.
pub fn maximize_disturbance(e: &ConditionalExpectation, config: &MaximizeConfig) -> Result<MaximizeOutcome> {
    let target = e.index().ln() - 1e-6;
    let g_star = (0..e.sub().num_blocks())
        .max_by_key(|&g| e.inclusion().multiplicity(g))
        .unwrap_or(0);
    let blocks: Vec<usize> = e.inclusion().members_of(g_star).collect();
    let n = e.sub().dims()[g_star];
    let members = blocks
        .iter()
        .map(|&j| BlockState::concentrated(e.ambient(), j, DensityMatrix::maximally_mixed(n)))
        .collect::<Result<Vec<_>>>()?;
    let mut best_ens = Ensemble::uniform(members)?;
    let mut best = entropic_disturbance(&best_ens, e)?.disturbance;
    let mut evaluations = 1;

    let mut rng = seeded_rng(config.seed);
    let k = e.ambient().num_blocks();
    let mut search_best = f64::NEG_INFINITY;
    'restarts: for _ in 0..config.restarts {
        let weights = random_simplex(&mut rng, config.bases.max(1));
        let mut masses: Vec<Vec<f64>> = weights.iter().map(|_| random_masses(&mut rng, k)).collect();
        let mut bases = weights
            .iter()
            .zip(&masses)
            .map(|(&p, m)| Ok((p, random_base(e, &mut rng, m)?)))
            .collect::<Result<Vec<_>>>()?;
        let ens = symmetrize(e, &bases)?;
        let mut current = entropic_disturbance(&ens, e)?.disturbance;
        evaluations += 1;
        let mut current_ens = ens;
        for step in 0..config.steps {
            let width = 0.5 / (1.0 + step as f64 / 10.0);
            let trial_masses: Vec<Vec<f64>> = masses
                .iter()
                .map(|m| {
                    let noise = random_simplex(&mut rng, k);
                    m.iter().zip(&noise).map(|(a, b)| (1.0 - width) * a + width * b).collect()
                })
                .collect();
            let trial_bases = bases
                .iter()
                .zip(&trial_masses)
                .map(|((p, base), m)| {
                    let blocks = base
                        .blocks()
                        .iter()
                        .zip(m)
                        .map(|(b, &mass)| {
                            let t = b.trace();
                            let scaled = if t > 0.0 {
                                b.scaled(mass / t)?
                            } else {
                                random_density(&mut rng, b.dim(), 1).scaled(mass)?
                            };
                            Ok(Arc::new(scaled))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((*p, BlockState::unchecked(blocks)))
                })
                .collect::<Result<Vec<_>>>()?;
            let trial = symmetrize(e, &trial_bases)?;
            let value = entropic_disturbance(&trial, e)?.disturbance;
            evaluations += 1;
            if value > current {
                current = value;
                current_ens = trial;
                masses = trial_masses;
                bases = trial_bases;
            }
        }
        search_best = search_best.max(current);
        if current > best {
            best = current;
            best_ens = current_ens;
        }
        if search_best >= target {
            break 'restarts;
        }
    }
    Ok(MaximizeOutcome {
        best,
        ensemble: best_ens,
        seed: config.seed,
        budget_exhausted: search_best < target,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockalg::{block_average_expectation, identity_expectation, BlockAlgebra};
    use std::f64::consts::LN_2;

    #[test]
    fn singleton_has_no_disturbance() {
        let e = block_average_expectation(4, 2).unwrap();
        let mut rng = seeded_rng(1);
        let phi = random_invariant_ensemble(&e, &mut rng, 1).unwrap().barycenter().unwrap();
        let ens = Ensemble::new(vec![1.0], vec![phi]).unwrap();
        let r = entropic_disturbance(&ens, &e).unwrap();
        assert!(r.disturbance.abs() < 1e-10);
        assert!(r.invariant_flag);
    }

    #[test]
    fn random_invariant_ensembles_respect_the_bound() {
        let e = block_average_expectation(4, 2).unwrap();
        let mut rng = seeded_rng(2);
        for _ in 0..50 {
            let ens = random_invariant_ensemble(&e, &mut rng, 3).unwrap();
            let r = entropic_disturbance(&ens, &e).unwrap();
            assert!(r.invariant_flag);
            assert!(r.disturbance <= 4f64.ln() + 1e-8);
            assert!((r.chain_form.as_f64() - r.disturbance).abs() < 1e-8);
        }
    }

    #[test]
    fn invariance_examples() {
        let e = block_average_expectation(4, 2).unwrap();
        let rho = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let q = rho.scaled(0.25).unwrap();
        let inv = BlockState::new(vec![q.clone(), q.clone(), q.clone(), q]).unwrap();
        assert!(invariant_state_check(&inv, &e, INVARIANCE_TOL).unwrap());
        let dual = e.dual(&inv).unwrap();
        assert!(dual.frobenius_distance(&inv).unwrap() < 1e-15);

        let single = BlockState::concentrated(e.ambient(), 0, rho).unwrap();
        assert!(!invariant_state_check(&single, &e, INVARIANCE_TOL).unwrap());
        assert!(e.dual(&single).unwrap().frobenius_distance(&single).unwrap() > 1e-3);
    }

    #[test]
    fn chain_rule_trivial_cases() {
        let e = block_average_expectation(4, 2).unwrap();
        let mut rng = seeded_rng(3);
        let phi = random_invariant_ensemble(&e, &mut rng, 1).unwrap().barycenter().unwrap();
        assert!(chain_rule_residual(&phi, &phi, &e).unwrap().unwrap() < 1e-12);
        let single = BlockState::concentrated(e.ambient(), 0, DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(chain_rule_residual(&phi, &single, &e).is_err());
    }

    #[test]
    fn maximizer_hits_the_index() {
        let id = identity_expectation(&BlockAlgebra::new(vec![2]).unwrap());
        let out = maximize_disturbance(&id, &MaximizeConfig::default()).unwrap();
        assert!(out.best.abs() < 1e-10);

        let e = block_average_expectation(4, 2).unwrap();
        let out = maximize_disturbance(&e, &MaximizeConfig::default()).unwrap();
        assert!((out.best - 2.0 * LN_2).abs() < 1e-9);
        assert!(out.best <= 4f64.ln() + 1e-8);
    }

    #[test]
    fn privacy_examples() {
        let e = block_average_expectation(4, 2).unwrap();
        let bob = identity_expectation(e.ambient());
        let mut rng = seeded_rng(4);
        let ens = random_invariant_ensemble(&e, &mut rng, 2).unwrap();
        assert!(quantum_privacy(&ens, &e, &e).unwrap().abs() < 1e-12);
        let d = entropic_disturbance(&ens, &e).unwrap().disturbance;
        assert!((quantum_privacy(&ens, &bob, &e).unwrap() - d).abs() < 1e-10);
        assert!(quantum_privacy(&ens, &e, &bob).is_err());
    }
}
