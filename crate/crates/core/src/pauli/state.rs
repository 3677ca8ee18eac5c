use std::collections::HashSet;

use faer::Mat;
use num_complex::Complex64;

use super::{PauliString, StabilizerGroup};
use crate::blockalg::BlockPiece;
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, ExtendedReal, HermitianMatrix, QuantumState};

/// Largest register that [`CosetMixtureState::to_dense`] will materialize.
pub const DENSE_QUBIT_CAP: usize = 14;

/// Relative tolerance when comparing aggregated weights in a mixture.
const WEIGHT_TOL: f64 = 1e-9;

/// `ρ = w · 2^{-m} Σ_{s ∈ S} s` for a signed stabilizer group `S` on `m`
/// qubits. This is `w` times the normalized projector onto the joint `+1`
/// eigenspace of `S`. A zero weight is the zero functional.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetMixtureState {
    weight: f64,
    group: StabilizerGroup,
}

impl CosetMixtureState {
    pub fn new(weight: f64, group: StabilizerGroup) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidInput(format!("weight {weight} must be finite and non-negative")));
        }
        if weight == 0.0 {
            return Ok(Self::zero(group.num_qubits()));
        }
        Ok(Self { weight, group })
    }

    /// Normalized state of a stabilizer group.
    pub fn ground(group: StabilizerGroup) -> Self {
        Self { weight: 1.0, group }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::ground(StabilizerGroup::trivial(n))
    }

    pub fn zero(n: usize) -> Self {
        Self {
            weight: 0.0,
            group: StabilizerGroup::trivial(n),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.group.num_qubits()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn group(&self) -> &StabilizerGroup {
        &self.group
    }

    pub fn is_zero(&self) -> bool {
        self.weight == 0.0
    }

    /// Non-zero eigenvalue, `w · 2^{r − m}`.
    pub fn eigenvalue(&self) -> f64 {
        self.weight * 2f64.powi(self.group.rank() as i32 - self.num_qubits() as i32)
    }

    /// `ln` of the support dimension, `(m − r) ln 2`.
    pub fn log_support_dim(&self) -> f64 {
        (self.num_qubits() - self.group.rank()) as f64 * std::f64::consts::LN_2
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.weight * factor, self.group.clone())
    }

    /// `(I + h)/2 · ρ · (I + h)/2` for a Hermitian string `h`.
    pub fn project(&self, h: &PauliString) -> Result<Self> {
        if h.num_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: h.num_qubits(),
            });
        }
        if !h.is_hermitian() {
            return Err(Error::InvalidInput(format!("projector string {h} is not Hermitian")));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let rows = self.group.generators();
        if let Some(first) = rows.iter().position(|r| !r.commutes_unchecked(h)) {
            let pivot = &rows[first];
            let mut gens: Vec<PauliString> = rows
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != first)
                .map(|(_, r)| {
                    if r.commutes_unchecked(h) {
                        r.clone()
                    } else {
                        r.mul_unchecked(pivot)
                    }
                })
                .collect();
            gens.push(h.clone());
            return Ok(Self {
                weight: self.weight / 2.0,
                group: StabilizerGroup::canonical(self.num_qubits(), gens)?,
            });
        }
        match self.group.sign_of(h) {
            Some(1) => Ok(self.clone()),
            Some(_) => Ok(Self::zero(self.num_qubits())),
            None => Ok(Self {
                weight: self.weight / 2.0,
                group: self.group.with_generator(h)?,
            }),
        }
    }

    /// Partial trace onto `region`, relabelled `0..region.len()` in order.
    pub fn reduce_to(&self, region: &[usize]) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::zero(region.len()));
        }
        let sub = self.group.restrict_group(region)?.relabel(region)?;
        Ok(Self {
            weight: self.weight,
            group: sub,
        })
    }

    /// Dimension of the intersection of the unsigned groups, or `None` when
    /// the characters disagree somewhere on it.
    fn common_elements(&self, other: &Self) -> Option<usize> {
        let basis = self.group.intersection_basis(&other.group);
        basis
            .iter()
            .all(|g| other.group.contains(g))
            .then_some(basis.len())
    }

    /// `Tr(ρ σ)`.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        self.same_register(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(0.0);
        }
        Ok(match self.common_elements(other) {
            None => 0.0,
            Some(k) => self.weight * other.weight * 2f64.powi(k as i32 - self.num_qubits() as i32),
        })
    }

    /// `‖P_ρ P_σ‖_F` for the support projections.
    pub fn support_overlap(&self, other: &Self) -> Result<f64> {
        self.same_register(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(0.0);
        }
        Ok(match self.common_elements(other) {
            None => 0.0,
            Some(k) => {
                let exp = k as i32 + self.num_qubits() as i32
                    - self.group.rank() as i32
                    - other.group.rank() as i32;
                2f64.powi(exp).sqrt()
            }
        })
    }

    /// `S(ρ, σ)` in closed form: finite exactly when `σ`'s group is contained
    /// in `ρ`'s, signs included.
    pub fn coset_relative_entropy(&self, other: &Self) -> Result<ExtendedReal> {
        self.same_register(other)?;
        if self.is_zero() {
            return Ok(ExtendedReal::Finite(0.0));
        }
        if other.is_zero() || !other.group.generators().iter().all(|g| self.group.contains(g)) {
            return Ok(ExtendedReal::PosInfinity);
        }
        let rank_gap = self.group.rank() as f64 - other.group.rank() as f64;
        Ok(ExtendedReal::Finite(
            self.weight * ((self.weight / other.weight).ln() + rank_gap * std::f64::consts::LN_2),
        ))
    }

    /// Dense matrix on at most [`DENSE_QUBIT_CAP`] qubits.
    pub fn to_dense(&self) -> Result<DensityMatrix> {
        let m = self.num_qubits();
        if m > DENSE_QUBIT_CAP {
            return Err(Error::CapExceeded {
                what: "qubits for a dense stabilizer state",
                required: m,
                cap: DENSE_QUBIT_CAP,
            });
        }
        let d = 1usize << m;
        if self.is_zero() {
            return Ok(DensityMatrix::zero(d));
        }
        let mut acc: Mat<Complex64> = Mat::zeros(d, d);
        for g in self.group.elements() {
            for b in 0..d {
                let (r, v) = g.apply_to_basis(b);
                acc[(r, b)] += v;
            }
        }
        let scale = self.weight / d as f64;
        let mat = Mat::from_fn(d, d, |i, j| acc[(i, j)] * scale);
        Ok(DensityMatrix::from_psd_unchecked(HermitianMatrix::symmetrized(mat)))
    }

    fn same_register(&self, other: &Self) -> Result<()> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: other.num_qubits(),
            });
        }
        Ok(())
    }
}

/// Per-row sign pattern of `g` against `base`, which must share its masks.
fn sign_pattern(g: &StabilizerGroup, base: &StabilizerGroup) -> Option<Vec<bool>> {
    let (a, b) = (g.generators(), base.generators());
    if a.len() != b.len() || a.iter().zip(b).any(|(p, q)| !p.same_masks(q)) {
        return None;
    }
    Some(a.iter().zip(b).map(|(p, q)| p.phase() != q.phase()).collect())
}

/// Basis of `{c : c · δ = 0 for every δ in set}` over GF(2)^r.
fn annihilator(set: &[Vec<bool>], r: usize) -> Vec<Vec<bool>> {
    let mut rows: Vec<Vec<bool>> = set.to_vec();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..r {
        let Some(found) = (rank..rows.len()).find(|&i| rows[i][c]) else {
            continue;
        };
        rows.swap(rank, found);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[c] {
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x ^= *p;
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    (0..r)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![false; r];
            v[free] = true;
            for (row, &p) in rows.iter().zip(&pivots) {
                if row[free] {
                    v[p] = true;
                }
            }
            v
        })
        .collect()
}

impl QuantumState for CosetMixtureState {
    fn trace(&self) -> f64 {
        self.weight
    }

    fn relative_entropy(&self, other: &Self) -> Result<ExtendedReal> {
        self.coset_relative_entropy(other)
    }

    /// Exact mixtures only: members with a common unsigned group whose
    /// characters, weighted equally, form a coset of a subspace. Anything
    /// else is not a single stabilizer state and is rejected.
    fn mixture(weights: &[f64], members: &[&Self]) -> Result<Self> {
        if weights.len() != members.len() || members.is_empty() {
            return Err(Error::InvalidInput("mixture needs one weight per member".into()));
        }
        let n = members[0].num_qubits();
        let mut groups: Vec<(StabilizerGroup, f64)> = Vec::new();
        for (&w, m) in weights.iter().zip(members) {
            if m.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.num_qubits(),
                });
            }
            if !(w >= 0.0) {
                return Err(Error::InvalidInput(format!("negative mixture weight {w}")));
            }
            let mass = w * m.weight;
            if mass == 0.0 {
                continue;
            }
            match groups.iter_mut().find(|(g, _)| *g == m.group) {
                Some((_, acc)) => *acc += mass,
                None => groups.push((m.group.clone(), mass)),
            }
        }
        let Some((base, first_mass)) = groups.first().cloned() else {
            return Ok(Self::zero(n));
        };
        if groups.len() == 1 {
            return Self::new(first_mass, base);
        }
        let mut patterns = Vec::with_capacity(groups.len());
        for (g, mass) in &groups {
            let pattern = sign_pattern(g, &base).ok_or_else(|| {
                Error::NotRepresentable("mixture of states with different stabilizer groups".into())
            })?;
            if (mass - first_mass).abs() > WEIGHT_TOL * first_mass.max(*mass) {
                return Err(Error::NotRepresentable(
                    "mixture of sign sectors with unequal weights".into(),
                ));
            }
            patterns.push(pattern);
        }
        let set: HashSet<Vec<bool>> = patterns.iter().cloned().collect();
        let closed = patterns.iter().all(|a| {
            patterns.iter().all(|b| {
                let sum: Vec<bool> = a.iter().zip(b).map(|(x, y)| x ^ y).collect();
                set.contains(&sum)
            })
        });
        let k = patterns.len();
        if !closed || !k.is_power_of_two() {
            return Err(Error::NotRepresentable(
                "sign sectors do not form a subspace".into(),
            ));
        }
        let rows = base.generators();
        let gens = annihilator(&patterns, rows.len())
            .into_iter()
            .map(|c| {
                c.iter()
                    .zip(rows)
                    .filter(|(&on, _)| on)
                    .fold(PauliString::identity(n), |acc, (_, r)| acc.mul_unchecked(r))
            })
            .collect();
        Self::new(first_mass * k as f64, StabilizerGroup::canonical(n, gens)?)
    }

    fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        let aa = self.trace_product(self)?;
        let bb = other.trace_product(other)?;
        let ab = self.trace_product(other)?;
        Ok((aa + bb - 2.0 * ab).max(0.0).sqrt())
    }
}

impl BlockPiece for CosetMixtureState {
    fn zero_like(&self) -> Self {
        Self::zero(self.num_qubits())
    }
}
