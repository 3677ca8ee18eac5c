use crate::error::{Error, Result};

use super::PauliString;

/// Symplectic column `c`: the X bit of qubit `c` for `c < n`, else the Z bit
/// of qubit `c − n`.
fn col_bit(p: &PauliString, n: usize, c: usize) -> bool {
    if c < n {
        p.x_bit(c)
    } else {
        p.z_bit(c - n)
    }
}

/// Gauss–Jordan elimination over GF(2) on the symplectic vectors, carried
/// out by multiplying the strings so signs follow along. Columns are visited
/// in `order`. Returns the pivot rows with their pivot columns and the rows
/// that reduced to a multiple of the identity.
fn eliminate(
    mut rows: Vec<PauliString>,
    n: usize,
    order: &[usize],
) -> (Vec<(usize, PauliString)>, Vec<PauliString>) {
    let mut rank = 0;
    let mut pivots = Vec::new();
    for &c in order {
        let Some(found) = (rank..rows.len()).find(|&i| col_bit(&rows[i], n, c)) else {
            continue;
        };
        rows.swap(rank, found);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && col_bit(row, n, c) {
                *row = row.mul_unchecked(&pivot);
            }
        }
        pivots.push(c);
        rank += 1;
    }
    let residual = rows.split_off(rank);
    (pivots.into_iter().zip(rows).collect(), residual)
}

/// An abelian group of Hermitian Pauli strings not containing `−I`, stored
/// as a canonical generating set: signed rows in reduced row echelon form
/// over the natural column order. Two groups are equal exactly when their
/// canonical rows are equal, signs included.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StabilizerGroup {
    n: usize,
    rows: Vec<PauliString>,
    pivots: Vec<usize>,
}

impl StabilizerGroup {
    pub fn trivial(n: usize) -> Self {
        Self {
            n,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Group generated by `gens`, which must be Hermitian and pairwise
    /// commuting. Dependent generators are allowed as long as they do not
    /// produce `−I`.
    pub fn new(n: usize, gens: Vec<PauliString>) -> Result<Self> {
        for (i, g) in gens.iter().enumerate() {
            if g.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.num_qubits(),
                });
            }
            if !g.is_hermitian() {
                return Err(Error::InvalidInput(format!("generator {i} ({g}) is not Hermitian")));
            }
        }
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                if !gens[i].commutes_unchecked(&gens[j]) {
                    return Err(Error::InvalidInput(format!(
                        "generators {i} ({}) and {j} ({}) anticommute",
                        gens[i], gens[j]
                    )));
                }
            }
        }
        Self::canonical(n, gens)
    }

    /// Canonicalizes commuting Hermitian generators without re-checking.
    pub(crate) fn canonical(n: usize, gens: Vec<PauliString>) -> Result<Self> {
        let order: Vec<usize> = (0..2 * n).collect();
        let (reduced, residual) = eliminate(gens, n, &order);
        if residual.iter().any(|r| r.phase() == 2) {
            return Err(Error::InvalidInput("generators produce −I".into()));
        }
        let (pivots, rows) = reduced.into_iter().unzip();
        Ok(Self { n, rows, pivots })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Number of independent generators.
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.rows
    }

    /// Reduces `p` against the canonical rows. Returns the leftover string;
    /// it is a multiple of the identity exactly when `p` lies in the span.
    fn reduce(&self, p: &PauliString) -> PauliString {
        let mut q = p.clone();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            if col_bit(&q, self.n, c) {
                q = q.mul_unchecked(row);
            }
        }
        q
    }

    /// `Some(+1)` if `p` is in the group, `Some(−1)` if `−p` is, `None` if
    /// neither.
    pub fn sign_of(&self, p: &PauliString) -> Option<i8> {
        let q = self.reduce(p);
        if !q.is_identity_up_to_phase() {
            return None;
        }
        match q.phase() {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.sign_of(p) == Some(1)
    }

    /// `p` or `−p` is in the group.
    pub fn contains_unsigned(&self, p: &PauliString) -> bool {
        self.reduce(p).is_identity_up_to_phase()
    }

    /// Every generator commutes with `p`.
    pub fn commutes_with(&self, p: &PauliString) -> bool {
        self.rows.iter().all(|r| r.commutes_unchecked(p))
    }

    /// Subgroup of elements supported inside `region` (qubit indices).
    /// Columns outside the region are eliminated first; the remaining rows
    /// generate the subgroup.
    pub fn restrict_group(&self, region: &[usize]) -> Result<Self> {
        let mut inside = vec![false; self.n];
        for &q in region {
            if q >= self.n {
                return Err(Error::InvalidInput(format!("qubit {q} outside the register")));
            }
            inside[q] = true;
        }
        let is_inside = |c: usize| inside[c % self.n];
        let mut order: Vec<usize> = (0..2 * self.n).filter(|&c| !is_inside(c)).collect();
        let outside_cols = order.len();
        order.extend((0..2 * self.n).filter(|&c| is_inside(c)));
        let (reduced, _) = eliminate(self.rows.clone(), self.n, &order);
        let outside: std::collections::HashSet<usize> = order[..outside_cols].iter().copied().collect();
        let kept = reduced
            .into_iter()
            .filter(|(c, _)| !outside.contains(c))
            .map(|(_, r)| r)
            .collect();
        Self::canonical(self.n, kept)
    }

    /// The same group on the register `region`, relabelled in order.
    pub fn relabel(&self, region: &[usize]) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.restrict_to(region))
            .collect::<Result<Vec<_>>>()?;
        Self::canonical(region.len(), rows)
    }

    /// Adds a commuting Hermitian generator.
    pub fn with_generator(&self, h: &PauliString) -> Result<Self> {
        let mut gens = self.rows.clone();
        gens.push(h.clone());
        Self::canonical(self.n, gens)
    }

    /// Signed elements of `self` whose unsigned strings also lie in `other`'s
    /// span, as a basis of that intersection.
    pub fn intersection_basis(&self, other: &Self) -> Vec<PauliString> {
        // Residual of each row modulo the other group, with the set of rows used.
        let r = self.rows.len();
        let mut work: Vec<(PauliString, Vec<bool>)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut used = vec![false; r];
                used[i] = true;
                (other.reduce(row).unsigned(), used)
            })
            .collect();
        let order: Vec<usize> = (0..2 * self.n).collect();
        let mut rank = 0;
        for &c in &order {
            let Some(found) = (rank..work.len()).find(|&i| col_bit(&work[i].0, self.n, c)) else {
                continue;
            };
            work.swap(rank, found);
            let (pivot, pused) = work[rank].clone();
            for (i, (row, used)) in work.iter_mut().enumerate() {
                if i != rank && col_bit(row, self.n, c) {
                    *row = row.mul_unchecked(&pivot).unsigned();
                    for (u, p) in used.iter_mut().zip(&pused) {
                        *u ^= *p;
                    }
                }
            }
            rank += 1;
        }
        work[rank..]
            .iter()
            .map(|(_, used)| {
                used.iter()
                    .enumerate()
                    .filter(|(_, &u)| u)
                    .fold(PauliString::identity(self.n), |acc, (i, _)| acc.mul_unchecked(&self.rows[i]))
            })
            .collect()
    }

    /// Every element, in Gray-code order. Only sensible for small rank.
    pub fn elements(&self) -> Vec<PauliString> {
        let r = self.rows.len();
        let mut out = Vec::with_capacity(1 << r);
        let mut g = PauliString::identity(self.n);
        out.push(g.clone());
        for k in 1usize..(1 << r) {
            let flip = k.trailing_zeros() as usize;
            g = g.mul_unchecked(&self.rows[flip]);
            out.push(g.clone());
        }
        out
    }
}
