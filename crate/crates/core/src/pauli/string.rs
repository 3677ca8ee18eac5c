use std::fmt;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// `i^k` for `k` mod 4.
pub fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `i^phase · X^x · Z^z` on `n` qubits, with the X factor to the left of the
/// Z factor on every site. Under this convention `X·Z = −iY`, so a Hermitian
/// string has `phase ≡ |x ∧ z| (mod 2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

fn popcount_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(p, q)| (p & q).count_ones()).sum()
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: 0,
        }
    }

    /// Hermitian string with sign `+1` from per-site letters.
    pub fn from_letters(letters: &str) -> Result<Self> {
        let n = letters.chars().count();
        let mut p = Self::identity(n);
        for (q, ch) in letters.chars().enumerate() {
            match ch {
                'I' | '_' => {}
                'X' => p.set(q, true, false),
                'Z' => p.set(q, false, true),
                'Y' => p.set(q, true, true),
                other => return Err(Error::Parse(format!("unknown Pauli letter {other:?}"))),
            }
        }
        p.phase = p.hermitian_phase();
        Ok(p)
    }

    /// `X` on every listed qubit.
    pub fn x_on(n: usize, sites: &[usize]) -> Self {
        let mut p = Self::identity(n);
        for &s in sites {
            p.set(s, true, p.z_bit(s));
        }
        p
    }

    /// `Z` on every listed qubit.
    pub fn z_on(n: usize, sites: &[usize]) -> Self {
        let mut p = Self::identity(n);
        for &s in sites {
            p.set(s, p.x_bit(s), true);
        }
        p
    }

    fn set(&mut self, q: usize, x: bool, z: bool) {
        assert!(q < self.n, "qubit {q} out of range {}", self.n);
        let (w, b) = (q / 64, q % 64);
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn x_mask(&self) -> &[u64] {
        &self.x
    }

    pub fn z_mask(&self) -> &[u64] {
        &self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    /// Qubits where the string acts non-trivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    fn hermitian_phase(&self) -> u8 {
        (popcount_and(&self.x, &self.z) % 4) as u8
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase + 4 - self.hermitian_phase() % 4) % 2 == 0
    }

    /// `+1` or `−1` for a Hermitian string relative to the product of
    /// single-site `X`, `Y`, `Z` letters; `None` when not Hermitian.
    pub fn sign(&self) -> Option<i8> {
        match (self.phase + 4 - self.hermitian_phase()) % 4 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Same masks, phase chosen so that the sign is `+1`.
    pub fn unsigned(&self) -> Self {
        let mut p = self.clone();
        p.phase = p.hermitian_phase();
        p
    }

    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + 2) % 4;
        p
    }

    pub fn times_i_pow(&self, k: u8) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + k) % 4;
        p
    }

    pub fn same_masks(&self, other: &Self) -> bool {
        self.x == other.x && self.z == other.z
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// Operator product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let swap = popcount_and(&self.z, &other.x);
        let phase = ((self.phase as u32 + other.phase as u32 + 2 * swap) % 4) as u8;
        Self {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
            phase,
        }
    }

    /// Symplectic form is zero.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        (popcount_and(&self.x, &other.z) + popcount_and(&self.z, &other.x)) % 2 == 0
    }

    /// Keeps the listed qubits, relabelled `0..sites.len()` in order. Fails
    /// if the string acts outside them.
    pub fn restrict_to(&self, sites: &[usize]) -> Result<Self> {
        let mut inside = vec![false; self.n];
        for &s in sites {
            inside[s] = true;
        }
        if let Some(q) = self.support().into_iter().find(|&q| !inside[q]) {
            return Err(Error::InvalidInput(format!("string acts on qubit {q} outside the region")));
        }
        let mut p = Self::identity(sites.len());
        for (k, &s) in sites.iter().enumerate() {
            p.set(k, self.x_bit(s), self.z_bit(s));
        }
        p.phase = self.phase;
        Ok(p)
    }

    /// Places the string on qubits `sites` of an `n`-qubit register.
    pub fn embed_into(&self, n: usize, sites: &[usize]) -> Self {
        assert_eq!(sites.len(), self.n);
        let mut p = Self::identity(n);
        for (k, &s) in sites.iter().enumerate() {
            p.set(s, self.x_bit(k), self.z_bit(k));
        }
        p.phase = self.phase;
        p
    }

    fn low_masks(&self) -> (usize, usize) {
        assert!(self.n <= 63, "dense action needs at most 63 qubits");
        (self.x[0] as usize, self.z[0] as usize)
    }

    /// `P|b⟩ = i^k (−1)^{|z ∧ b|} |b ⊕ x⟩` with qubit `q` the bit `q` of `b`.
    pub fn apply_to_basis(&self, b: usize) -> (usize, Complex64) {
        let (x, z) = self.low_masks();
        let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        (b ^ x, i_pow(self.phase) * sign)
    }

    pub fn to_dense(&self) -> CMat {
        let d = 1usize << self.n;
        let mut m = Mat::zeros(d, d);
        for b in 0..d {
            let (r, v) = self.apply_to_basis(b);
            m[(r, b)] = v;
        }
        m
    }

    /// `P · M` in `O(d²)`.
    pub fn left_mul_dense(&self, m: &CMat) -> CMat {
        let (x, z) = self.low_masks();
        let ph = i_pow(self.phase);
        Mat::from_fn(m.nrows(), m.ncols(), |r, c| {
            let s = r ^ x;
            let sign = if (z & s).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            ph * sign * m[(s, c)]
        })
    }

    /// `M · P` in `O(d²)`.
    pub fn right_mul_dense(&self, m: &CMat) -> CMat {
        let (x, z) = self.low_masks();
        let ph = i_pow(self.phase);
        Mat::from_fn(m.nrows(), m.ncols(), |r, c| {
            let sign = if (z & c).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            ph * sign * m[(r, c ^ x)]
        })
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PauliString {
    /// Written as a sign (or `±i` for non-Hermitian strings) followed by letters.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match (self.phase + 4 - self.hermitian_phase()) % 4 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            let ch = match (self.x_bit(q), self.z_bit(q)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
