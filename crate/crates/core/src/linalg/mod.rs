//! Dense Hermitian spectral computations and the entropy functionals.
//!
//! Matrices are stored as [`faer::Mat`] over `Complex<f64>`. Every value type in
//! this module is immutable after construction; spectra are computed lazily and
//! cached, so repeated entropy evaluations against the same state only pay for
//! one eigendecomposition.

mod entropy;
pub mod random;

use std::fmt;
use std::sync::OnceLock;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use entropy::{
    holevo_chi, holevo_chi_against, relative_entropy, relative_entropy_with_tol, von_neumann_entropy, Ensemble,
    QuantumState,
};

/// Complex dense matrix used throughout the crate.
pub type CMat = Mat<Complex64>;

/// Relative Hermiticity tolerance (fraction of the largest entry magnitude).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute tolerance on negative eigenvalues and on unit trace.
pub const STATE_TOL: f64 = 1e-10;
/// Default support cutoff, relative to the largest eigenvalue.
pub const SUPPORT_TOL: f64 = 1e-10;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    Mat::identity(dim, dim)
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn scale(m: &CMat, s: f64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.norm_l2()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// `Tr(a · b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let mut out = Mat::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    faer::linalg::kron::kron(out.as_mut(), a.as_ref(), b.as_ref());
    out
}

fn max_modulus(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction checks Hermiticity against [`HERMITIAN_TOL`] times the largest
/// entry magnitude and then stores the exactly symmetrized matrix `(H + H†)/2`.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("zero-dimensional matrix".into()));
        }
        let tolerance = HERMITIAN_TOL * max_modulus(&m).max(f64::MIN_POSITIVE);
        let mut asymmetry = 0.0f64;
        for j in 0..m.ncols() {
            for i in 0..=j {
                asymmetry = asymmetry.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if asymmetry > tolerance {
            return Err(Error::NotHermitian {
                asymmetry,
                tolerance,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without checking. Callers guarantee Hermiticity up to roundoff.
    pub(crate) fn symmetrized(m: CMat) -> Self {
        let n = m.nrows();
        let h = Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        Self(h)
    }

    pub fn identity(dim: usize) -> Self {
        Self(identity(dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(Mat::from_fn(n, n, |i, j| if i == j { c(diag[i]) } else { c(0.0) }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianMatrix(dim={})", self.dim())
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `Σ f(λ_i) |v_i⟩⟨v_i|`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        let n = self.dim();
        let u = &self.eigenvectors;
        let weighted = Mat::from_fn(n, n, |i, k| u[(i, k)] * f(self.eigenvalues[k]));
        &weighted * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.map(|x| x)
    }
}

impl fmt::Debug for SpectralDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralDecomposition")
            .field("eigenvalues", &self.eigenvalues)
            .finish_non_exhaustive()
    }
}

/// Basis index sets of the connected components of the joint nonzero pattern
/// of Hermitian matrices, each sorted, ordered by smallest index.
///
/// The matrices vanish exactly between different sets, so after permuting the
/// basis they are block diagonal with these blocks and spectral work splits
/// without approximation.
pub fn pattern_components(mats: &[&CMat]) -> Vec<Vec<usize>> {
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let zero = c(0.0);
    for m in mats {
        for j in 0..n {
            for i in 0..j {
                if m[(i, j)] != zero {
                    let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[r]].push(i);
    }
    comps
}

pub fn principal_submatrix(m: &CMat, idx: &[usize]) -> CMat {
    Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn dense_eig(m: &CMat) -> Result<SpectralDecomposition> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenFailure)?;
    Ok(SpectralDecomposition {
        eigenvalues: (0..m.nrows()).map(|i| evd.S()[i].re).collect(),
        eigenvectors: evd.U().to_owned(),
    })
}

/// Spectra of the diagonal blocks given by [`pattern_components`].
pub fn block_spectra(h: &CMat, comps: &[Vec<usize>]) -> Result<Vec<SpectralDecomposition>> {
    comps
        .iter()
        .map(|idx| dense_eig(&principal_submatrix(h, idx)))
        .collect()
}

/// Eigendecomposition that first splits the matrix along its exact sparsity
/// blocks; density matrices of stabilizer states are typically a union of
/// many small blocks in the computational basis.
pub fn eig_hermitian(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let comps = pattern_components(&[h.as_mat()]);
    if comps.len() <= 1 {
        return dense_eig(h.as_mat());
    }
    let parts = block_spectra(h.as_mat(), &comps)?;
    let mut order: Vec<(f64, usize, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(b, p)| p.eigenvalues.iter().enumerate().map(move |(k, &l)| (l, b, k)))
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = h.dim();
    let mut vectors = CMat::zeros(n, n);
    for (col, &(_, b, k)) in order.iter().enumerate() {
        for (r, &row) in comps[b].iter().enumerate() {
            vectors[(row, col)] = parts[b].eigenvectors[(r, k)];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues: order.iter().map(|o| o.0).collect(),
        eigenvectors: vectors,
    })
}

/// Finite value in nats, or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn finite(v: f64) -> Result<Self> {
        if v.is_nan() {
            return Err(Error::Internal("NaN entropy".into()));
        }
        Ok(Self::Finite(v))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Finite(v) => Some(v),
            Self::PosInfinity => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }

    pub fn to_bits(self) -> Self {
        match self {
            Self::Finite(v) => Self::Finite(v / std::f64::consts::LN_2),
            Self::PosInfinity => Self::PosInfinity,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::PosInfinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_f64(*v),
            Self::PosInfinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Self::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Self::PosInfinity),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unexpected token {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    /// Unit trace.
    Normalized,
    /// Trace at most one; used for unnormalized blocks.
    SubState,
}

/// Positive semidefinite Hermitian matrix of trace one (or at most one for the
/// sub-state variant).
#[derive(Clone)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    trace: f64,
    kind: StateKind,
    spectrum: OnceLock<SpectralDecomposition>,
}

impl DensityMatrix {
    /// A unit-trace state. Checks trace and positivity.
    pub fn new(m: CMat) -> Result<Self> {
        let state = Self::validated(HermitianMatrix::new(m)?)?;
        if (state.trace - 1.0).abs() > STATE_TOL {
            return Err(Error::BadTrace {
                trace: state.trace,
                kind: "density matrix",
            });
        }
        Ok(state)
    }

    /// A positive matrix with trace in `[0, 1]`.
    pub fn sub_state(m: CMat) -> Result<Self> {
        let state = Self::validated(HermitianMatrix::new(m)?)?;
        if state.trace > 1.0 + STATE_TOL {
            return Err(Error::BadTrace {
                trace: state.trace,
                kind: "sub-state",
            });
        }
        Ok(state)
    }

    fn validated(h: HermitianMatrix) -> Result<Self> {
        let state = Self::from_psd_unchecked(h);
        let lowest = state.spectrum()?.eigenvalues.first().copied().unwrap_or(0.0);
        if lowest < -STATE_TOL {
            return Err(Error::NegativeEigenvalue { value: lowest });
        }
        Ok(state)
    }

    /// Wraps a matrix that is positive by construction (mixtures, compressions
    /// `P ρ P`, partial traces). The kind follows from the trace.
    pub(crate) fn from_psd_unchecked(h: HermitianMatrix) -> Self {
        let trace = h.trace();
        let kind = if (trace - 1.0).abs() <= STATE_TOL {
            StateKind::Normalized
        } else {
            StateKind::SubState
        };
        Self {
            matrix: h,
            trace,
            kind,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let h = HermitianMatrix::from_real_diagonal(diag);
        let state = Self::validated(h)?;
        if state.trace > 1.0 + STATE_TOL {
            return Err(Error::BadTrace {
                trace: state.trace,
                kind: "sub-state",
            });
        }
        Ok(state)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_psd_unchecked(HermitianMatrix(scale(&identity(dim), 1.0 / dim as f64)))
    }

    /// `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq == 0.0 {
            return Err(Error::InvalidInput("zero vector".into()));
        }
        let n = v.len();
        let m = Mat::from_fn(n, n, |i, j| v[i] * v[j].conj() / norm_sq);
        Ok(Self::from_psd_unchecked(HermitianMatrix::symmetrized(m)))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_psd_unchecked(HermitianMatrix(Mat::zeros(dim, dim)))
    }

    /// `s · ρ` for `s ≥ 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::InvalidInput(format!("negative scale {s}")));
        }
        let out = Self::from_psd_unchecked(HermitianMatrix(scale(self.as_mat(), s)));
        if let Some(spec) = self.spectrum.get() {
            let _ = out.spectrum.set(SpectralDecomposition {
                eigenvalues: spec.eigenvalues.iter().map(|v| v * s).collect(),
                eigenvectors: spec.eigenvectors.clone(),
            });
        }
        Ok(out)
    }

    /// Rescales to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        if self.trace <= 0.0 {
            return Err(Error::BadTrace {
                trace: self.trace,
                kind: "normalizable state",
            });
        }
        self.scaled(1.0 / self.trace)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn as_mat(&self) -> &CMat {
        self.matrix.as_mat()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = eig_hermitian(&self.matrix)?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &CMat) -> Complex64 {
        trace_product(self.as_mat(), a)
    }

    /// `Σ ρ_i` over the given sub-states, each weighted.
    pub fn weighted_sum(weights: &[f64], members: &[&DensityMatrix]) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidInput("empty mixture".into()));
        };
        if weights.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                found: weights.len(),
            });
        }
        let dim = first.dim();
        let mut acc: CMat = Mat::zeros(dim, dim);
        for (w, m) in weights.iter().zip(members) {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            if *w < 0.0 {
                return Err(Error::InvalidInput(format!("negative weight {w}")));
            }
            acc = &acc + &scale(m.as_mat(), *w);
        }
        Ok(Self::from_psd_unchecked(HermitianMatrix(acc)))
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMatrix")
            .field("dim", &self.dim())
            .field("trace", &self.trace)
            .field("kind", &self.kind)
            .finish()
    }
}

/// Orthogonal projection onto the span of eigenvectors whose eigenvalue
/// exceeds `tol` times the largest eigenvalue. The zero matrix maps to zero.
pub fn support_projection(rho: &DensityMatrix, tol: f64) -> Result<HermitianMatrix> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidInput(format!("support tolerance {tol} outside (0, 1)")));
    }
    let spec = rho.spectrum()?;
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(HermitianMatrix(Mat::zeros(rho.dim(), rho.dim())));
    }
    let cut = tol * top;
    Ok(HermitianMatrix::symmetrized(spec.map(|x| if x > cut { 1.0 } else { 0.0 })))
}
