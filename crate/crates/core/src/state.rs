//! OAM superpositions and density matrices.
//!
//! A [`Superposition`] is a sparse map from OAM index ℓ to complex amplitude;
//! the index is unbounded so nothing dense exists until a [`BasisSpec`] fixes
//! an ordering. [`DensityMatrix`] is Hermitian, positive semidefinite and has
//! unit trace over that ordered basis.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Tolerance on `Σ|a|² = 1` for constructed superpositions.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Tolerance on `‖ρ − ρ†‖∞`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Tolerance on `Tr ρ = 1`.
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue accepted as numerically PSD.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Orbital angular momentum index ℓ (units of ħ per photon).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OamIndex(pub i64);

impl OamIndex {
    pub fn value(self) -> i64 {
        self.0
    }

    pub fn is_even(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn is_odd(self) -> bool {
        !self.is_even()
    }
}

impl From<i64> for OamIndex {
    fn from(ell: i64) -> Self {
        OamIndex(ell)
    }
}

impl fmt::Display for OamIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pure transverse state `Σ ψ_ℓ |ℓ⟩`, terms kept in ascending ℓ.
///
/// States built with [`Superposition::new`] are normalized and have their
/// global phase fixed so the lowest-ℓ amplitude is real and positive. States
/// produced by optical elements keep whatever phase the element imparts.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition {
    terms: BTreeMap<OamIndex, Complex64>,
}

impl Superposition {
    /// Normalizes `terms` into a state. Exactly-zero amplitudes are dropped.
    pub fn new<I, L>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, Complex64)>,
        L: Into<OamIndex>,
    {
        let mut map = BTreeMap::new();
        let mut any = false;
        for (ell, amp) in terms {
            any = true;
            let ell = ell.into();
            if map.insert(ell, amp).is_some() {
                return Err(Error::DuplicateIndex(ell.0));
            }
        }
        if !any {
            return Err(Error::EmptyState);
        }
        map.retain(|_, a| *a != Complex64::new(0.0, 0.0));
        let norm = map.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let lead = *map.values().next().expect("nonzero norm implies a term");
        let phase = lead.conj() / lead.norm();
        for a in map.values_mut() {
            *a = *a * phase / norm;
        }
        // The leading amplitude is real by construction; drop rounding residue.
        if let Some(first) = map.values_mut().next() {
            first.im = 0.0;
        }
        Ok(Superposition { terms: map })
    }

    /// The single mode `|ℓ⟩`.
    pub fn basis_state(ell: impl Into<OamIndex>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(ell.into(), Complex64::new(1.0, 0.0));
        Superposition { terms }
    }

    /// Wraps an already-normalized amplitude map without touching phases.
    pub(crate) fn from_terms_unchecked(terms: BTreeMap<OamIndex, Complex64>) -> Self {
        Superposition { terms }
    }

    /// Applies a bijective index map with a per-term amplitude factor.
    pub(crate) fn map_terms<F>(&self, f: F) -> Self
    where
        F: Fn(OamIndex, Complex64) -> (OamIndex, Complex64),
    {
        let terms = self.terms.iter().map(|(&ell, &a)| f(ell, a)).collect();
        Superposition { terms }
    }

    pub fn amplitude(&self, ell: impl Into<OamIndex>) -> Complex64 {
        self.terms.get(&ell.into()).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (OamIndex, Complex64)> + '_ {
        self.terms.iter().map(|(&ell, &a)| (ell, a))
    }

    pub fn indices(&self) -> impl Iterator<Item = OamIndex> + '_ {
        self.terms.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Superposition) -> Complex64 {
        self.terms.iter().map(|(ell, a)| a.conj() * other.amplitude(*ell)).sum()
    }

    /// Entrywise comparison over the union of supports.
    pub fn approx_eq(&self, other: &Superposition, tol: f64) -> bool {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .all(|&ell| (self.amplitude(ell) - other.amplitude(ell)).norm() <= tol)
    }

    /// Equal up to a global phase.
    pub fn phase_equivalent(&self, other: &Superposition, tol: f64) -> bool {
        let overlap = self.inner(other);
        if overlap.norm() == 0.0 {
            return self.is_empty() && other.is_empty();
        }
        let phase = overlap / overlap.norm();
        let rotated = other.map_terms(|ell, a| (ell, a * phase.conj()));
        self.approx_eq(&rotated, tol)
    }
}

/// Builds a normalized superposition from `(ℓ, amplitude)` pairs.
pub fn make_superposition(terms: &[(i64, Complex64)]) -> Result<Superposition> {
    Superposition::new(terms.iter().copied())
}

/// Even and odd parts of a superposition, unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityParts {
    pub even: BTreeMap<OamIndex, Complex64>,
    pub odd: BTreeMap<OamIndex, Complex64>,
    pub even_weight: f64,
    pub odd_weight: f64,
}

/// Splits `s` into its rotation-by-π symmetric (even ℓ) and antisymmetric
/// (odd ℓ) components.
pub fn parity_decompose(s: &Superposition) -> ParityParts {
    let (even, odd): (BTreeMap<_, _>, BTreeMap<_, _>) = s.terms().partition(|(ell, _)| ell.is_even());
    let weight = |m: &BTreeMap<OamIndex, Complex64>| m.values().map(|a| a.norm_sqr()).sum();
    ParityParts {
        even_weight: weight(&even),
        odd_weight: weight(&odd),
        even,
        odd,
    }
}

/// Index remap `|ℓ⟩ → |kℓ⟩` with amplitudes untouched.
pub fn hilbert_hotel(s: &Superposition, k: i64) -> Result<Superposition> {
    if k < 1 {
        return Err(Error::InvalidMultiplier(k));
    }
    let mut terms = BTreeMap::new();
    for (ell, a) in s.terms() {
        let mapped = ell
            .0
            .checked_mul(k)
            .ok_or(Error::IndexOverflow { ell: ell.0, factor: k })?;
        terms.insert(OamIndex(mapped), a);
    }
    Ok(Superposition::from_terms_unchecked(terms))
}

/// Ordered list of distinct OAM indices; fixes row/column order of every
/// matrix built on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct BasisSpec {
    indices: Vec<OamIndex>,
}

impl BasisSpec {
    pub fn new<I, L>(indices: I) -> Result<Self>
    where
        I: IntoIterator<Item = L>,
        L: Into<OamIndex>,
    {
        let indices: Vec<OamIndex> = indices.into_iter().map(Into::into).collect();
        if indices.is_empty() {
            return Err(Error::InvalidBasis("basis is empty".into()));
        }
        for (i, ell) in indices.iter().enumerate() {
            if indices[..i].contains(ell) {
                return Err(Error::InvalidBasis(format!("index {ell} repeated")));
            }
        }
        Ok(BasisSpec { indices })
    }

    pub fn indices(&self) -> &[OamIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, ell: impl Into<OamIndex>) -> Option<usize> {
        let ell = ell.into();
        self.indices.iter().position(|&e| e == ell)
    }

    pub fn contains(&self, ell: impl Into<OamIndex>) -> bool {
        self.position(ell).is_some()
    }

    /// Dense amplitude vector of `s` in this basis.
    pub fn coordinates(&self, s: &Superposition) -> Result<Vec<Complex64>> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.len()];
        for (ell, a) in s.terms() {
            let i = self
                .position(ell)
                .ok_or_else(|| Error::BasisMismatch(format!("mode {ell} is not in basis {self}")))?;
            v[i] = a;
        }
        Ok(v)
    }

    pub(crate) fn ensure_same(&self, other: &BasisSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch(format!("{self} vs {other}")))
        }
    }
}

impl TryFrom<Vec<i64>> for BasisSpec {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        BasisSpec::new(v)
    }
}

impl From<BasisSpec> for Vec<i64> {
    fn from(b: BasisSpec) -> Self {
        b.indices.into_iter().map(|e| e.0).collect()
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|e| e.0.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Interchange layout shared by every matrix file: basis plus row-major real
/// and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub basis: Vec<i64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// A square complex matrix bound to a basis, with no physicality guarantees.
/// Used for linear tomography estimates that may not be PSD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct BasisMatrix {
    basis: BasisSpec,
    elements: CMatrix,
}

impl BasisMatrix {
    pub fn new(basis: BasisSpec, elements: CMatrix) -> Result<Self> {
        let d = basis.len();
        if elements.nrows() != d || elements.ncols() != d {
            return Err(Error::BasisMismatch(format!(
                "matrix is {}x{} but basis {basis} has {d} modes",
                elements.nrows(),
                elements.ncols()
            )));
        }
        Ok(BasisMatrix { basis, elements })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_parts(self) -> (BasisSpec, CMatrix) {
        (self.basis, self.elements)
    }
}

impl TryFrom<MatrixRecord> for BasisMatrix {
    type Error = Error;

    fn try_from(rec: MatrixRecord) -> Result<Self> {
        let basis = BasisSpec::new(rec.basis)?;
        let d = basis.len();
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&rec.re) || !shape_ok(&rec.im) {
            return Err(Error::BasisMismatch(format!(
                "re/im must be {d}x{d} to match basis {basis}"
            )));
        }
        let elements = CMatrix::from_fn(d, d, |i, j| Complex64::new(rec.re[i][j], rec.im[i][j]));
        BasisMatrix::new(basis, elements)
    }
}

impl From<BasisMatrix> for MatrixRecord {
    fn from(m: BasisMatrix) -> Self {
        let d = m.basis.len();
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..d)
                .map(|i| (0..d).map(|j| f(&m.elements[(i, j)])).collect())
                .collect()
        };
        MatrixRecord {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
            basis: m.basis.into(),
        }
    }
}

/// Hermitian, PSD, unit-trace state over an ordered OAM basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct DensityMatrix {
    basis: BasisSpec,
    elements: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(basis: BasisSpec, elements: CMatrix) -> Result<Self> {
        let m = BasisMatrix::new(basis, elements)?;
        Self::try_from(m)
    }

    pub(crate) fn from_parts_unchecked(basis: BasisSpec, elements: CMatrix) -> Self {
        DensityMatrix { basis, elements }
    }

    /// `I/d` over `basis`.
    pub fn maximally_mixed(basis: BasisSpec) -> Self {
        let d = basis.len();
        let elements = CMatrix::identity(d, d).scale(1.0 / d as f64);
        DensityMatrix { basis, elements }
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `ρᵢⱼ = ⟨ℓᵢ|ρ|ℓⱼ⟩`, zero for modes outside the basis.
    pub fn element(&self, ell_i: impl Into<OamIndex>, ell_j: impl Into<OamIndex>) -> Complex64 {
        match (self.basis.position(ell_i), self.basis.position(ell_j)) {
            (Some(i), Some(j)) => self.elements[(i, j)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.elements).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigenvalues(&self.elements).iter().copied().collect()
    }

    pub fn as_basis_matrix(&self) -> BasisMatrix {
        BasisMatrix {
            basis: self.basis.clone(),
            elements: self.elements.clone(),
        }
    }
}

impl TryFrom<BasisMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: BasisMatrix) -> Result<Self> {
        let defect = linalg::hermiticity_defect(&m.elements);
        if !(defect <= HERMITIAN_TOLERANCE) {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let tr = linalg::trace(&m.elements).re;
        if !((tr - 1.0).abs() <= TRACE_TOLERANCE) {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}, expected 1")));
        }
        let min = linalg::eigenvalues(&m.elements).min();
        if min < -PSD_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix {
            basis: m.basis,
            elements: m.elements,
        })
    }
}

impl TryFrom<MatrixRecord> for DensityMatrix {
    type Error = Error;

    fn try_from(rec: MatrixRecord) -> Result<Self> {
        DensityMatrix::try_from(BasisMatrix::try_from(rec)?)
    }
}

impl From<DensityMatrix> for MatrixRecord {
    fn from(rho: DensityMatrix) -> Self {
        MatrixRecord::from(BasisMatrix {
            basis: rho.basis,
            elements: rho.elements,
        })
    }
}

/// `|ψ⟩⟨ψ|` expressed in `basis`.
pub fn pure_density(s: &Superposition, basis: &BasisSpec) -> Result<DensityMatrix> {
    let v = basis.coordinates(s)?;
    let d = v.len();
    let norm = s.norm_sqr();
    let elements = CMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj() / norm);
    Ok(DensityMatrix::from_parts_unchecked(basis.clone(), elements))
}

/// `Σ wᵢρᵢ / Σ wᵢ` for mutually incoherent sources.
pub fn incoherent_mix(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
    let (_, first) = parts
        .first()
        .ok_or_else(|| Error::WeightError("no mixture components".into()))?;
    let basis = first.basis();
    let d = basis.len();
    let mut total = 0.0;
    let mut acc = CMatrix::zeros(d, d);
    for &(w, rho) in parts {
        if w < 0.0 || w.is_nan() {
            return Err(Error::NegativeWeight(w));
        }
        basis.ensure_same(rho.basis())?;
        total += w;
        acc += rho.matrix().scale(w);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::WeightError(format!("weights sum to {total}")));
    }
    acc.unscale_mut(total);
    Ok(DensityMatrix::from_parts_unchecked(
        basis.clone(),
        linalg::hermitian_part(&acc),
    ))
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}
