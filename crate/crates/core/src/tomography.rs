//! Projective-measurement tomography over an OAM basis.
//!
//! For a basis of `d` modes the measurement set is the `d` single-mode
//! projectors plus, for every pair `i < j`, the four normalized states
//! `(|ℓᵢ⟩ ± |ℓⱼ⟩)/√2` and `(|ℓᵢ⟩ ± i|ℓⱼ⟩)/√2`. With normalized projectors
//!
//! ```text
//! P±  = ½(ρᵢᵢ + ρⱼⱼ) ± Re ρᵢⱼ      Re ρᵢⱼ = (P₊ − P₋)/2
//! P′± = ½(ρᵢᵢ + ρⱼⱼ) ∓ Im ρᵢⱼ      Im ρᵢⱼ = (P′₋ − P′₊)/2
//! ```
//!
//! Counts are Poisson with mean `N·P`. Each projector draws from its own
//! ChaCha stream selected by its position in the set, so results do not
//! depend on evaluation order.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::{BasisMatrix, BasisSpec, DensityMatrix, OamIndex, Superposition, PSD_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Role of a projector in the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectorLabel {
    Diagonal { ell: OamIndex },
    RealPair { i: OamIndex, j: OamIndex, sign: Sign },
    ImagPair { i: OamIndex, j: OamIndex, sign: Sign },
}

impl fmt::Display for ProjectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |sign: &Sign| if *sign == Sign::Plus { "+" } else { "-" };
        match self {
            ProjectorLabel::Diagonal { ell } => write!(f, "|{ell}>"),
            ProjectorLabel::RealPair { i, j, sign } => write!(f, "|{i}> {} |{j}>", s(sign)),
            ProjectorLabel::ImagPair { i, j, sign } => write!(f, "|{i}> {}i |{j}>", s(sign)),
        }
    }
}

/// Measurement state `|φ⟩`; the projector `|φ⟩⟨φ|` is never materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub state: Superposition,
    pub label: ProjectorLabel,
}

pub fn projector_set(basis: &BasisSpec) -> Result<Vec<Projector>> {
    let d = basis.len();
    if d < 2 {
        return Err(Error::BasisTooSmall(d));
    }
    let one = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    let modes = basis.indices();
    let mut out = Vec::with_capacity(d + 2 * d * (d - 1));
    for &ell in modes {
        out.push(Projector {
            state: Superposition::basis_state(ell),
            label: ProjectorLabel::Diagonal { ell },
        });
    }
    for a in 0..d {
        for b in (a + 1)..d {
            let (i, j) = (modes[a], modes[b]);
            for sign in [Sign::Plus, Sign::Minus] {
                out.push(Projector {
                    state: Superposition::new([(i, one), (j, one * sign.factor())])?,
                    label: ProjectorLabel::RealPair { i, j, sign },
                });
            }
            for sign in [Sign::Plus, Sign::Minus] {
                out.push(Projector {
                    state: Superposition::new([(i, one), (j, i_unit * sign.factor())])?,
                    label: ProjectorLabel::ImagPair { i, j, sign },
                });
            }
        }
    }
    Ok(out)
}

/// `⟨φ|ρ|φ⟩`, clipped to `[0, 1]`.
pub fn ideal_probability(rho: &DensityMatrix, phi: &Projector) -> Result<f64> {
    let v = rho.basis().coordinates(&phi.state)?;
    let m = rho.matrix();
    let mut p = Complex64::new(0.0, 0.0);
    for (a, va) in v.iter().enumerate() {
        if *va == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (b, vb) in v.iter().enumerate() {
            p += va.conj() * m[(a, b)] * vb;
        }
    }
    Ok(p.re.clamp(0.0, 1.0))
}

/// Expected counts at unit probability: finite `N`, or exact probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exposure {
    Finite(f64),
    Infinite,
}

impl Serialize for Exposure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exposure::Finite(n) => s.serialize_f64(*n),
            Exposure::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Exposure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(n) => Ok(Exposure::Finite(n)),
            Raw::Word(w) if w == "infinite" => Ok(Exposure::Infinite),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "exposure must be a positive number or \"infinite\", got {w:?}"
            ))),
        }
    }
}

/// One simulated detector reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub label: ProjectorLabel,
    #[serde(rename = "P")]
    pub probability: f64,
    pub counts: u64,
    #[serde(rename = "N")]
    pub exposure: f64,
    pub seed: u64,
}

/// Independent generator for the projector at `index`.
fn projector_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn simulate_counts(probabilities: &[(Projector, f64)], exposure: f64, seed: u64) -> Result<Vec<CountRecord>> {
    if !(exposure > 0.0 && exposure.is_finite()) {
        return Err(Error::InvalidExposure(exposure));
    }
    if let Some((_, p)) = probabilities.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidProbability(*p));
    }
    let records = probabilities
        .par_iter()
        .enumerate()
        .map(|(index, (projector, p))| {
            let mean = exposure * p;
            let counts = if mean > 0.0 {
                let poisson = Poisson::new(mean).map_err(|_| Error::InvalidExposure(exposure))?;
                poisson.sample(&mut projector_rng(seed, index)) as u64
            } else {
                0
            };
            Ok(CountRecord {
                label: projector.label,
                probability: *p,
                counts,
                exposure,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(records)
}

/// Linear estimate and its Poisson standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimate {
    pub matrix: BasisMatrix,
    pub std_err_re: DMatrix<f64>,
    pub std_err_im: DMatrix<f64>,
}

struct PairLabels {
    re_plus: ProjectorLabel,
    re_minus: ProjectorLabel,
    im_plus: ProjectorLabel,
    im_minus: ProjectorLabel,
}

fn pair_labels(i: OamIndex, j: OamIndex) -> PairLabels {
    PairLabels {
        re_plus: ProjectorLabel::RealPair { i, j, sign: Sign::Plus },
        re_minus: ProjectorLabel::RealPair {
            i,
            j,
            sign: Sign::Minus,
        },
        im_plus: ProjectorLabel::ImagPair { i, j, sign: Sign::Plus },
        im_minus: ProjectorLabel::ImagPair {
            i,
            j,
            sign: Sign::Minus,
        },
    }
}

fn lookup<T: Copy>(table: &HashMap<ProjectorLabel, T>, label: &ProjectorLabel) -> Result<T> {
    table
        .get(label)
        .copied()
        .ok_or_else(|| Error::IncompleteSet(label.to_string()))
}

/// Inverts the linear measurement map from exact (or estimated) probabilities.
pub fn reconstruct_from_probabilities(
    probabilities: &[(ProjectorLabel, f64)],
    basis: &BasisSpec,
) -> Result<BasisMatrix> {
    let table: HashMap<_, _> = probabilities.iter().copied().collect();
    invert(&table, basis)
}

fn invert(table: &HashMap<ProjectorLabel, f64>, basis: &BasisSpec) -> Result<BasisMatrix> {
    let d = basis.len();
    if d < 2 {
        return Err(Error::BasisTooSmall(d));
    }
    let modes = basis.indices();
    let mut m = CMatrix::zeros(d, d);
    let diag = modes
        .iter()
        .map(|&ell| lookup(table, &ProjectorLabel::Diagonal { ell }))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = diag.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("diagonal probabilities sum to zero".into()));
    }
    for (a, p) in diag.iter().enumerate() {
        m[(a, a)] = Complex64::new(p / total, 0.0);
    }
    for a in 0..d {
        for b in (a + 1)..d {
            let l = pair_labels(modes[a], modes[b]);
            let re = (lookup(table, &l.re_plus)? - lookup(table, &l.re_minus)?) / 2.0;
            let im = (lookup(table, &l.im_minus)? - lookup(table, &l.im_plus)?) / 2.0;
            m[(a, b)] = Complex64::new(re, im);
            m[(b, a)] = Complex64::new(re, -im);
        }
    }
    BasisMatrix::new(basis.clone(), m)
}

/// Linear inversion from counts, `P̂ = counts / N`.
pub fn reconstruct_linear(records: &[CountRecord], basis: &BasisSpec) -> Result<LinearEstimate> {
    let mut probs = HashMap::with_capacity(records.len());
    let mut raw = HashMap::with_capacity(records.len());
    for r in records {
        if !(r.exposure > 0.0) {
            return Err(Error::ZeroExposure);
        }
        probs.insert(r.label, r.counts as f64 / r.exposure);
        raw.insert(r.label, (r.counts as f64, r.exposure));
    }
    let matrix = invert(&probs, basis)?;

    let d = basis.len();
    let modes = basis.indices();
    let mut se_re = DMatrix::zeros(d, d);
    let mut se_im = DMatrix::zeros(d, d);
    // ρᵢᵢ = cᵢ / C  ⇒  Var ≈ cᵢ (C − cᵢ) / C³
    let diag_counts: Vec<f64> = modes
        .iter()
        .map(|&ell| lookup(&raw, &ProjectorLabel::Diagonal { ell }).map(|(c, _)| c))
        .collect::<Result<_>>()?;
    let total: f64 = diag_counts.iter().sum();
    for (a, c) in diag_counts.iter().enumerate() {
        se_re[(a, a)] = (c * (total - c) / total.powi(3)).max(0.0).sqrt();
    }
    // (c₊ − c₋) / 2N  ⇒  Var = (c₊ + c₋) / 4N²
    let pair_se = |plus: &ProjectorLabel, minus: &ProjectorLabel| -> Result<f64> {
        let (cp, np) = lookup(&raw, plus)?;
        let (cm, nm) = lookup(&raw, minus)?;
        Ok(0.5 * (cp / (np * np) + cm / (nm * nm)).sqrt())
    };
    for a in 0..d {
        for b in (a + 1)..d {
            let l = pair_labels(modes[a], modes[b]);
            let re = pair_se(&l.re_plus, &l.re_minus)?;
            let im = pair_se(&l.im_plus, &l.im_minus)?;
            se_re[(a, b)] = re;
            se_re[(b, a)] = re;
            se_im[(a, b)] = im;
            se_im[(b, a)] = im;
        }
    }
    Ok(LinearEstimate {
        matrix,
        std_err_re: se_re,
        std_err_im: se_im,
    })
}

/// Nearest-physical state by eigenvalue clipping and trace renormalization.
pub fn project_physical(h: &BasisMatrix) -> Result<DensityMatrix> {
    let herm = linalg::hermitian_part(h.matrix());
    let tr = linalg::trace(&herm).re;
    if !((tr - 1.0).abs() <= 0.5) {
        return Err(Error::DegenerateInput(format!("trace {tr} is not within 0.5 of 1")));
    }
    let (values, vectors) = linalg::hermitian_eigen(&herm);
    if values.min() >= 0.0 {
        return Ok(DensityMatrix::from_parts_unchecked(h.basis().clone(), herm.unscale(tr)));
    }
    let clipped = values.map(|v| v.max(0.0));
    let kept: f64 = clipped.sum();
    if !(kept > 0.0) {
        return Err(Error::DegenerateInput("no positive eigenvalues".into()));
    }
    let rho = linalg::compose(&clipped.unscale(kept), &vectors);
    Ok(DensityMatrix::from_parts_unchecked(h.basis().clone(), rho))
}

/// Uhlmann fidelity `Tr √(√ρ σ √ρ)`; equals `|⟨ψ|χ⟩|` for pure states.
pub fn fidelity(target: &DensityMatrix, measured: &DensityMatrix) -> Result<f64> {
    target.basis().ensure_same(measured.basis())?;
    for rho in [target, measured] {
        let min = linalg::eigenvalues(rho.matrix()).min();
        if min < -PSD_TOLERANCE {
            return Err(Error::NotPsd(min));
        }
    }
    let root = linalg::psd_sqrt(target.matrix());
    let inner = linalg::hermitian_part(&(&root * measured.matrix() * &root));
    let f: f64 = linalg::eigenvalues(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `F²`, the convention without the outer square root.
pub fn fidelity_squared(target: &DensityMatrix, measured: &DensityMatrix) -> Result<f64> {
    fidelity(target, measured).map(|f| f * f)
}

/// Output of the full measure → reconstruct → score chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyResult {
    pub rho_linear: BasisMatrix,
    pub rho_physical: DensityMatrix,
    pub fidelity: f64,
    pub fidelity_squared: f64,
    #[serde(serialize_with = "rows")]
    pub std_err_re: DMatrix<f64>,
    #[serde(serialize_with = "rows")]
    pub std_err_im: DMatrix<f64>,
    pub exposure: Exposure,
    pub seed: u64,
    #[serde(skip)]
    pub records: Vec<CountRecord>,
}

fn rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    v.serialize(s)
}

pub fn run_tomography(
    rho_true: &DensityMatrix,
    exposure: Exposure,
    seed: u64,
    target: &DensityMatrix,
) -> Result<TomographyResult> {
    let basis = rho_true.basis();
    basis.ensure_same(target.basis())?;
    let projectors = projector_set(basis)?;
    let probabilities = projectors
        .into_iter()
        .map(|p| ideal_probability(rho_true, &p).map(|prob| (p, prob)))
        .collect::<Result<Vec<_>>>()?;

    let (estimate, records) = match exposure {
        Exposure::Infinite => {
            let exact: Vec<_> = probabilities.iter().map(|(p, prob)| (p.label, *prob)).collect();
            let d = basis.len();
            let estimate = LinearEstimate {
                matrix: reconstruct_from_probabilities(&exact, basis)?,
                std_err_re: DMatrix::zeros(d, d),
                std_err_im: DMatrix::zeros(d, d),
            };
            (estimate, Vec::new())
        }
        Exposure::Finite(n) => {
            let records = simulate_counts(&probabilities, n, seed)?;
            (reconstruct_linear(&records, basis)?, records)
        }
    };
    let rho_physical = project_physical(&estimate.matrix)?;
    let f = fidelity(target, &rho_physical)?;
    Ok(TomographyResult {
        rho_linear: estimate.matrix,
        rho_physical,
        fidelity: f,
        fidelity_squared: f * f,
        std_err_re: estimate.std_err_re,
        std_err_im: estimate.std_err_im,
        exposure,
        seed,
        records,
    })
}
