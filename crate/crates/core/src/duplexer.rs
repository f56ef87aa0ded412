//! Mach-Zehnder even/odd OAM duplexer built from Dove prisms.
//!
//! Every element here is diagonal in ℓ up to a sign flip of the index, so the
//! whole interferometer reduces to an independent 2×2 port transfer per mode.
//! Output port 1 is the bright port (even ℓ entering at A, odd ℓ entering at
//! B), output port 0 is the dark port.
//!
//! Beam splitters use a real transmitted amplitude and a reflected amplitude
//! carrying `+i`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::{BasisSpec, DensityMatrix, OamIndex, Superposition};

/// Port weights below this are reported as exactly zero with no state.
pub const EMPTY_PORT_WEIGHT: f64 = 1e-20;

/// A single transverse-mode element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementOp {
    Identity,
    /// Mirror reflection: `|ℓ⟩ → |−ℓ⟩`.
    ParityFlip,
    /// Image rotation by θ radians: `|ℓ⟩ → e^{iℓθ}|ℓ⟩`.
    Rotation(f64),
    /// Dove prism at orientation θ: parity flip followed by rotation by 2θ.
    DovePrism(f64),
}

impl ElementOp {
    /// Image of the basis mode `|ℓ⟩` as `(ℓ′, amplitude)`.
    pub fn act_on_mode(&self, ell: OamIndex) -> (OamIndex, Complex64) {
        match *self {
            ElementOp::Identity => (ell, Complex64::new(1.0, 0.0)),
            ElementOp::ParityFlip => (OamIndex(-ell.0), Complex64::new(1.0, 0.0)),
            ElementOp::Rotation(theta) => (ell, Complex64::from_polar(1.0, ell.0 as f64 * theta)),
            ElementOp::DovePrism(theta) => {
                let flipped = OamIndex(-ell.0);
                (flipped, Complex64::from_polar(1.0, flipped.0 as f64 * 2.0 * theta))
            }
        }
    }

    pub fn apply(&self, s: &Superposition) -> Superposition {
        s.map_terms(|ell, a| {
            let (out, phase) = self.act_on_mode(ell);
            (out, a * phase)
        })
    }
}

/// Applies a chain of elements in order to a single mode.
fn propagate_mode(chain: &[ElementOp], ell: OamIndex) -> (OamIndex, Complex64) {
    chain.iter().fold((ell, Complex64::new(1.0, 0.0)), |(e, amp), op| {
        let (next, phase) = op.act_on_mode(e);
        (next, amp * phase)
    })
}

pub fn parity_flip(s: &Superposition) -> Superposition {
    ElementOp::ParityFlip.apply(s)
}

pub fn rotate(s: &Superposition, theta: f64) -> Superposition {
    ElementOp::Rotation(theta).apply(s)
}

pub fn dove_prism(s: &Superposition, theta: f64) -> Superposition {
    ElementOp::DovePrism(theta).apply(s)
}

/// Interferometer error parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImperfectionModel {
    /// Extra relative phase ε between the arms (rad).
    pub path_phase_error: f64,
    /// Deviation δ of the relative prism angle from π/2 (rad).
    pub prism_angle_error: f64,
    /// Splitter intensity asymmetry η in [0, 1); T = (1+η)/2, R = (1−η)/2.
    pub splitting_imbalance: f64,
}

impl ImperfectionModel {
    pub fn new(path_phase_error: f64, prism_angle_error: f64, splitting_imbalance: f64) -> Result<Self> {
        let m = ImperfectionModel {
            path_phase_error,
            prism_angle_error,
            splitting_imbalance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.path_phase_error.is_finite() {
            return Err(Error::InvalidImperfection("path phase error must be finite".into()));
        }
        if !self.prism_angle_error.is_finite() {
            return Err(Error::InvalidImperfection("prism angle error must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.splitting_imbalance) {
            return Err(Error::InvalidImperfection(format!(
                "splitting imbalance {} outside [0, 1)",
                self.splitting_imbalance
            )));
        }
        Ok(())
    }
}

/// Lossless splitter `[[t, r], [r, t]]` with real `t` and imaginary `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter {
    t: f64,
    r: Complex64,
}

impl BeamSplitter {
    pub fn balanced() -> Self {
        Self::with_imbalance(0.0)
    }

    pub fn with_imbalance(eta: f64) -> Self {
        BeamSplitter {
            t: ((1.0 + eta) / 2.0).sqrt(),
            r: Complex64::new(0.0, ((1.0 - eta) / 2.0).sqrt()),
        }
    }

    fn apply(&self, (a0, a1): (Complex64, Complex64)) -> (Complex64, Complex64) {
        (a0 * self.t + a1 * self.r, a0 * self.r + a1 * self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputPort {
    A,
    B,
}

/// Bright and dark output amplitudes for one input mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortAmplitudes {
    pub bright: Complex64,
    pub dark: Complex64,
}

/// Two Dove-prism arms between two splitters.
///
/// Each arm is a prism plus one mirror, so reflections cancel and only a net
/// image rotation survives. With prism 1 at 0 and prism 2 at π/2 + δ, arm 2
/// carries a relative rotation of π + 2δ and a path phase ε.
#[derive(Debug, Clone, PartialEq)]
pub struct Duplexer {
    splitter: BeamSplitter,
    arm_1: Vec<ElementOp>,
    arm_2: Vec<ElementOp>,
    path_phase: f64,
}

impl Duplexer {
    pub fn ideal() -> Self {
        Self::with_imperfections(&ImperfectionModel::ideal()).expect("ideal model is valid")
    }

    pub fn with_imperfections(imp: &ImperfectionModel) -> Result<Self> {
        imp.validate()?;
        Ok(Duplexer {
            splitter: BeamSplitter::with_imbalance(imp.splitting_imbalance),
            arm_1: vec![ElementOp::DovePrism(0.0), ElementOp::ParityFlip],
            arm_2: vec![
                ElementOp::DovePrism(FRAC_PI_2 + imp.prism_angle_error),
                ElementOp::ParityFlip,
            ],
            path_phase: imp.path_phase_error,
        })
    }

    /// Net operator of each arm on `|ℓ⟩`: `(P̂₁, e^{iε}P̂₂′)` eigenvalues.
    pub fn arm_factors(&self, ell: OamIndex) -> (Complex64, Complex64) {
        let (out_1, p1) = propagate_mode(&self.arm_1, ell);
        let (out_2, p2) = propagate_mode(&self.arm_2, ell);
        debug_assert!(out_1 == ell && out_2 == ell, "arms must preserve ℓ");
        (p1, p2 * Complex64::from_polar(1.0, self.path_phase))
    }

    pub fn transfer(&self, ell: OamIndex, port: InputPort) -> PortAmplitudes {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let input = match port {
            InputPort::A => (one, zero),
            InputPort::B => (zero, one),
        };
        let (a1, a2) = self.splitter.apply(input);
        let (p1, p2) = self.arm_factors(ell);
        let (dark, bright) = self.splitter.apply((a1 * p1, a2 * p2));
        PortAmplitudes { bright, dark }
    }

    /// Pushes each mutually incoherent source through the device with vacuum
    /// at the other port and sums the weighted outputs.
    pub fn run(&self, sources: &[Source<'_>]) -> Result<PortOutput> {
        let first = sources.first().ok_or_else(|| Error::WeightError("no sources".into()))?;
        let basis = first.state.basis().clone();
        let mut total_weight = 0.0;
        for s in sources {
            basis.ensure_same(s.state.basis())?;
            if !(s.weight >= 0.0) {
                return Err(Error::WeightError(format!("weight {} is negative", s.weight)));
            }
            total_weight += s.weight;
        }
        if (total_weight - 1.0).abs() > 1e-9 {
            return Err(Error::WeightError(format!("weights sum to {total_weight}, expected 1")));
        }

        let d = basis.len();
        let mut bright = CMatrix::zeros(d, d);
        let mut dark = CMatrix::zeros(d, d);
        for s in sources {
            if s.weight == 0.0 {
                continue;
            }
            let amps: Vec<PortAmplitudes> = basis.indices().iter().map(|&ell| self.transfer(ell, s.port)).collect();
            let rho = s.state.matrix();
            for i in 0..d {
                for j in 0..d {
                    let z = rho[(i, j)] * s.weight;
                    bright[(i, j)] += amps[i].bright * z * amps[j].bright.conj();
                    dark[(i, j)] += amps[i].dark * z * amps[j].dark.conj();
                }
            }
        }
        let (bright_weight, bright) = normalize_port(&basis, bright);
        let (dark_weight, dark) = normalize_port(&basis, dark);
        Ok(PortOutput {
            bright,
            bright_weight,
            dark,
            dark_weight,
        })
    }
}

fn normalize_port(basis: &BasisSpec, m: CMatrix) -> (f64, Option<DensityMatrix>) {
    let w = linalg::trace(&m).re;
    if w <= EMPTY_PORT_WEIGHT {
        return (0.0, None);
    }
    let rho = linalg::hermitian_part(&m).unscale(w);
    (w, Some(DensityMatrix::from_parts_unchecked(basis.clone(), rho)))
}

/// One incoherent input to the duplexer.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub port: InputPort,
    pub weight: f64,
    pub state: &'a DensityMatrix,
}

/// State and power fraction leaving each output port.
#[derive(Debug, Clone, PartialEq)]
pub struct PortOutput {
    pub bright: Option<DensityMatrix>,
    pub bright_weight: f64,
    pub dark: Option<DensityMatrix>,
    pub dark_weight: f64,
}

impl PortOutput {
    pub fn dark_port_ratio(&self) -> Result<f64> {
        dark_port_ratio(self)
    }
}

/// Two-source duplexer. A missing input must carry zero weight.
pub fn duplex(
    input_a: Option<&DensityMatrix>,
    input_b: Option<&DensityMatrix>,
    weights: (f64, f64),
    imp: &ImperfectionModel,
) -> Result<PortOutput> {
    let (w_a, w_b) = weights;
    if !(w_a >= 0.0 && w_b >= 0.0) || (w_a + w_b - 1.0).abs() > 1e-9 {
        return Err(Error::WeightError(format!(
            "weights ({w_a}, {w_b}) are not a convex pair"
        )));
    }
    let mut sources = Vec::with_capacity(2);
    for (port, input, w) in [(InputPort::A, input_a, w_a), (InputPort::B, input_b, w_b)] {
        match input {
            Some(state) => sources.push(Source { port, weight: w, state }),
            None if w == 0.0 => {}
            None => return Err(Error::WeightError(format!("port {port:?} has weight {w} but no input"))),
        }
    }
    Duplexer::with_imperfections(imp)?.run(&sources)
}

/// Dark-port power divided by bright-port power.
pub fn dark_port_ratio(out: &PortOutput) -> Result<f64> {
    if out.bright_weight <= 0.0 {
        return Err(Error::BrightPortEmpty);
    }
    Ok(out.dark_weight / out.bright_weight)
}
