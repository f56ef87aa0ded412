//! Simulation of an interferometric even/odd OAM multiplexer.
//!
//! The crate covers the whole chain: building OAM superpositions and density
//! matrices ([`state`]), pushing mutually incoherent sources through a
//! Dove-prism Mach-Zehnder duplexer ([`duplexer`]), rendering port intensities
//! from Laguerre-Gaussian modes ([`render`]), and reconstructing the output
//! state from simulated photon counts ([`tomography`]).

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod duplexer;
pub mod error;
pub mod linalg;
pub mod render;
pub mod state;
pub mod tomography;

pub use duplexer::{
    dark_port_ratio, dove_prism, duplex, parity_flip, rotate, Duplexer, ElementOp, ImperfectionModel, InputPort,
    PortOutput, Source,
};
pub use error::{Error, Result};
pub use render::{angular_lobe_count, lg_mode, port_power, render_state, GridField, GridSpec, Intensity};
pub use state::{
    hilbert_hotel, incoherent_mix, make_superposition, parity_decompose, pure_density, purity, BasisMatrix, BasisSpec,
    DensityMatrix, MatrixRecord, OamIndex, ParityParts, Superposition,
};
pub use tomography::{
    fidelity, fidelity_squared, ideal_probability, project_physical, projector_set, reconstruct_from_probabilities,
    reconstruct_linear, run_tomography, simulate_counts, CountRecord, Exposure, Projector, ProjectorLabel, Sign,
    TomographyResult,
};

pub use num_complex::Complex64;
