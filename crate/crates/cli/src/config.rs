//! Scenario configuration (TOML).
//!
//! ```toml
//! basis = [-4, -2, 1, 3]
//!
//! [[sources]]
//! port = "A"
//! weight = 0.5
//! wavelength_nm = 532.0
//! terms = [[-4, 1.0, 0.0], [-2, 1.0, 0.0]]   # (ℓ, re, im)
//!
//! [imperfections]
//! epsilon_rad = 0.0
//! delta_rad = 0.0
//! eta = 0.0
//!
//! [measurement]
//! exposure = 100000      # or "infinite"
//! seed = 7
//!
//! [outputs]
//! directory = "out"
//! emit_images = true
//! grid = { n = 512, extent = 8.0 }
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use num_complex::Complex64;
use oamux_core::{BasisSpec, Exposure, GridSpec, ImperfectionModel, InputPort, Superposition};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the source weights summing to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {invariant}")]
    Validation { field: String, invariant: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, invariant: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            invariant: invariant.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub basis: Vec<i64>,
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub imperfections: ImperfectionConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub port: InputPort,
    pub weight: f64,
    /// `(ℓ, re, im)` triples.
    pub terms: Vec<(i64, f64, f64)>,
    /// Recorded in reports only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImperfectionConfig {
    #[serde(default)]
    pub epsilon_rad: f64,
    #[serde(default)]
    pub delta_rad: f64,
    #[serde(default)]
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub exposure: Exposure,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            exposure: Exposure::Finite(1e5),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default)]
    pub emit_images: bool,
    #[serde(default)]
    pub grid: GridConfig,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            emit_images: false,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub extent: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        GridConfig {
            n: g.n(),
            extent: g.extent(),
        }
    }
}

impl ScenarioConfig {
    pub fn basis_spec(&self) -> BasisSpec {
        BasisSpec::new(self.basis.iter().copied()).expect("validated at parse time")
    }

    pub fn imperfection_model(&self) -> ImperfectionModel {
        let i = self.imperfections;
        ImperfectionModel::new(i.epsilon_rad, i.delta_rad, i.eta).expect("validated at parse time")
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.outputs.grid.n, self.outputs.grid.extent, 1.0).expect("validated at parse time")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Checks every cross-field invariant.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let basis = BasisSpec::new(self.basis.iter().copied())
            .map_err(|e| ConfigError::invalid("basis", format!("basis must be non-empty and distinct ({e})")))?;

        if self.sources.is_empty() {
            return Err(ConfigError::invalid("sources", "at least one source is required"));
        }
        let mut total = 0.0;
        for (k, s) in self.sources.iter().enumerate() {
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                return Err(ConfigError::invalid(
                    format!("sources[{k}].weight"),
                    "weights must be nonnegative",
                ));
            }
            total += s.weight;
            if let Some(w) = s.wavelength_nm {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(ConfigError::invalid(
                        format!("sources[{k}].wavelength_nm"),
                        "wavelength must be positive",
                    ));
                }
            }
            let mut seen = BTreeSet::new();
            for &(ell, re, im) in &s.terms {
                if !seen.insert(ell) {
                    return Err(ConfigError::invalid(
                        format!("sources[{k}].terms"),
                        format!("mode {ell} listed twice"),
                    ));
                }
                if !re.is_finite() || !im.is_finite() {
                    return Err(ConfigError::invalid(
                        format!("sources[{k}].terms"),
                        "amplitudes must be finite",
                    ));
                }
                if !basis.contains(ell) {
                    return Err(ConfigError::invalid(
                        format!("sources[{k}].terms"),
                        format!("basis must cover all source terms; mode {ell} is not in basis {basis}"),
                    ));
                }
            }
            self.source_state(k)
                .map_err(|e| ConfigError::invalid(format!("sources[{k}].terms"), e.to_string()))?;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ConfigError::invalid(
                "sources.weight",
                format!("weights must sum to 1 (got {total})"),
            ));
        }

        let i = self.imperfections;
        ImperfectionModel::new(i.epsilon_rad, i.delta_rad, i.eta)
            .map_err(|e| ConfigError::invalid("imperfections", e.to_string()))?;

        if let Exposure::Finite(n) = self.measurement.exposure {
            if !(n > 0.0 && n.is_finite()) {
                return Err(ConfigError::invalid(
                    "measurement.exposure",
                    "exposure N must be positive or \"infinite\"",
                ));
            }
        }

        GridSpec::new(self.outputs.grid.n, self.outputs.grid.extent, 1.0)
            .map_err(|e| ConfigError::invalid("outputs.grid", e.to_string()))?;
        Ok(())
    }

    /// Normalized state of source `k`.
    pub fn source_state(&self, k: usize) -> oamux_core::Result<Superposition> {
        Superposition::new(
            self.sources[k]
                .terms
                .iter()
                .map(|&(ell, re, im)| (ell, Complex64::new(re, im))),
        )
    }
}

/// Parses and validates a scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|span| line_column(text, span.start)).unwrap_or((1, 1));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let prefix = &text[..offset.min(text.len())];
    let line = prefix.matches('\n').count() + 1;
    let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
