//! Runs a configured scenario and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use oamux_core::render::to_pgm;
use oamux_core::{
    incoherent_mix, pure_density, purity, render_state, run_tomography, BasisMatrix, DensityMatrix, Duplexer, Exposure,
    GridSpec, InputPort, Intensity, PortOutput, Source,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ImperfectionConfig, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Duplexer plus ideal state.
    Simulate,
    /// Simulate, then measure and reconstruct the bright port.
    Tomography,
    /// Port images only.
    Render,
}

impl Pipeline {
    fn name(self) -> &'static str {
        match self {
            Pipeline::Simulate => "simulate",
            Pipeline::Tomography => "tomography",
            Pipeline::Render => "render",
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] oamux_core::Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Machine-readable failure written to stderr by the binary.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant: Option<String>,
}

impl From<&ScenarioError> for ErrorRecord {
    fn from(e: &ScenarioError) -> Self {
        let mut rec = ErrorRecord {
            kind: "",
            message: e.to_string(),
            line: None,
            column: None,
            field: None,
            invariant: None,
        };
        match e {
            ScenarioError::Config(ConfigError::Syntax { line, column, .. }) => {
                rec.kind = "syntax_error";
                rec.line = Some(*line);
                rec.column = Some(*column);
            }
            ScenarioError::Config(ConfigError::Validation { field, invariant }) => {
                rec.kind = "validation_error";
                rec.field = Some(field.clone());
                rec.invariant = Some(invariant.clone());
            }
            ScenarioError::Model(_) => rec.kind = "model_error",
            ScenarioError::Io { .. } => rec.kind = "io_error",
            ScenarioError::Parse { .. } => rec.kind = "parse_error",
        }
        rec
    }
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub exact: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(dir) = &self.out_dir {
            cfg.outputs.directory = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.measurement.seed = seed;
        }
        if self.exact {
            cfg.measurement.exposure = Exposure::Infinite;
        }
    }
}

#[derive(Debug, Serialize)]
struct SourceSummary {
    port: InputPort,
    weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wavelength_nm: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TomographySummary {
    exposure: Exposure,
    seed: u64,
    fidelity: f64,
    fidelity_squared: f64,
    purity_reconstructed: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    pipeline: &'static str,
    basis: Vec<i64>,
    sources: Vec<SourceSummary>,
    imperfections: ImperfectionConfig,
    bright_weight: f64,
    dark_weight: f64,
    dark_bright_ratio: Option<f64>,
    purity_ideal: f64,
    purity_bright: Option<f64>,
    purity_dark: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tomography: Option<TomographySummary>,
    files: Vec<String>,
}

/// What a run produced, for callers that want more than the files.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub ideal: DensityMatrix,
    pub ports: PortOutput,
    pub fidelity: Option<f64>,
    pub files: Vec<PathBuf>,
}

/// Weighted incoherent mixture of the configured sources.
pub fn ideal_state(cfg: &ScenarioConfig) -> Result<DensityMatrix, ScenarioError> {
    let states = source_densities(cfg)?;
    let parts: Vec<(f64, &DensityMatrix)> = cfg.sources.iter().map(|s| s.weight).zip(states.iter()).collect();
    Ok(incoherent_mix(&parts)?)
}

fn source_densities(cfg: &ScenarioConfig) -> Result<Vec<DensityMatrix>, ScenarioError> {
    let basis = cfg.basis_spec();
    (0..cfg.sources.len())
        .map(|k| Ok(pure_density(&cfg.source_state(k)?, &basis)?))
        .collect()
}

/// Bright and dark port states for the configured sources and imperfections.
pub fn simulate_ports(cfg: &ScenarioConfig) -> Result<PortOutput, ScenarioError> {
    let states = source_densities(cfg)?;
    let sources: Vec<Source<'_>> = cfg
        .sources
        .iter()
        .zip(states.iter())
        .map(|(s, state)| Source {
            port: s.port,
            weight: s.weight,
            state,
        })
        .collect();
    Ok(Duplexer::with_imperfections(&cfg.imperfection_model())?.run(&sources)?)
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, ScenarioError> {
        fs::create_dir_all(dir).map_err(|e| ScenarioError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<(), ScenarioError> {
        let path = self.dir.join(name);
        fs::write(&path, data).map_err(|e| ScenarioError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), ScenarioError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    fn names(&self) -> Vec<String> {
        self.files
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect()
    }
}

/// Interchange object for a port; an empty port is written as the zero matrix.
fn port_record(state: &Option<DensityMatrix>, cfg: &ScenarioConfig) -> BasisMatrix {
    match state {
        Some(rho) => rho.as_basis_matrix(),
        None => {
            let d = cfg.basis.len();
            BasisMatrix::new(cfg.basis_spec(), oamux_core::linalg::CMatrix::zeros(d, d))
                .expect("zero matrix matches basis")
        }
    }
}

fn render_port(state: &Option<DensityMatrix>, grid: &GridSpec) -> Intensity {
    match state {
        Some(rho) => render_state(rho, grid),
        None => Intensity::zeros(*grid),
    }
}

/// Runs `pipeline` for a validated config, writing into `cfg.outputs.directory`.
pub fn run_scenario(cfg: &ScenarioConfig, pipeline: Pipeline) -> Result<RunSummary, ScenarioError> {
    cfg.validate()?;
    let ideal = ideal_state(cfg)?;
    let ports = simulate_ports(cfg)?;
    let mut out = Writer::new(&cfg.outputs.directory)?;

    if pipeline != Pipeline::Render {
        out.json("ideal_rho.json", &ideal)?;
        out.json("bright_rho.json", &port_record(&ports.bright, cfg))?;
        out.json("dark_rho.json", &port_record(&ports.dark, cfg))?;
    }

    let mut tomography = None;
    let mut fidelity = None;
    if pipeline == Pipeline::Tomography {
        let bright = ports.bright.as_ref().ok_or(oamux_core::Error::BrightPortEmpty)?;
        let result = run_tomography(bright, cfg.measurement.exposure, cfg.measurement.seed, &ideal)?;
        if !result.records.is_empty() {
            out.json("counts.json", &result.records)?;
        }
        out.json("reconstructed_rho.json", &result.rho_physical)?;
        out.json("tomography.json", &result)?;
        fidelity = Some(result.fidelity);
        tomography = Some(TomographySummary {
            exposure: result.exposure,
            seed: result.seed,
            fidelity: result.fidelity,
            fidelity_squared: result.fidelity_squared,
            purity_reconstructed: purity(&result.rho_physical),
        });
    }

    if pipeline == Pipeline::Render || cfg.outputs.emit_images {
        let grid = cfg.grid_spec();
        out.bytes("bright.pgm", &to_pgm(&render_port(&ports.bright, &grid)))?;
        out.bytes("dark.pgm", &to_pgm(&render_port(&ports.dark, &grid)))?;
    }

    if pipeline != Pipeline::Render {
        let mut files = out.names();
        files.push("report.json".into());
        let report = Report {
            name: cfg.name.clone(),
            pipeline: pipeline.name(),
            basis: cfg.basis.clone(),
            sources: cfg
                .sources
                .iter()
                .map(|s| SourceSummary {
                    port: s.port,
                    weight: s.weight,
                    wavelength_nm: s.wavelength_nm,
                })
                .collect(),
            imperfections: cfg.imperfections,
            bright_weight: ports.bright_weight,
            dark_weight: ports.dark_weight,
            dark_bright_ratio: ports.dark_port_ratio().ok(),
            purity_ideal: purity(&ideal),
            purity_bright: ports.bright.as_ref().map(purity),
            purity_dark: ports.dark.as_ref().map(purity),
            tomography,
            files,
        };
        out.json("report.json", &report)?;
    }

    Ok(RunSummary {
        ideal,
        ports,
        fidelity,
        files: out.files,
    })
}

/// Reads an interchange file as a density matrix.
pub fn read_density(path: &Path) -> Result<DensityMatrix, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Debug, Serialize)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub fidelity_squared: f64,
}

pub fn compare_files(target: &Path, measured: &Path) -> Result<FidelityReport, ScenarioError> {
    let a = read_density(target)?;
    let b = read_density(measured)?;
    let f = oamux_core::fidelity(&a, &b)?;
    Ok(FidelityReport {
        fidelity: f,
        fidelity_squared: f * f,
    })
}
