use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while constructing grids, kernels and model parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetupError {
    #[error("domain extents must be positive (got lx={lx}, ly={ly})")]
    NonPositiveExtent { lx: f64, ly: f64 },
    #[error("grid needs at least 3 cells per axis (got nx={nx}, ny={ny})")]
    TooFewCells { nx: usize, ny: usize },
    #[error("field has {got} values, grid expects {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("field contains a non-finite value at cell {index}")]
    NonFinite { index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("the five-point Laplacian needs square cells (hx={hx}, hy={hy})")]
    NonSquareCells { hx: f64, hy: f64 },
    #[error("kernel sigma must be positive (got {0})")]
    NonPositiveSigma(f64),
    #[error("kernel cutoff must be at least one sigma (got {0} radii)")]
    CutoffTooSmall(f64),
    #[error("kernel radius {radius} exceeds the smallest domain extent {extent}")]
    StencilWiderThanDomain { radius: f64, extent: f64 },
    #[error("stencil weights must be finite and nonnegative (offset ({dx}, {dy}) has {weight})")]
    BadStencilWeight { dx: isize, dy: isize, weight: f64 },
    #[error("stencil is not symmetric at offset ({dx}, {dy})")]
    AsymmetricStencil { dx: isize, dy: isize },
    #[error("advection speed must be nonnegative (got {0})")]
    NegativeSpeed(f64),
    #[error("invalid parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("nonlocal mode requires a kernel, local mode must not receive one")]
    KernelModeMismatch,
    #[error("invalid step control: {0}")]
    InvalidControl(String),
}

/// Which monitored invariant a time step broke.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative {
        field: &'static str,
        cell: (usize, usize),
        value: f64,
    },
    SupBound {
        cell: (usize, usize),
        value: f64,
        bound: f64,
    },
    NonFinite {
        field: &'static str,
        cell: (usize, usize),
    },
    GridMismatch,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Negative { field, cell, value } => write!(
                f,
                "{field} went negative ({value:e}) at cell {cell:?}; dt is too large"
            ),
            Violation::SupBound { cell, value, bound } => write!(
                f,
                "water sup bound broken at cell {cell:?}: {value} > {bound}"
            ),
            Violation::NonFinite { field, cell } => {
                write!(f, "{field} became non-finite at cell {cell:?}")
            }
            Violation::GridMismatch => f.write_str("state does not live on the integrator grid"),
        }
    }
}

/// A rejected time step, tagged with the step that produced it.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("step {step_index} (t={t}): {violation}")]
pub struct StepFailure {
    pub step_index: u64,
    pub t: f64,
    pub violation: Violation,
}

/// Configuration parse and validation errors, anchored to a line of the document.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

/// Top-level error for the orchestration layer. Each variant maps to a process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("setup error: {0}")]
    Setup(#[from] SetupError),
    #[error("numerical invariant violated: {0}")]
    Numerical(#[from] StepFailure),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Setup(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io { .. } | Error::Format { .. } => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
