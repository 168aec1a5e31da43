use thiserror::Error;

use crate::liealg::ScrewVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not an se(3) element (pattern deviation {deviation:.3e})")]
    NotLieAlgebraElement { deviation: f64 },

    #[error("rotation angle {angle} is at the logarithm singularity (theta = pi)")]
    SingularRotation { angle: f64 },

    #[error("singular relative rotation between markers {marker} and {next} in frame {frame}")]
    SingularRotationAt { marker: usize, next: usize, frame: usize },

    #[error("abscissa s = {s} outside [0, {length}]")]
    OutOfDomain { s: f64, length: f64 },

    #[error("actuator {actuator} has a degenerate cable tangent at s = {s}")]
    DegenerateTangent { actuator: usize, s: f64 },

    #[error("static fixed point did not converge at s = {s} (residual {residual:.3e})")]
    NoConvergence {
        s: f64,
        residual: f64,
        iterate: Box<ScrewVector>,
    },

    #[error("generalized mass matrix is ill-conditioned (condition number {condition:.3e})")]
    SingularMass { condition: f64 },

    #[error("time integration diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// `mode` is `None` when the energy is summed over all modes.
    #[error("{} carries no energy", energy_source(.mode))]
    ZeroEnergy { mode: Option<usize> },

    #[error("basis dictionary has no atoms")]
    EmptyDictionary,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(#[from] toml::de::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn energy_source(mode: &Option<usize>) -> String {
    match mode {
        Some(m) => format!("strain mode {m}"),
        None => "weighted spectrum".to_string(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularRotation { .. }
            | Error::SingularRotationAt { .. }
            | Error::DegenerateTangent { .. }
            | Error::NoConvergence { .. }
            | Error::SingularMass { .. }
            | Error::Diverged { .. }
            | Error::ZeroEnergy { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
