//! End-to-end identification: simulate or ingest marker poses, extract
//! strain, analyse its spectra, fit and truncate a strain basis.

pub mod config;
pub mod procedure;
pub mod series;
pub mod signal;

pub use config::{BasisSpec, Config, ExperimentConfig, RobotConfig, Source};
pub use procedure::{reconstruct_backbone, run_procedure, simulate_poses, AnalysisReport};
pub use series::{extract_strain, read_strain_csv, write_strain_csv, PoseSeries};
pub use signal::{generate_input, hold, write_input_csv, InputSignalSpec, Rectify, SignalKind};
