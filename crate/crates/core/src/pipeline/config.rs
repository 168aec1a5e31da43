//! Robot and experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::signal::InputSignalSpec;
use crate::error::{Error, Result};
use crate::fitting::BpdConfig;
use crate::gvs::basis::{Atom, BasisDictionary};
use crate::liealg::ScrewVector;
use crate::rodmodel::{ActuatorRouting, RodProperties};

/// Atom families applied to a set of strain modes, plus explicit atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    /// Monomials of degree 0..=order.
    #[serde(default)]
    pub polynomial: Option<u32>,
    /// Cosines 0..=order and sines 1..=order; the constant cosine is
    /// skipped when monomials are present.
    #[serde(default)]
    pub fourier: Option<u32>,
    #[serde(default)]
    pub gaussian: Option<u32>,
    /// Modes `[kx, ky, kz, sx, sy, sz]` that receive the families.
    #[serde(default = "all_modes")]
    pub modes: [bool; 6],
    #[serde(default)]
    pub atoms: Vec<ModeAtom>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAtom {
    pub mode: usize,
    pub atom: Atom,
}

fn all_modes() -> [bool; 6] {
    [true; 6]
}

impl BasisSpec {
    pub fn polynomial(order: u32) -> Self {
        BasisSpec {
            polynomial: Some(order),
            fourier: None,
            gaussian: None,
            modes: all_modes(),
            atoms: Vec::new(),
        }
    }

    pub fn build(&self, length: f64) -> Result<BasisDictionary> {
        let mut family = Vec::new();
        if let Some(order) = self.polynomial {
            family.extend(Atom::polynomials(order));
        }
        if let Some(order) = self.fourier {
            let skip = usize::from(self.polynomial.is_some());
            family.extend(Atom::fourier(order).into_iter().skip(skip));
        }
        if let Some(order) = self.gaussian {
            family.extend(Atom::gaussians(order));
        }
        let mut dict = BasisDictionary::new(length)?;
        for (mode, on) in self.modes.iter().enumerate() {
            if *on {
                dict.set_mode(mode, family.clone())?;
            }
        }
        for extra in &self.atoms {
            dict.push(extra.mode, extra.atom.clone())?;
        }
        if dict.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        Ok(dict)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub rod: RodProperties,
    #[serde(default)]
    pub actuators: Vec<ActuatorRouting>,
    /// Gravitational acceleration in the base frame, m/s².
    #[serde(default)]
    pub gravity: [f64; 3],
    /// Strain basis of the simulation model.
    pub dynamics_basis: BasisSpec,
    /// Dictionary the measured strain is fitted on.
    pub fit_basis: BasisSpec,
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        self.rod.validate()?;
        for a in &self.actuators {
            a.validate(&self.rod)?;
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("gravity must be finite"));
        }
        self.dynamics_basis.build(self.rod.length)?;
        self.fit_basis.build(self.rod.length)?;
        Ok(())
    }

    /// `[0, 0, 0, g]`
    pub fn gravity_twist(&self) -> ScrewVector {
        let [x, y, z] = self.gravity;
        ScrewVector::new([0.0, 0.0, 0.0, x, y, z])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Marker spacing, m.
    pub lambda_s: f64,
    /// Markers including the one at the base.
    pub markers: usize,
    /// Frame interval, s.
    pub t_s: f64,
    pub frames: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// RK4 step, s; must divide the frame interval.
    pub dt: f64,
    pub quadrature_points: usize,
    /// FK integration steps per marker interval.
    pub substeps: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: 2e-4,
            quadrature_points: 100,
            substeps: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// Generate the trajectory with the GVS model.
    Simulate,
    /// Read marker poses from a CSV file.
    Poses { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraConfig {
    pub zero_pad: usize,
    pub time_zero_pad: usize,
    /// Bins kept by the truncation index; half the samples when absent.
    pub n_max: Option<usize>,
    /// Share of the weighted deformation energy below `k_max`.
    pub kmax_energy: f64,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        SpectraConfig {
            zero_pad: crate::spectra::DEFAULT_ZERO_PAD,
            time_zero_pad: 1,
            n_max: None,
            kmax_energy: 0.99,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    #[serde(flatten)]
    pub bpd: BpdConfig,
    /// Frames per warm-start chain; one chain when absent.
    pub block: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub thresholds: Vec<f64>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            thresholds: vec![0.01, 0.05],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default = "simulate")]
    pub source: Source,
    pub signal: InputSignalSpec,
    #[serde(default)]
    pub spectra: SpectraConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
}

fn simulate() -> Source {
    Source::Simulate
}

impl ExperimentConfig {
    pub fn validate(&self, robot: &RobotConfig) -> Result<()> {
        let s = &self.sampling;
        if !(s.lambda_s > 0.0 && s.lambda_s.is_finite()) {
            return Err(Error::invalid("lambda_s must be positive"));
        }
        if s.markers < 3 {
            return Err(Error::invalid("need at least three markers"));
        }
        if (s.markers - 1) as f64 * s.lambda_s > robot.rod.length * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "{} markers at {} m do not fit on a {} m rod",
                s.markers, s.lambda_s, robot.rod.length
            )));
        }
        if !(s.t_s > 0.0 && s.t_s.is_finite()) {
            return Err(Error::invalid("T_s must be positive"));
        }
        if s.frames == 0 {
            return Err(Error::invalid("need at least one frame"));
        }
        let sim = &self.simulation;
        if !(sim.dt > 0.0 && sim.dt <= s.t_s) {
            return Err(Error::invalid("simulation dt must be positive and at most T_s"));
        }
        let ratio = s.t_s / sim.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::invalid("simulation dt must divide T_s"));
        }
        if sim.quadrature_points == 0 || sim.substeps == 0 {
            return Err(Error::invalid("quadrature points and substeps must be positive"));
        }
        self.signal.validate(robot.actuators.len())?;
        let sp = &self.spectra;
        if sp.zero_pad == 0 || sp.time_zero_pad == 0 {
            return Err(Error::invalid("zero-padding factors must be at least 1"));
        }
        if !(sp.kmax_energy > 0.0 && sp.kmax_energy <= 1.0) {
            return Err(Error::invalid("kmax_energy must lie in (0, 1]"));
        }
        if let Some(n) = sp.n_max {
            if n == 0 || n >= s.markers - 1 {
                return Err(Error::invalid(format!("n_max must lie in [1, {})", s.markers - 1)));
            }
        }
        let fit_dict = robot.fit_basis.build(robot.rod.length)?;
        self.fit.bpd.validate(fit_dict.n_q())?;
        if self.fit.block == Some(0) {
            return Err(Error::invalid("warm-start block must be positive"));
        }
        if let Some(t) = self.truncation.thresholds.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::invalid(format!("truncation threshold {t} outside [0, 1)")));
        }
        Ok(())
    }

    /// Frame times `m·T_s`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.sampling.frames)
            .map(|m| m as f64 * self.sampling.t_s)
            .collect()
    }
}

/// A robot and an experiment in one file, as `[robot]` and `[experiment]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub robot: RobotConfig,
    pub experiment: ExperimentConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut config = Self::from_toml(&std::fs::read_to_string(path)?)?;
        // Relative pose paths are relative to the config file.
        if let Source::Poses { path: p } = &mut config.experiment.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.experiment.validate(&self.robot)
    }

    /// Replaces every seed with `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.experiment.seed = seed;
        self.experiment.signal.seed = None;
        self
    }
}
