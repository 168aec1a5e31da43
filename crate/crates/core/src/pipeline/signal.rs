//! Actuator input signals.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Step,
    /// Linear frequency sweep from `f0` to `f1` over `duration`.
    Chirp,
    /// Gaussian samples clipped at four standard deviations.
    WhiteNoise,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rectify {
    #[default]
    None,
    /// `|u|`
    Positive,
    /// `-|u|`
    Negative,
}

impl Rectify {
    fn apply(self, u: f64) -> f64 {
        match self {
            Rectify::None => u,
            Rectify::Positive => u.abs(),
            Rectify::Negative => -u.abs(),
        }
    }
}

/// Input applied to every actuator, scaled per actuator. Signals are zero
/// before `start` and after `start + duration`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSignalSpec {
    pub kind: SignalKind,
    /// One entry per actuator, N.
    pub amplitude: Vec<f64>,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "infinite")]
    pub duration: f64,
    #[serde(default)]
    pub f0: f64,
    #[serde(default)]
    pub f1: f64,
    #[serde(default = "unit")]
    pub std_dev: f64,
    /// Noise seed; the experiment seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Per actuator; empty means no rectification.
    #[serde(default)]
    pub rectify: Vec<Rectify>,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn unit() -> f64 {
    1.0
}

impl InputSignalSpec {
    pub fn step(amplitude: Vec<f64>) -> Self {
        InputSignalSpec {
            kind: SignalKind::Step,
            amplitude,
            start: 0.0,
            duration: f64::INFINITY,
            f0: 0.0,
            f1: 0.0,
            std_dev: 1.0,
            seed: None,
            rectify: Vec::new(),
        }
    }

    pub fn chirp(amplitude: Vec<f64>, f0: f64, f1: f64, duration: f64) -> Self {
        InputSignalSpec {
            kind: SignalKind::Chirp,
            duration,
            f0,
            f1,
            ..Self::step(amplitude)
        }
    }

    pub fn white_noise(amplitude: Vec<f64>, std_dev: f64, seed: u64) -> Self {
        InputSignalSpec {
            kind: SignalKind::WhiteNoise,
            std_dev,
            seed: Some(seed),
            ..Self::step(amplitude)
        }
    }

    pub fn validate(&self, actuators: usize) -> Result<()> {
        if self.amplitude.len() != actuators {
            return Err(Error::invalid(format!(
                "{} amplitudes for {} actuators",
                self.amplitude.len(),
                actuators
            )));
        }
        if !self.rectify.is_empty() && self.rectify.len() != actuators {
            return Err(Error::invalid(format!(
                "{} rectify entries for {} actuators",
                self.rectify.len(),
                actuators
            )));
        }
        if self.amplitude.iter().any(|a| !a.is_finite()) || !self.start.is_finite() {
            return Err(Error::invalid("amplitudes and start time must be finite"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::invalid("signal duration must be positive"));
        }
        match self.kind {
            SignalKind::Chirp => {
                if !self.duration.is_finite() {
                    return Err(Error::invalid("a chirp needs a finite duration"));
                }
                if !(self.f0 >= 0.0 && self.f1 >= self.f0 && self.f1.is_finite()) {
                    return Err(Error::invalid("chirp needs 0 <= f0 <= f1"));
                }
            }
            SignalKind::WhiteNoise => {
                if !(self.std_dev >= 0.0 && self.std_dev.is_finite()) {
                    return Err(Error::invalid("noise standard deviation must be non-negative"));
                }
            }
            SignalKind::Step => {}
        }
        Ok(())
    }

    fn rectifier(&self, actuator: usize) -> Rectify {
        self.rectify.get(actuator).copied().unwrap_or_default()
    }
}

/// Samples the signal at `times`: an `actuators × times` matrix.
pub fn generate_input(spec: &InputSignalSpec, times: &[f64], default_seed: u64) -> Result<DMatrix<f64>> {
    let n_a = spec.amplitude.len();
    spec.validate(n_a)?;
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("signal times must be finite and strictly increasing"));
    }
    let mut out = DMatrix::zeros(n_a, times.len());
    let active = |t: f64| t >= spec.start && t - spec.start <= spec.duration;
    match spec.kind {
        SignalKind::Step => {
            for (m, &t) in times.iter().enumerate() {
                if active(t) {
                    out.column_mut(m).fill(1.0);
                }
            }
        }
        SignalKind::Chirp => {
            let rate = (spec.f1 - spec.f0) / spec.duration;
            for (m, &t) in times.iter().enumerate() {
                if active(t) {
                    let tau = t - spec.start;
                    let phase = 2.0 * PI * (spec.f0 * tau + 0.5 * rate * tau * tau);
                    out.column_mut(m).fill(phase.sin());
                }
            }
        }
        SignalKind::WhiteNoise => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(default_seed));
            let sigma = spec.std_dev;
            let normal = Normal::new(0.0_f64, 1.0).expect("unit normal");
            for (m, &t) in times.iter().enumerate() {
                for a in 0..n_a {
                    // Drawn for every sample so the sequence does not depend on the window.
                    let x = sigma * Distribution::<f64>::sample(&normal, &mut rng).clamp(-4.0, 4.0);
                    if active(t) {
                        out[(a, m)] = x;
                    }
                }
            }
        }
    }
    for a in 0..n_a {
        let (gain, rectify) = (spec.amplitude[a], spec.rectifier(a));
        for u in out.row_mut(a).iter_mut() {
            *u = rectify.apply(gain * *u);
        }
    }
    Ok(out)
}

/// Zero-order hold of sampled inputs: column `m` applies on
/// `[times[m], times[m+1])`.
pub fn hold<'a>(samples: &'a DMatrix<f64>, times: &[f64]) -> impl Fn(f64) -> Vec<f64> + 'a {
    let times = times.to_vec();
    move |t| {
        let m = times.partition_point(|&x| x <= t).saturating_sub(1);
        samples
            .column(m.min(samples.ncols().saturating_sub(1)))
            .iter()
            .copied()
            .collect()
    }
}

/// `t,u0,u1,…`, one row per sample time.
pub fn write_input_csv<W: Write>(writer: W, times: &[f64], inputs: &DMatrix<f64>) -> Result<()> {
    if times.len() != inputs.ncols() {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: inputs.ncols(),
        });
    }
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((0..inputs.nrows()).map(|a| format!("u{a}")));
    out.write_record(&header)?;
    for (m, t) in times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(inputs.column(m).iter().map(f64::to_string));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
