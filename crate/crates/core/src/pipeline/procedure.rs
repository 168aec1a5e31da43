//! The identification procedure from actuator input to truncated fit.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::{Config, ExperimentConfig, RobotConfig, Source};
use super::series::{extract_strain, write_strain_csv, PoseSeries};
use super::signal::{generate_input, hold, write_input_csv};
use crate::error::{Error, Result};
use crate::fitting::{
    backbone_errors, fit_series, mean_energy_fractions, truncate_bases, write_fits_csv, FitDesign, FitResult,
};
use crate::gvs::{forward_kinematics, BasisDictionary, GvsModel, MODE_NAMES};
use crate::liealg::{Pose, ScrewVector};
use crate::rodmodel::RodProperties;
use crate::spectra::{
    dsft, dstft, mean_stiffness_diagonal, min_segments, truncation_index, weighted_truncation, Spectrum, StrainGrid,
};

/// Parseval and symmetry tolerance applied before spectra are written.
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;
/// Deformation below this share of the strain amplitude counts as none.
const DEFORMATION_FLOOR: f64 = 1e-12;

/// Poses of `B` along the rod at `markers` spacing `λ_s`, integrated with
/// `substeps` steps per marker interval.
pub fn reconstruct_backbone(
    dict: &BasisDictionary,
    q: &DVector<f64>,
    rod: &RodProperties,
    markers: usize,
    lambda_s: f64,
    substeps: usize,
) -> Result<Vec<Pose>> {
    if markers == 0 || substeps == 0 {
        return Err(Error::invalid("need at least one marker and one substep"));
    }
    let steps = (markers - 1) * substeps;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| (k as f64 * lambda_s / substeps as f64).min(rod.length))
        .collect();
    let poses = forward_kinematics(dict, q, rod, &grid)?;
    Ok(poses.into_iter().step_by(substeps).collect())
}

/// Simulated actuator inputs (actuators × frames) and marker poses.
pub fn simulate_poses(robot: &RobotConfig, experiment: &ExperimentConfig) -> Result<(DMatrix<f64>, PoseSeries)> {
    let sampling = &experiment.sampling;
    let sim = &experiment.simulation;
    let times = experiment.times();
    let inputs = generate_input(&experiment.signal, &times, experiment.seed)?;
    let dict = robot.dynamics_basis.build(robot.rod.length)?;
    let model = GvsModel::with_quadrature(
        dict.clone(),
        robot.rod.clone(),
        robot.actuators.clone(),
        robot.gravity_twist(),
        sim.quadrature_points,
    )?;
    let n_q = model.n_q();
    let q = if sampling.frames > 1 {
        let every = (sampling.t_s / sim.dt).round() as usize;
        let t_final = (sampling.frames - 1) as f64 * sampling.t_s;
        let zero = DVector::zeros(n_q);
        model
            .simulate(&zero, &zero, hold(&inputs, &times), t_final, sim.dt, every)?
            .q
    } else {
        vec![DVector::zeros(n_q)]
    };
    let frames = q
        .iter()
        .map(|qm| reconstruct_backbone(&dict, qm, &robot.rod, sampling.markers, sampling.lambda_s, sim.substeps))
        .collect::<Result<Vec<_>>>()?;
    Ok((inputs, PoseSeries::new(frames, sampling.lambda_s, sampling.t_s)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub frames: usize,
    pub markers: usize,
    pub lambda_s: f64,
    pub t_s: f64,
    pub rod_length: f64,
    pub spectra: SpectraReport,
    pub fit: FitReport,
    pub truncation: Vec<TruncationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectraReport {
    pub n_max: usize,
    /// Per strain mode; absent for modes without energy.
    pub truncation_index: [Option<f64>; 6],
    /// Over the stiffness-weighted deformation `ξ − ξ*`.
    pub weighted_truncation_index: Option<f64>,
    /// Smallest wavenumber below which the configured share of the
    /// weighted deformation energy lies, rad/m.
    pub k_max: f64,
    pub lambda_max: Option<f64>,
    pub recommended_segments: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BackboneReport {
    pub max_position_error: f64,
    pub max_orientation_error: f64,
    pub max_tip_position_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomReport {
    pub atom_id: usize,
    pub mode: &'static str,
    pub label: String,
    pub mean_energy_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub n_q: usize,
    pub converged_frames: usize,
    pub underdetermined: bool,
    pub max_iterations: usize,
    pub mean_residual_norm: f64,
    pub backbone: BackboneReport,
    /// Sorted by decreasing mean energy fraction.
    pub atoms: Vec<AtomReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationReport {
    pub threshold: f64,
    pub kept_atoms: usize,
    pub eliminated_atoms: usize,
    pub mean_residual_norm: f64,
    pub backbone: BackboneReport,
}

/// `ξ − ξ*(s)` on the same grid.
fn deformation_grid(grid: &StrainGrid, rod: &RodProperties) -> Result<StrainGrid> {
    let s = grid.abscissae();
    let rest: Vec<ScrewVector> = s.iter().map(|&sn| rod.stress_free(sn.min(rod.length))).collect();
    let samples = (0..grid.frames())
        .flat_map(|m| (0..grid.points()).map(move |n| (m, n)))
        .map(|(m, n)| grid.sample(m, n) - rest[n])
        .collect();
    StrainGrid::from_flat(
        samples,
        grid.frames(),
        grid.points(),
        grid.lambda_s(),
        grid.t_s(),
        grid.length(),
    )?
    .with_abscissa_offset(grid.abscissa_offset())
}

fn spectrum_of(grid: &StrainGrid, zero_pad: (usize, usize)) -> Result<Spectrum> {
    if grid.frames() > 1 {
        dstft(grid, zero_pad)
    } else {
        dsft(grid, 0, zero_pad.0)
    }
}

/// Smallest bin wavenumber below which `share` of the one-sided weighted
/// energy lies; 0 without energy.
fn k_max(spectrum: &Spectrum, weights: &[f64; 6], lambda_s: f64, share: f64) -> f64 {
    let n = spectrum.points();
    let energy = |b: usize| weighted_energy(spectrum, weights, b);
    let one_sided: Vec<f64> = (0..=n / 2)
        .map(|b| {
            if b == 0 || 2 * b == n {
                energy(b)
            } else {
                energy(b) + energy(n - b)
            }
        })
        .collect();
    let total: f64 = one_sided.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let mut acc = 0.0;
    for (b, e) in one_sided.iter().enumerate() {
        acc += e;
        if acc >= share * total {
            return 2.0 * PI * b as f64 / (n as f64 * lambda_s);
        }
    }
    PI / lambda_s
}

fn weighted_energy(spectrum: &Spectrum, weights: &[f64; 6], bin: usize) -> f64 {
    (0..6).map(|i| weights[i] * spectrum.bin_energy(i, bin)).sum()
}

fn total_energy(spectrum: &Spectrum, weights: &[f64; 6]) -> f64 {
    (0..spectrum.points())
        .map(|b| weighted_energy(spectrum, weights, b))
        .sum()
}

fn optional(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::ZeroEnergy { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

struct Backbones {
    summary: BackboneReport,
    rows: Vec<(usize, usize, f64, f64)>,
}

fn compare_backbones(design: &FitDesign, fits: &[FitResult], poses: &PoseSeries, substeps: usize) -> Result<Backbones> {
    let mut rows = Vec::new();
    let mut summary = BackboneReport {
        max_position_error: 0.0,
        max_orientation_error: 0.0,
        max_tip_position_error: 0.0,
    };
    let tip = poses.markers() - 1;
    for (m, fit) in fits.iter().enumerate() {
        let rebuilt = reconstruct_backbone(
            design.dictionary(),
            &fit.q,
            design.rod(),
            poses.markers(),
            poses.lambda_s(),
            substeps,
        )?;
        for (n, (dp, dr)) in backbone_errors(&rebuilt, poses.frame(m))?.into_iter().enumerate() {
            summary.max_position_error = summary.max_position_error.max(dp);
            summary.max_orientation_error = summary.max_orientation_error.max(dr);
            if n == tip {
                summary.max_tip_position_error = summary.max_tip_position_error.max(dp);
            }
            rows.push((m, n, dp, dr));
        }
    }
    Ok(Backbones { summary, rows })
}

fn mean_residual(fits: &[FitResult]) -> f64 {
    fits.iter().map(|f| f.residual_norm).sum::<f64>() / fits.len() as f64
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn threshold_tag(threshold: f64) -> String {
    format!("truncated_{threshold}")
}

/// Runs the whole procedure and writes its artifacts to `out_dir`:
/// `input.csv` (simulated runs only), `poses.csv`, `strain.csv`, `sft.csv`
/// (last frame), `stft.csv` (two or more frames), `fit.csv`,
/// `fit_truncated_<threshold>.csv`, `backbone_errors.csv` and
/// `summary.json`. Errors carry the name of the failing stage.
pub fn run_procedure(config: &Config, out_dir: &Path) -> Result<AnalysisReport> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let (robot, experiment) = (&config.robot, &config.experiment);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::from(e).in_stage("write"))?;
    let write = |e: Error| e.in_stage("write");

    let (inputs, poses) = match &experiment.source {
        Source::Simulate => {
            let (u, p) = simulate_poses(robot, experiment).map_err(|e| e.in_stage("simulate"))?;
            (Some(u), p)
        }
        Source::Poses { path } => {
            let read = || -> Result<PoseSeries> {
                PoseSeries::read_csv(File::open(path)?, experiment.sampling.lambda_s, experiment.sampling.t_s)
            };
            let p = read().map_err(|e| e.in_stage("ingest"))?;
            if p.markers() < 3 || (p.markers() - 1) as f64 * p.lambda_s() > robot.rod.length * (1.0 + 1e-9) {
                return Err(Error::invalid("pose markers do not fit on the rod").in_stage("ingest"));
            }
            (None, p)
        }
    };
    if let Some(u) = &inputs {
        write_input_csv(create(out_dir, "input.csv").map_err(write)?, &poses.times(), u).map_err(write)?;
    }
    poses
        .write_csv(create(out_dir, "poses.csv").map_err(write)?)
        .map_err(write)?;

    let strain = extract_strain(&poses).map_err(|e| e.in_stage("extract"))?;
    write_strain_csv(&strain, create(out_dir, "strain.csv").map_err(write)?).map_err(write)?;

    let spectra = analyze_spectra(robot, experiment, &strain, out_dir).map_err(|e| e.in_stage("spectra"))?;

    let s_grid = strain.abscissae();
    let fit_dict = robot.fit_basis.build(robot.rod.length).map_err(|e| e.in_stage("fit"))?;
    let design = FitDesign::new(&fit_dict, &robot.rod, &s_grid).map_err(|e| e.in_stage("fit"))?;
    let frames: Vec<&[ScrewVector]> = (0..strain.frames()).map(|m| strain.frame(m)).collect();
    let fits =
        fit_series(&design, &frames, &experiment.fit.bpd, experiment.fit.block).map_err(|e| e.in_stage("fit"))?;
    let times = poses.times();
    write_fits_csv(create(out_dir, "fit.csv").map_err(write)?, &times, &fits, &fit_dict).map_err(write)?;

    let substeps = experiment.simulation.substeps;
    let full = compare_backbones(&design, &fits, &poses, substeps).map_err(|e| e.in_stage("reconstruct"))?;
    let mean = mean_energy_fractions(&fits, &fit_dict);
    let mut atoms: Vec<AtomReport> = fit_dict
        .columns()
        .enumerate()
        .map(|(c, (mode, atom))| AtomReport {
            atom_id: c,
            mode: MODE_NAMES[mode],
            label: atom.label(),
            mean_energy_fraction: mean[c],
        })
        .collect();
    atoms.sort_by(|a, b| b.mean_energy_fraction.total_cmp(&a.mean_energy_fraction));

    let mut error_rows = vec![("bpd".to_string(), full.rows)];
    let mut truncation = Vec::new();
    for &threshold in &experiment.truncation.thresholds {
        let cut = truncate_bases(&design, &frames, &fits, threshold).map_err(|e| e.in_stage("truncate"))?;
        let tag = threshold_tag(threshold);
        write_fits_csv(
            create(out_dir, &format!("fit_{tag}.csv")).map_err(write)?,
            &times,
            &cut,
            &fit_dict,
        )
        .map_err(write)?;
        let rebuilt = compare_backbones(&design, &cut, &poses, substeps).map_err(|e| e.in_stage("reconstruct"))?;
        let kept = cut.first().map_or(0, |f| f.kept.iter().filter(|k| **k).count());
        truncation.push(TruncationReport {
            threshold,
            kept_atoms: kept,
            eliminated_atoms: fit_dict.n_q() - kept,
            mean_residual_norm: mean_residual(&cut),
            backbone: rebuilt.summary,
        });
        error_rows.push((tag, rebuilt.rows));
    }
    write_backbone_errors(out_dir, &times, poses.lambda_s(), &error_rows).map_err(write)?;

    let report = AnalysisReport {
        frames: poses.frames(),
        markers: poses.markers(),
        lambda_s: poses.lambda_s(),
        t_s: poses.t_s(),
        rod_length: robot.rod.length,
        spectra,
        fit: FitReport {
            n_q: fit_dict.n_q(),
            converged_frames: fits.iter().filter(|f| f.converged).count(),
            underdetermined: fits.iter().any(|f| f.underdetermined),
            max_iterations: fits.iter().map(|f| f.iterations).max().unwrap_or(0),
            mean_residual_norm: mean_residual(&fits),
            backbone: full.summary,
            atoms,
        },
        truncation,
    };
    let mut out = create(out_dir, "summary.json").map_err(write)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Error::from(e).in_stage("write"))?;
    writeln!(out).map_err(|e| Error::from(e).in_stage("write"))?;
    out.flush().map_err(|e| Error::from(e).in_stage("write"))?;
    Ok(report)
}

fn analyze_spectra(
    robot: &RobotConfig,
    experiment: &ExperimentConfig,
    strain: &StrainGrid,
    out_dir: &Path,
) -> Result<SpectraReport> {
    let cfg = &experiment.spectra;
    let last = dsft(strain, strain.frames() - 1, cfg.zero_pad)?;
    last.check_invariants(SPECTRUM_TOLERANCE)?;
    last.write_csv(create(out_dir, "sft.csv")?, true)?;
    if strain.frames() > 1 {
        let stft = dstft(strain, (cfg.zero_pad, cfg.time_zero_pad))?;
        stft.check_invariants(SPECTRUM_TOLERANCE)?;
        stft.write_csv(create(out_dir, "stft.csv")?, true)?;
    }

    let n = strain.points();
    let n_max = cfg.n_max.unwrap_or(n / 2).clamp(1, n - 1);
    let raw = spectrum_of(strain, (1, 1))?;
    let mut index = [None; 6];
    for (mode, slot) in index.iter_mut().enumerate() {
        *slot = optional(truncation_index(&raw, mode, n_max))?;
    }
    let weights = mean_stiffness_diagonal(&robot.rod)?;
    let deformation = spectrum_of(&deformation_grid(strain, &robot.rod)?, (1, 1))?;
    let floor = DEFORMATION_FLOOR * DEFORMATION_FLOOR * total_energy(&raw, &weights);
    let (weighted, k) = if total_energy(&deformation, &weights) > floor {
        (
            optional(weighted_truncation(&deformation, &weights, n_max))?,
            k_max(&deformation, &weights, strain.lambda_s(), cfg.kmax_energy),
        )
    } else {
        (None, 0.0)
    };
    let lambda_max = (k > 0.0).then(|| 2.0 * PI / k);
    let segments = match lambda_max {
        Some(l) => min_segments(l, robot.rod.length)?,
        None => 1,
    };
    Ok(SpectraReport {
        n_max,
        truncation_index: index,
        weighted_truncation_index: weighted,
        k_max: k,
        lambda_max,
        recommended_segments: segments,
    })
}

type ErrorRows = Vec<(usize, usize, f64, f64)>;

fn write_backbone_errors(dir: &Path, times: &[f64], lambda_s: f64, rows: &[(String, ErrorRows)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(create(dir, "backbone_errors.csv")?);
    out.write_record(["fit", "t", "n", "s", "position_error", "orientation_error"])?;
    for (tag, list) in rows {
        for &(m, n, dp, dr) in list {
            out.write_record([
                tag.clone(),
                times[m].to_string(),
                n.to_string(),
                (n as f64 * lambda_s).to_string(),
                dp.to_string(),
                dr.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvs::uniform_grid;
    use crate::pipeline::config::{
        BasisSpec, FitConfig, SamplingConfig, SimulationConfig, SpectraConfig, TruncationConfig,
    };
    use crate::pipeline::series::read_strain_csv;
    use crate::pipeline::signal::InputSignalSpec;
    use crate::rodmodel::ActuatorRouting;

    pub(crate) fn small_config(frames: usize, amplitude: f64) -> Config {
        let rod = RodProperties::desk_cylinder();
        Config {
            robot: RobotConfig {
                actuators: vec![
                    ActuatorRouting::longitudinal(0.05, 0.0),
                    ActuatorRouting::helicoidal(0.07, 0.0, 1.0),
                ],
                gravity: [0.0; 3],
                dynamics_basis: BasisSpec::polynomial(1),
                fit_basis: BasisSpec::polynomial(2),
                rod,
            },
            experiment: ExperimentConfig {
                seed: 3,
                sampling: SamplingConfig {
                    lambda_s: 0.1,
                    markers: 11,
                    t_s: 0.01,
                    frames,
                },
                simulation: SimulationConfig {
                    dt: 2e-4,
                    quadrature_points: 40,
                    substeps: 4,
                },
                source: Source::Simulate,
                signal: InputSignalSpec::step(vec![amplitude, 0.5 * amplitude]),
                spectra: SpectraConfig::default(),
                fit: FitConfig::default(),
                truncation: TruncationConfig::default(),
            },
        }
    }

    fn read(dir: &Path, name: &str) -> Vec<u8> {
        std::fs::read(dir.join(name)).unwrap()
    }

    #[test]
    fn backbone_matches_direct_kinematics() {
        let rod = RodProperties::desk_cylinder();
        let dict = BasisDictionary::polynomial(rod.length, 1).unwrap();
        let q = DVector::from_fn(dict.n_q(), |i, _| 0.1 * (i as f64 + 1.0).sin());
        let markers = reconstruct_backbone(&dict, &q, &rod, 5, 0.25, 8).unwrap();
        let direct = forward_kinematics(&dict, &q, &rod, &uniform_grid(1.0, 32)).unwrap();
        for (n, g) in markers.iter().enumerate() {
            assert_eq!(*g, direct[8 * n]);
        }
    }

    #[test]
    fn step_run_writes_artifacts_and_recommendation() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(6, 0.5);
        let report = run_procedure(&config, dir.path()).unwrap();
        for name in [
            "input.csv",
            "poses.csv",
            "strain.csv",
            "sft.csv",
            "stft.csv",
            "fit.csv",
            "fit_truncated_0.01.csv",
            "fit_truncated_0.05.csv",
            "backbone_errors.csv",
            "summary.json",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        assert_eq!(report.frames, 6);
        assert!(report.spectra.k_max > 0.0);
        assert!(report.spectra.recommended_segments >= 1);
        assert_eq!(report.fit.converged_frames, 6);
        assert_eq!(report.truncation.len(), 2);
        assert!(report.truncation[0].kept_atoms >= report.truncation[1].kept_atoms);
        let strain = read_strain_csv(&read(dir.path(), "strain.csv")[..], 0.1, 0.01, 1.0).unwrap();
        assert_eq!(strain.points(), 10);
        assert!((strain.abscissae()[0] - 0.05).abs() < 1e-15);
        // Bending under a longitudinal tendon shows up in the curvature.
        assert!(strain.sample(5, 0).0.fixed_rows::<3>(0).norm() > 1e-4);
    }

    #[test]
    fn pose_csv_source_reproduces_artifacts() {
        let base = tempfile::tempdir().unwrap();
        let config = small_config(4, 1.0);
        run_procedure(&config, &base.path().join("sim")).unwrap();
        let mut ingest = config.clone();
        ingest.experiment.source = Source::Poses {
            path: base.path().join("sim/poses.csv"),
        };
        run_procedure(&ingest, &base.path().join("csv")).unwrap();
        for name in [
            "poses.csv",
            "strain.csv",
            "sft.csv",
            "stft.csv",
            "fit.csv",
            "backbone_errors.csv",
            "summary.json",
        ] {
            assert_eq!(
                read(&base.path().join("sim"), name),
                read(&base.path().join("csv"), name),
                "{name}"
            );
        }
        assert!(!base.path().join("csv/input.csv").exists());
    }

    #[test]
    fn single_frame_at_rest_has_dc_only_spectra() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_procedure(&small_config(1, 0.0), dir.path()).unwrap();
        assert!(!dir.path().join("stft.csv").exists());
        assert_eq!(report.spectra.k_max, 0.0);
        assert_eq!(report.spectra.lambda_max, None);
        assert_eq!(report.spectra.recommended_segments, 1);
        assert_eq!(report.spectra.weighted_truncation_index, None);
        // Only the stretch carries energy, all of it at DC.
        let expected = 10.0 / report.spectra.n_max as f64;
        for (mode, index) in report.spectra.truncation_index.iter().enumerate() {
            if mode == 3 {
                assert!((index.unwrap() - expected).abs() < 1e-12);
            } else {
                assert_eq!(*index, None);
            }
        }
        let text = String::from_utf8(read(dir.path(), "sft.csv")).unwrap();
        for line in text.lines().skip(1).filter(|l| l.starts_with("sx,")) {
            let f: Vec<&str> = line.split(',').collect();
            let (nu, re, im): (f64, f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap());
            // Unpadded bins sit at integer multiples of 1/(Nλ_s) = 1 m⁻¹.
            if nu != 0.0 && (nu - nu.round()).abs() < 1e-9 {
                assert!(re.hypot(im) < 1e-12, "{line}");
            }
        }
        assert!(report.fit.backbone.max_position_error < 1e-12);
    }

    #[test]
    fn stage_errors_are_labelled() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(3, 1.0);
        config.experiment.source = Source::Poses {
            path: dir.path().join("missing.csv"),
        };
        let err = run_procedure(&config, &dir.path().join("out")).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "ingest", .. }), "{err}");
        let mut bad = small_config(3, 1.0);
        bad.experiment.sampling.markers = 40;
        let err = run_procedure(&bad, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "config", .. }), "{err}");
        assert!(!err.is_numerical());
    }

    #[test]
    fn runs_are_deterministic() {
        let base = tempfile::tempdir().unwrap();
        let mut config = small_config(5, 0.3);
        config.experiment.signal = InputSignalSpec::white_noise(vec![0.3, 0.2], 1.0, 11);
        let a = run_procedure(&config, &base.path().join("a")).unwrap();
        let b = run_procedure(&config, &base.path().join("b")).unwrap();
        assert_eq!(a, b);
        for name in ["input.csv", "strain.csv", "stft.csv", "fit.csv", "summary.json"] {
            assert_eq!(read(&base.path().join("a"), name), read(&base.path().join("b"), name));
        }
    }
}
