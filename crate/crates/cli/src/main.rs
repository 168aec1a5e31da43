//! `rodspectra`: drive the identification procedure from the command line.
//!
//! Exit status is 0 on success, 2 for invalid input or configuration, 3
//! when a numerical stage fails and 1 for I/O failures.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rodspectra::fitting::{fit_series, read_fits_csv, truncate_bases, write_fits_csv, BpdConfig, FitDesign, FitResult};
use rodspectra::pipeline::{
    extract_strain, generate_input, read_strain_csv, reconstruct_backbone, run_procedure, simulate_poses,
    write_input_csv, write_strain_csv, Config, PoseSeries,
};
use rodspectra::spectra::{dsft, dstft, StrainGrid};
use rodspectra::{Error, Result, ScrewVector};

const SPECTRUM_TOLERANCE: f64 = rodspectra::pipeline::procedure::SPECTRUM_TOLERANCE;

#[derive(Parser, Debug)]
#[command(
    name = "rodspectra",
    version,
    about = "Strain spectra and sparse strain bases for soft rods"
)]
struct Cli {
    /// Robot and experiment TOML file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the actuator input signal at the frame times.
    Babble {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Simulate the rod and write marker poses.
    Simulate {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write the sampled actuator inputs.
        #[arg(long, value_name = "FILE")]
        inputs: Option<PathBuf>,
    },
    /// Convert a pose CSV to a strain CSV.
    ExtractStrain {
        #[arg(long, value_name = "FILE")]
        poses: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Spatial spectrum of one frame, or the spatiotemporal spectrum.
    Spectrum {
        #[arg(long, value_name = "FILE")]
        strain: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Spectrum over space and time instead of one frame.
        #[arg(long)]
        stft: bool,
        /// Spatial zero-padding factor; the configured one by default.
        #[arg(long)]
        zero_pad: Option<usize>,
        /// Write magnitudes in dB relative to the largest one.
        #[arg(long)]
        normalize_db: bool,
        /// Frame of the spatial spectrum; the last by default.
        #[arg(long)]
        frame: Option<usize>,
    },
    /// Fit the strain basis frame by frame.
    Fit {
        #[arg(long, value_name = "FILE")]
        strain: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Uniform sparsity weight replacing the configured ones.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Fit, drop atoms below an energy share and refit.
    Truncate {
        #[arg(long, value_name = "FILE")]
        strain: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Marker poses of fitted coefficients.
    Reconstruct {
        #[arg(long, value_name = "FILE")]
        fit: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Run the whole procedure and write every artifact to a directory.
    Report {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Stage { source, .. } => exit_code(source),
        Error::Io(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let config = Config::load(path)?;
    Ok(match cli.seed {
        Some(seed) => config.with_seed(seed),
        None => config,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn read_strain(config: &Config, path: &Path) -> Result<StrainGrid> {
    let s = &config.experiment.sampling;
    read_strain_csv(open(path)?, s.lambda_s, s.t_s, (s.markers - 1) as f64 * s.lambda_s)
}

fn bpd_config(config: &Config, gamma: Option<f64>) -> Result<BpdConfig> {
    let base = config.experiment.fit.bpd.clone();
    let bpd = match gamma {
        Some(g) => BpdConfig {
            gamma: [g; 6],
            atom_gamma: None,
            ..base
        },
        None => base,
    };
    bpd.validate(config.robot.fit_basis.build(config.robot.rod.length)?.n_q())?;
    Ok(bpd)
}

fn fit_strain(config: &Config, strain: &StrainGrid, gamma: Option<f64>) -> Result<(FitDesign, Vec<FitResult>)> {
    let dict = config.robot.fit_basis.build(config.robot.rod.length)?;
    let design = FitDesign::new(&dict, &config.robot.rod, &strain.abscissae())?;
    let frames: Vec<&[ScrewVector]> = (0..strain.frames()).map(|m| strain.frame(m)).collect();
    let fits = fit_series(
        &design,
        &frames,
        &bpd_config(config, gamma)?,
        config.experiment.fit.block,
    )?;
    Ok((design, fits))
}

fn run(cli: Cli) -> Result<()> {
    let config = load(&cli)?;
    let (robot, experiment) = (&config.robot, &config.experiment);
    match &cli.command {
        Command::Babble { out } => {
            let times = experiment.times();
            let inputs = generate_input(&experiment.signal, &times, experiment.seed)?;
            write_input_csv(create(out)?, &times, &inputs)?;
            println!(
                "{} actuators x {} samples -> {}",
                inputs.nrows(),
                inputs.ncols(),
                out.display()
            );
        }
        Command::Simulate { out, inputs } => {
            let (u, poses) = simulate_poses(robot, experiment)?;
            poses.write_csv(create(out)?)?;
            if let Some(path) = inputs {
                write_input_csv(create(path)?, &poses.times(), &u)?;
            }
            println!(
                "{} frames x {} markers -> {}",
                poses.frames(),
                poses.markers(),
                out.display()
            );
        }
        Command::ExtractStrain { poses, out } => {
            let s = &experiment.sampling;
            let series = PoseSeries::read_csv(open(poses)?, s.lambda_s, s.t_s)?;
            let strain = extract_strain(&series)?;
            write_strain_csv(&strain, create(out)?)?;
            println!(
                "{} frames x {} samples -> {}",
                strain.frames(),
                strain.points(),
                out.display()
            );
        }
        Command::Spectrum {
            strain,
            out,
            stft,
            zero_pad,
            normalize_db,
            frame,
        } => {
            let grid = read_strain(&config, strain)?;
            let pad = zero_pad.unwrap_or(experiment.spectra.zero_pad);
            let spectrum = if *stft {
                dstft(&grid, (pad, experiment.spectra.time_zero_pad))?
            } else {
                let m = frame.unwrap_or(grid.frames() - 1);
                if m >= grid.frames() {
                    return Err(Error::IndexOutOfRange {
                        index: m,
                        len: grid.frames(),
                    });
                }
                dsft(&grid, m, pad)?
            };
            spectrum.check_invariants(SPECTRUM_TOLERANCE)?;
            spectrum.write_csv(create(out)?, *normalize_db)?;
            println!(
                "{} wavenumber x {} frequency bins -> {}",
                spectrum.k_bins(),
                spectrum.time_bins(),
                out.display()
            );
        }
        Command::Fit { strain, out, gamma } => {
            let grid = read_strain(&config, strain)?;
            let (design, fits) = fit_strain(&config, &grid, *gamma)?;
            write_fits_csv(create(out)?, &grid.times(), &fits, design.dictionary())?;
            let converged = fits.iter().filter(|f| f.converged).count();
            println!("{converged}/{} frames converged -> {}", fits.len(), out.display());
        }
        Command::Truncate {
            strain,
            out,
            threshold,
            gamma,
        } => {
            let grid = read_strain(&config, strain)?;
            let (design, fits) = fit_strain(&config, &grid, *gamma)?;
            let frames: Vec<&[ScrewVector]> = (0..grid.frames()).map(|m| grid.frame(m)).collect();
            let cut = truncate_bases(&design, &frames, &fits, *threshold)?;
            write_fits_csv(create(out)?, &grid.times(), &cut, design.dictionary())?;
            let kept = cut.first().map_or(0, |f| f.kept.iter().filter(|k| **k).count());
            println!("{kept}/{} atoms kept -> {}", design.dictionary().n_q(), out.display());
        }
        Command::Reconstruct { fit, out } => {
            let dict = robot.fit_basis.build(robot.rod.length)?;
            let (_, coefficients) = read_fits_csv(open(fit)?, dict.n_q())?;
            let s = &experiment.sampling;
            let frames = coefficients
                .iter()
                .map(|q| {
                    reconstruct_backbone(
                        &dict,
                        q,
                        &robot.rod,
                        s.markers,
                        s.lambda_s,
                        experiment.simulation.substeps,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let poses = PoseSeries::new(frames, s.lambda_s, s.t_s)?;
            poses.write_csv(create(out)?)?;
            println!(
                "{} frames x {} markers -> {}",
                poses.frames(),
                poses.markers(),
                out.display()
            );
        }
        Command::Report { out } => {
            let report = run_procedure(&config, out)?;
            let sp = &report.spectra;
            println!("frames {}, markers {}", report.frames, report.markers);
            match sp.lambda_max {
                Some(l) => println!(
                    "k_max {:.4} rad/m, shortest wavelength {l:.4} m, at least {} segments",
                    sp.k_max, sp.recommended_segments
                ),
                None => println!("no deformation: no wavenumber recommendation"),
            }
            println!(
                "fit: {}/{} frames converged, max position error {:.3e} m",
                report.fit.converged_frames, report.frames, report.fit.backbone.max_position_error
            );
            for t in &report.truncation {
                println!(
                    "threshold {}: {} atoms kept, max position error {:.3e} m",
                    t.threshold, t.kept_atoms, t.backbone.max_position_error
                );
            }
            println!("artifacts in {}", out.display());
        }
    }
    Ok(())
}
