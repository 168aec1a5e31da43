//! Spatial (SFT) and space-time (STFT) Fourier analysis of sampled strain
//! fields, aliasing and truncation measures, and the transfer functions of
//! piecewise-constant and piecewise-linear strain reconstructors.
//!
//! Transforms are unnormalized: `Ξ(k_i) = Σₙ ξ(nλ_s)e^{−jk_i nλ_s}` with
//! `k_i = 2πi/(N′λ_s)`, so Parseval reads `Σ|ξ|² = (1/N′)Σ|Ξ|²`.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::gvs::basis::{gauss_legendre_rule, MODE_NAMES};
use crate::liealg::ScrewVector;
use crate::rodmodel::{stiffness_diagonal, RodProperties};

pub const DEFAULT_ZERO_PAD: usize = 4;
const MIN_ENERGY: f64 = 1e-300;

/// Strain samples `ξ(s_n, mT_s)` with `s_n = (n + offset)·λ_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrainGrid {
    samples: Vec<ScrewVector>,
    frames: usize,
    points: usize,
    lambda_s: f64,
    t_s: f64,
    length: f64,
    abscissa_offset: f64,
}

impl StrainGrid {
    /// One inner vector of `N` samples per time frame.
    pub fn new(frames: Vec<Vec<ScrewVector>>, lambda_s: f64, t_s: f64, length: f64) -> Result<Self> {
        let points = frames.first().map_or(0, Vec::len);
        if let Some(bad) = frames.iter().find(|f| f.len() != points) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: points,
            });
        }
        let m = frames.len();
        Self::from_flat(frames.into_iter().flatten().collect(), m, points, lambda_s, t_s, length)
    }

    /// Samples stored frame after frame.
    pub fn from_flat(
        samples: Vec<ScrewVector>,
        frames: usize,
        points: usize,
        lambda_s: f64,
        t_s: f64,
        length: f64,
    ) -> Result<Self> {
        if frames == 0 {
            return Err(Error::invalid("strain grid needs at least one time frame"));
        }
        if points < 2 {
            return Err(Error::invalid("strain grid needs at least two samples per frame"));
        }
        if samples.len() != frames * points {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: frames * points,
            });
        }
        for (name, v) in [("lambda_s", lambda_s), ("T_s", t_s), ("rod length", length)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if points as f64 * lambda_s > (length + lambda_s) * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "{points} samples at {lambda_s} m overrun a rod of length {length} m"
            )));
        }
        if !samples.iter().all(ScrewVector::is_finite) {
            return Err(Error::invalid("strain samples must be finite"));
        }
        Ok(StrainGrid {
            samples,
            frames,
            points,
            lambda_s,
            t_s,
            length,
            abscissa_offset: 0.0,
        })
    }

    /// Places sample `n` at `(n + offset)·λ_s`; `offset = 0.5` for strain
    /// extracted between consecutive markers.
    pub fn with_abscissa_offset(mut self, offset: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::invalid(format!("abscissa offset {offset} outside [0, 1)")));
        }
        self.abscissa_offset = offset;
        Ok(self)
    }

    /// `M`
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// `N`
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn t_s(&self) -> f64 {
        self.t_s
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn abscissa_offset(&self) -> f64 {
        self.abscissa_offset
    }

    /// `k_s = 2π/λ_s`
    pub fn sampling_wavenumber(&self) -> f64 {
        2.0 * PI / self.lambda_s
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.points)
            .map(|n| (n as f64 + self.abscissa_offset) * self.lambda_s)
            .collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.frames).map(|m| m as f64 * self.t_s).collect()
    }

    pub fn sample(&self, m: usize, n: usize) -> ScrewVector {
        self.samples[m * self.points + n]
    }

    pub fn frame(&self, m: usize) -> &[ScrewVector] {
        &self.samples[m * self.points..(m + 1) * self.points]
    }

    fn check_frame(&self, m: usize) -> Result<()> {
        if m >= self.frames {
            return Err(Error::IndexOutOfRange {
                index: m,
                len: self.frames,
            });
        }
        Ok(())
    }
}

/// Complex spectrum of the six strain modes.
///
/// Values are stored time bin after time bin; an SFT has a single time bin.
#[derive(Clone, Debug)]
pub struct Spectrum {
    values: [Vec<Complex64>; 6],
    k_bins: usize,
    time_bins: usize,
    points: usize,
    frames: usize,
    lambda_s: f64,
    t_s: Option<f64>,
    zero_pad: (usize, usize),
    sample_energy: [f64; 6],
}

impl Spectrum {
    pub fn is_stft(&self) -> bool {
        self.t_s.is_some()
    }

    /// `N′`
    pub fn k_bins(&self) -> usize {
        self.k_bins
    }

    /// `M′`, 1 for an SFT.
    pub fn time_bins(&self) -> usize {
        self.time_bins
    }

    /// Unpadded sample count `N`.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Unpadded frame count, 1 for an SFT.
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn zero_pad_factor(&self) -> usize {
        self.zero_pad.0
    }

    pub fn time_zero_pad_factor(&self) -> usize {
        self.zero_pad.1
    }

    /// `k_i = 2πi/(N′λ_s)` in rad/m.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / (self.k_bins as f64 * self.lambda_s);
        (0..self.k_bins).map(|i| i as f64 * dk).collect()
    }

    /// `ν_i = k_i/2π` in 1/m.
    pub fn spatial_frequencies(&self) -> Vec<f64> {
        self.wavenumbers().into_iter().map(|k| k / (2.0 * PI)).collect()
    }

    /// `ω_j = 2πj/(M′T_s)` in rad/s; empty for an SFT.
    pub fn angular_frequencies(&self) -> Vec<f64> {
        match self.t_s {
            Some(t_s) => {
                let dw = 2.0 * PI / (self.time_bins as f64 * t_s);
                (0..self.time_bins).map(|j| j as f64 * dw).collect()
            }
            None => Vec::new(),
        }
    }

    /// `f_j = ω_j/2π` in Hz; empty for an SFT.
    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.angular_frequencies().into_iter().map(|w| w / (2.0 * PI)).collect()
    }

    pub fn value(&self, mode: usize, time_bin: usize, k_bin: usize) -> Complex64 {
        self.values[mode][time_bin * self.k_bins + k_bin]
    }

    pub fn mode_values(&self, mode: usize) -> &[Complex64] {
        &self.values[mode]
    }

    /// `|Ξᵢ(j0[, j0])|`, the reference of normalized magnitudes.
    pub fn dc_magnitude(&self, mode: usize) -> f64 {
        self.values[mode][0].norm()
    }

    /// `Σ|Ξᵢ(n, ω)|²` over the unpadded time bins at unpadded wavenumber
    /// bin `n`.
    pub fn bin_energy(&self, mode: usize, n: usize) -> f64 {
        let (ps, pt) = self.zero_pad;
        (0..self.frames)
            .map(|j| self.value(mode, j * pt, n * ps).norm_sqr())
            .sum()
    }

    /// Largest relative deviation from `Σ|ξ|² = (1/(N′M′))Σ|Ξ|²` over modes.
    pub fn parseval_residual(&self) -> f64 {
        let bins = (self.k_bins * self.time_bins) as f64;
        (0..6)
            .map(|i| {
                let spectral = self.values[i].iter().map(Complex64::norm_sqr).sum::<f64>() / bins;
                let direct = self.sample_energy[i];
                if direct > 0.0 {
                    (spectral - direct).abs() / direct
                } else {
                    spectral
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|Ξ(−k, −ω) − conj Ξ(k, ω)|` relative to the largest magnitude.
    pub fn symmetry_residual(&self) -> f64 {
        let (nk, nt) = (self.k_bins, self.time_bins);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for values in &self.values {
            for j in 0..nt {
                for i in 0..nk {
                    let v = values[j * nk + i];
                    let mirror = values[((nt - j) % nt) * nk + (nk - i) % nk];
                    worst = worst.max((v - mirror.conj()).norm());
                    scale = scale.max(v.norm());
                }
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Fails unless Parseval and conjugate symmetry hold to `tolerance`.
    pub fn check_invariants(&self, tolerance: f64) -> Result<()> {
        let parseval = self.parseval_residual();
        if !(parseval <= tolerance) {
            return Err(Error::invalid(format!(
                "spectrum violates Parseval (relative residual {parseval:.3e})"
            )));
        }
        let symmetry = self.symmetry_residual();
        if !(symmetry <= tolerance) {
            return Err(Error::invalid(format!(
                "spectrum is not conjugate symmetric (residual {symmetry:.3e})"
            )));
        }
        Ok(())
    }

    /// Writes `mode,k_rad_per_m,nu_per_m,[f_Hz,]real,imag,magnitude_dB,phase_rad`.
    ///
    /// With `normalize_db` the dB reference of each mode is its DC magnitude
    /// (falling back to 1 when that is zero); otherwise it is 1.
    pub fn write_csv<W: Write>(&self, writer: W, normalize_db: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let stft = self.is_stft();
        let mut header = vec!["mode", "k_rad_per_m", "nu_per_m"];
        if stft {
            header.push("f_Hz");
        }
        header.extend(["real", "imag", "magnitude_dB", "phase_rad"]);
        out.write_record(&header)?;
        let ks = self.wavenumbers();
        let fs = self.frequencies_hz();
        for (mode, name) in MODE_NAMES.iter().enumerate() {
            let dc = self.dc_magnitude(mode);
            let reference = if normalize_db && dc > 0.0 { dc } else { 1.0 };
            for j in 0..self.time_bins {
                for (i, k) in ks.iter().enumerate() {
                    let v = self.value(mode, j, i);
                    let mut row = vec![name.to_string(), k.to_string(), (k / (2.0 * PI)).to_string()];
                    if stft {
                        row.push(fs[j].to_string());
                    }
                    row.extend([
                        v.re.to_string(),
                        v.im.to_string(),
                        (20.0 * (v.norm() / reference).log10()).to_string(),
                        v.arg().to_string(),
                    ]);
                    out.write_record(&row)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn check_pad(factor: usize) -> Result<()> {
    if factor == 0 {
        return Err(Error::invalid("zero-padding factor must be at least 1"));
    }
    Ok(())
}

fn mode_energies<'a>(samples: impl Iterator<Item = &'a ScrewVector>) -> [f64; 6] {
    let mut e = [0.0; 6];
    for x in samples {
        for (ei, v) in e.iter_mut().zip(x.0.iter()) {
            *ei += v * v;
        }
    }
    e
}

/// SFT of time frame `m`, evaluated on `N·zero_pad` bins.
pub fn dsft(grid: &StrainGrid, m: usize, zero_pad: usize) -> Result<Spectrum> {
    grid.check_frame(m)?;
    check_pad(zero_pad)?;
    let bins = grid.points * zero_pad;
    let fft = FftPlanner::new().plan_fft_forward(bins);
    let frame = grid.frame(m);
    let values = std::array::from_fn(|mode| {
        let mut buf = vec![Complex64::new(0.0, 0.0); bins];
        for (b, x) in buf.iter_mut().zip(frame) {
            b.re = x[mode];
        }
        fft.process(&mut buf);
        buf
    });
    Ok(Spectrum {
        values,
        k_bins: bins,
        time_bins: 1,
        points: grid.points,
        frames: 1,
        lambda_s: grid.lambda_s,
        t_s: None,
        zero_pad: (zero_pad, 1),
        sample_energy: mode_energies(frame.iter()),
    })
}

/// Space-time transform `Ξ(k, ω) = ΣₘΣₙ ξ(nλ_s, mT_s)e^{−jknλ_s}e^{−jωmT_s}`
/// with zero-padding factors `(space, time)`.
pub fn dstft(grid: &StrainGrid, zero_pad: (usize, usize)) -> Result<Spectrum> {
    if grid.frames < 2 {
        return Err(Error::invalid("space-time transform needs at least two time frames"));
    }
    check_pad(zero_pad.0)?;
    check_pad(zero_pad.1)?;
    let (nk, nt) = (grid.points * zero_pad.0, grid.frames * zero_pad.1);
    let mut planner = FftPlanner::new();
    let space = planner.plan_fft_forward(nk);
    let time = planner.plan_fft_forward(nt);
    let values = std::array::from_fn(|mode| {
        let mut buf = vec![Complex64::new(0.0, 0.0); nk * nt];
        for m in 0..grid.frames {
            let row = &mut buf[m * nk..(m + 1) * nk];
            for (b, x) in row.iter_mut().zip(grid.frame(m)) {
                b.re = x[mode];
            }
            space.process(row);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); nt];
        for i in 0..nk {
            for (j, c) in column.iter_mut().enumerate() {
                *c = buf[j * nk + i];
            }
            time.process(&mut column);
            for (j, c) in column.iter().enumerate() {
                buf[j * nk + i] = *c;
            }
        }
        buf
    });
    Ok(Spectrum {
        values,
        k_bins: nk,
        time_bins: nt,
        points: grid.points,
        frames: grid.frames,
        lambda_s: grid.lambda_s,
        t_s: Some(grid.t_s),
        zero_pad,
        sample_energy: mode_energies(grid.samples.iter()),
    })
}

/// Spectrum of the sampled field built from a continuous SFT:
/// `(1/λ_s)·Σ_{|n|≤R} Ξ(k − nk_s)`.
pub fn replica_spectrum(
    continuous_sft: impl Fn(f64) -> [Complex64; 6],
    lambda_s: f64,
    n_replicas: usize,
    k_eval: f64,
) -> Result<[Complex64; 6]> {
    if !(lambda_s > 0.0 && lambda_s.is_finite()) {
        return Err(Error::invalid("sampling interval must be positive"));
    }
    if n_replicas == 0 {
        return Err(Error::invalid("replica sum needs at least one replica on each side"));
    }
    let ks = 2.0 * PI / lambda_s;
    let r = n_replicas as i64;
    let mut total = [Complex64::new(0.0, 0.0); 6];
    for n in -r..=r {
        let term = continuous_sft(k_eval - n as f64 * ks);
        for (t, v) in total.iter_mut().zip(term) {
            *t += v;
        }
    }
    Ok(total.map(|t| t / lambda_s))
}

/// Smallest number of pieces `N > 2L/λ_max` that samples the shortest
/// strain wavelength `λ_max` without aliasing.
pub fn min_segments(lambda_max: f64, length: f64) -> Result<usize> {
    if !(lambda_max > 0.0 && length > 0.0 && lambda_max.is_finite() && length.is_finite()) {
        return Err(Error::invalid("wavelength and rod length must be positive"));
    }
    Ok((2.0 * length / lambda_max).floor() as usize + 1)
}

fn truncation_ratio(points: usize, n_max: usize, energy: impl Fn(usize) -> f64, mode: Option<usize>) -> Result<f64> {
    if n_max == 0 || n_max >= points {
        return Err(Error::invalid(format!("N_max = {n_max} outside [1, {points})")));
    }
    let energies: Vec<f64> = (0..points).map(energy).collect();
    let total: f64 = energies.iter().sum();
    if !(total >= MIN_ENERGY) {
        return Err(Error::ZeroEnergy { mode });
    }
    let partial: f64 = energies[..n_max].iter().sum();
    Ok(points as f64 / n_max as f64 * partial / total)
}

/// `E_tr = (N/N_max)·Σ_{n<N_max}|Ξᵢ(n)|² / Σ_{n<N}|Ξᵢ(n)|²` over the
/// unpadded bins.
///
/// For a space-time spectrum `|Ξᵢ(n)|²` is summed over the unpadded
/// frequency bins. The prefactor lets the index exceed 1 when energy sits
/// at low wavenumbers.
pub fn truncation_index(spectrum: &Spectrum, mode: usize, n_max: usize) -> Result<f64> {
    if mode >= 6 {
        return Err(Error::IndexOutOfRange { index: mode, len: 6 });
    }
    truncation_ratio(spectrum.points, n_max, |n| spectrum.bin_energy(mode, n), Some(mode))
}

/// Mean of the stiffness diagonal `Σᵢᵢ(s)` over `[0, L]`.
pub fn mean_stiffness_diagonal(rod: &RodProperties) -> Result<[f64; 6]> {
    rod.validate()?;
    let mut mean = [0.0; 6];
    for (s, w) in gauss_legendre_rule(0.0, rod.length, 4) {
        let sigma = stiffness_diagonal(rod, s)?;
        for (m, v) in mean.iter_mut().zip(sigma.iter()) {
            *m += w * v / rod.length;
        }
    }
    Ok(mean)
}

/// Truncation index of the deformation energy `Σᵢ Σ̄ᵢᵢ|Ξᵢ(n)|²`, with
/// `Σ̄` the mean stiffness diagonal of `rod`.
pub fn stiffness_weighted_truncation(spectrum: &Spectrum, rod: &RodProperties, n_max: usize) -> Result<f64> {
    weighted_truncation(spectrum, &mean_stiffness_diagonal(rod)?, n_max)
}

/// Truncation index of `Σᵢ wᵢ|Ξᵢ(n)|²`.
pub fn weighted_truncation(spectrum: &Spectrum, weights: &[f64; 6], n_max: usize) -> Result<f64> {
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid("energy weights must be finite and non-negative"));
    }
    let energy = |n| (0..6).map(|i| weights[i] * spectrum.bin_energy(i, n)).sum();
    truncation_ratio(spectrum.points, n_max, energy, None)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn check_pitch(lambda_p: f64) -> Result<()> {
    if !(lambda_p > 0.0 && lambda_p.is_finite()) {
        return Err(Error::invalid("reconstruction pitch must be positive"));
    }
    Ok(())
}

/// Zero-order hold: `H₀(k) = λ_p·sinc(kλ_p/2)·e^{−jkλ_p/2}`.
pub fn zoh_transfer(k: f64, lambda_p: f64) -> Result<Complex64> {
    check_pitch(lambda_p)?;
    let half = 0.5 * k * lambda_p;
    Ok(Complex64::from_polar(lambda_p * sinc(half), -half))
}

/// First-order hold: `H₁(k) = λ_p·sinc²(kλ_p/2)·(1 + jkλ_p)·e^{−jkλ_p/2}`.
pub fn foh_transfer(k: f64, lambda_p: f64) -> Result<Complex64> {
    check_pitch(lambda_p)?;
    let half = 0.5 * k * lambda_p;
    let s = sinc(half);
    Ok(Complex64::new(1.0, k * lambda_p) * Complex64::from_polar(lambda_p * s * s, -half))
}

fn check_reconstruction(samples: &[ScrewVector], lambda_p: f64, length: f64, s: f64) -> Result<()> {
    check_pitch(lambda_p)?;
    if samples.is_empty() {
        return Err(Error::invalid("reconstruction needs at least one sample"));
    }
    if !(s >= 0.0 && s <= length) {
        return Err(Error::OutOfDomain { s, length });
    }
    Ok(())
}

/// Piecewise-constant strain: the sample at the left end of the piece
/// containing `s`, held past the last sample.
pub fn reconstruct_pcs(samples: &[ScrewVector], lambda_p: f64, length: f64, s: f64) -> Result<ScrewVector> {
    check_reconstruction(samples, lambda_p, length, s)?;
    let piece = ((s / lambda_p).floor() as usize).min(samples.len() - 1);
    Ok(samples[piece])
}

/// Piecewise-linear strain through the samples at `nλ_p`, held past the
/// last sample.
pub fn reconstruct_pls(samples: &[ScrewVector], lambda_p: f64, length: f64, s: f64) -> Result<ScrewVector> {
    check_reconstruction(samples, lambda_p, length, s)?;
    let x = s / lambda_p;
    let last = samples.len() - 1;
    if x >= last as f64 {
        return Ok(samples[last]);
    }
    let n = x.floor() as usize;
    let t = x - n as f64;
    Ok(ScrewVector(samples[n].0 * (1.0 - t) + samples[n + 1].0 * t))
}
