//! Sparse strain fitting by basis pursuit denoising, basis energy
//! accounting, threshold truncation and backbone error metrics.
//!
//! Each strain mode is fitted on its own atoms by solving
//!
//! `min_c ½Σₙ wₙ(yₙ − Σⱼ aⱼ(sₙ)cⱼ)² + Σⱼ γⱼ|cⱼ|`
//!
//! where `aⱼ = bⱼ/‖bⱼ‖` are the atoms scaled to unit `L²([0, L])` norm,
//! `y = ξ − ξ*` and `wₙ` is the length of rod represented by sample `n`.
//! The weighted sum approximates `∫₀ᴸ(·)² ds`, so `γ` does not depend on
//! how densely the rod is sampled. Coefficients are returned in the
//! original atom scale, `qⱼ = cⱼ/‖bⱼ‖`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gvs::basis::{Atom, BasisDictionary, MODE_NAMES};
use crate::liealg::{dist_so3, Pose, ScrewVector};
use crate::rodmodel::RodProperties;

/// Relative accuracy of the power iteration for the Lipschitz constant.
const POWER_TOLERANCE: f64 = 1e-8;
/// Slack of the optimality certificate, relative to the Lipschitz constant.
pub const KKT_TOLERANCE: f64 = 1e-6;
/// Iterations between attempts to solve the support equations exactly.
const POLISH_INTERVAL: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpdConfig {
    /// Sparsity weight of each strain mode, shared by its atoms.
    pub gamma: [f64; 6],
    /// Per-atom weights overriding `gamma`, one per dictionary column.
    pub atom_gamma: Option<Vec<f64>>,
    pub max_iterations: usize,
    /// Relative objective change below which the iteration stops.
    pub tolerance: f64,
}

impl Default for BpdConfig {
    fn default() -> Self {
        BpdConfig {
            gamma: [0.5, 0.5, 0.5, 0.07, 0.05, 0.05],
            atom_gamma: None,
            max_iterations: 20_000,
            tolerance: 1e-12,
        }
    }
}

impl BpdConfig {
    pub fn uniform(gamma: f64) -> Self {
        BpdConfig {
            gamma: [gamma; 6],
            ..Default::default()
        }
    }

    pub fn validate(&self, n_q: usize) -> Result<()> {
        if self.gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::invalid("sparsity weights must be finite and non-negative"));
        }
        if let Some(atom) = &self.atom_gamma {
            if atom.len() != n_q {
                return Err(Error::LengthMismatch {
                    left: atom.len(),
                    right: n_q,
                });
            }
            if atom.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                return Err(Error::invalid("sparsity weights must be finite and non-negative"));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("fit tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("fit needs at least one iteration"));
        }
        Ok(())
    }

    fn weight(&self, column: usize, mode: usize) -> f64 {
        self.atom_gamma.as_ref().map_or(self.gamma[mode], |g| g[column])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Coefficients in the original atom scale.
    pub q: DVector<f64>,
    /// `√(Σₙ wₙ‖ξₙ − ξ̂ₙ‖²)`, the `L²` misfit over the rod.
    pub residual_norm: f64,
    /// Share of each atom in the energy of its mode; 0 where
    /// `energy_defined` is false for the mode.
    pub energy_fraction: DVector<f64>,
    pub energy_defined: [bool; 6],
    pub kept: Vec<bool>,
    pub iterations: usize,
    /// True when every mode passed the optimality certificate.
    pub converged: bool,
    /// Some mode has more atoms than samples.
    pub underdetermined: bool,
}

/// Per-mode Gram data of a dictionary sampled on an s-grid.
#[derive(Clone, Debug)]
struct ModeDesign {
    mode: usize,
    columns: std::ops::Range<usize>,
    /// `wₙ^{1/2}·aⱼ(sₙ)`, samples by atoms.
    weighted: DMatrix<f64>,
    gram: DMatrix<f64>,
    lipschitz: f64,
}

/// A dictionary sampled at fixed abscissae, reusable across time frames.
#[derive(Clone, Debug)]
pub struct FitDesign {
    dict: BasisDictionary,
    rod: RodProperties,
    s_grid: Vec<f64>,
    sqrt_weights: Vec<f64>,
    norms: DVector<f64>,
    stress_free: Vec<ScrewVector>,
    modes: Vec<ModeDesign>,
}

/// Lengths of the cells `[½(sₙ₋₁ + sₙ), ½(sₙ + sₙ₊₁)]`, clipped to `[0, L]`.
pub fn sample_weights(s_grid: &[f64], length: f64) -> Vec<f64> {
    let n = s_grid.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { 0.5 * (s_grid[i - 1] + s_grid[i]) };
            let hi = if i + 1 == n {
                length
            } else {
                0.5 * (s_grid[i] + s_grid[i + 1])
            };
            hi - lo
        })
        .collect()
}

fn largest_eigenvalue(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = gram * &v;
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        let done = (next - lambda).abs() <= POWER_TOLERANCE * next;
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

impl FitDesign {
    pub fn new(dict: &BasisDictionary, rod: &RodProperties, s_grid: &[f64]) -> Result<Self> {
        rod.validate()?;
        dict.check_rod(rod)?;
        if dict.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        if s_grid.is_empty() {
            return Err(Error::invalid("fit needs at least one sample"));
        }
        if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sample abscissae must be strictly ascending"));
        }
        for &s in s_grid {
            rod.check_domain(s)?;
        }
        let length = rod.length;
        let weights = sample_weights(s_grid, length);
        let sqrt_weights: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let norms = DVector::from_iterator(
            dict.n_q(),
            dict.columns().map(|(_, atom)| atom.squared_norm(length).sqrt()),
        );
        if let Some(c) = norms.iter().position(|n| !(*n > 0.0)) {
            return Err(Error::invalid(format!("atom {c} has zero norm on the rod")));
        }
        let mut modes = Vec::new();
        for mode in 0..6 {
            let columns = dict.mode_range(mode);
            if columns.is_empty() {
                continue;
            }
            let atoms = dict.mode_atoms(mode);
            let weighted = DMatrix::from_fn(s_grid.len(), atoms.len(), |n, j| {
                sqrt_weights[n] * atoms[j].eval(s_grid[n], length) / norms[columns.start + j]
            });
            let gram = weighted.tr_mul(&weighted);
            let lipschitz = largest_eigenvalue(&gram);
            modes.push(ModeDesign {
                mode,
                columns,
                weighted,
                gram,
                lipschitz,
            });
        }
        Ok(FitDesign {
            dict: dict.clone(),
            rod: rod.clone(),
            s_grid: s_grid.to_vec(),
            sqrt_weights,
            norms,
            stress_free: s_grid.iter().map(|&s| rod.stress_free(s)).collect(),
            modes,
        })
    }

    pub fn dictionary(&self) -> &BasisDictionary {
        &self.dict
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    fn target(&self, samples: &[ScrewVector], mode: usize) -> DVector<f64> {
        DVector::from_iterator(
            samples.len(),
            samples
                .iter()
                .zip(&self.stress_free)
                .zip(&self.sqrt_weights)
                .map(|((x, x0), w)| w * (x[mode] - x0[mode])),
        )
    }

    fn check_samples(&self, samples: &[ScrewVector]) -> Result<()> {
        if samples.len() != self.s_grid.len() {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: self.s_grid.len(),
            });
        }
        if !samples.iter().all(ScrewVector::is_finite) {
            return Err(Error::invalid("strain samples must be finite"));
        }
        Ok(())
    }

    /// Weighted-ℓ₁ fit of one frame, optionally warm-started from `q0`.
    pub fn fit(&self, samples: &[ScrewVector], config: &BpdConfig, q0: Option<&DVector<f64>>) -> Result<FitResult> {
        self.check_samples(samples)?;
        config.validate(self.dict.n_q())?;
        if let Some(q0) = q0 {
            self.dict.check_coordinates(q0)?;
        }
        let mut q = DVector::zeros(self.dict.n_q());
        let mut iterations = 0;
        let mut converged = true;
        let mut underdetermined = false;
        for (mode, design) in self.mode_designs() {
            let y = self.target(samples, mode);
            let rhs = design.weighted.tr_mul(&y);
            let gamma = DVector::from_iterator(
                design.columns.len(),
                design.columns.clone().map(|c| config.weight(c, mode)),
            );
            let start = match q0 {
                Some(q0) => DVector::from_iterator(
                    design.columns.len(),
                    design.columns.clone().map(|c| q0[c] * self.norms[c]),
                ),
                None => DVector::zeros(design.columns.len()),
            };
            let problem = ModeProblem {
                gram: &design.gram,
                rhs: &rhs,
                gamma: &gamma,
                offset: 0.5 * y.norm_squared(),
                lipschitz: design.lipschitz,
            };
            let solved = problem.solve(start, config);
            iterations = iterations.max(solved.iterations);
            converged &= solved.converged;
            underdetermined |= design.columns.len() > samples.len();
            for (j, c) in design.columns.clone().enumerate() {
                q[c] = solved.c[j] / self.norms[c];
            }
        }
        let mut fit = self.result(samples, q, vec![true; self.dict.n_q()]);
        fit.iterations = iterations;
        fit.converged = converged;
        fit.underdetermined = underdetermined;
        Ok(fit)
    }

    fn mode_designs(&self) -> impl Iterator<Item = (usize, &ModeDesign)> {
        self.modes.iter().map(|d| (d.mode, d))
    }

    fn result(&self, samples: &[ScrewVector], q: DVector<f64>, kept: Vec<bool>) -> FitResult {
        let mut misfit = 0.0;
        for (mode, design) in self.mode_designs() {
            let c = DVector::from_iterator(
                design.columns.len(),
                design.columns.clone().map(|j| q[j] * self.norms[j]),
            );
            misfit += (self.target(samples, mode) - &design.weighted * c).norm_squared();
        }
        // Modes without atoms are fitted by ξ* alone.
        for mode in 0..6 {
            if self.dict.mode_range(mode).is_empty() {
                misfit += self.target(samples, mode).norm_squared();
            }
        }
        let fractions = energy_fractions(&q, &self.dict);
        FitResult {
            q,
            residual_norm: misfit.sqrt(),
            energy_fraction: fractions.fraction,
            energy_defined: fractions.defined,
            kept,
            iterations: 0,
            converged: true,
            underdetermined: false,
        }
    }

    /// Unpenalized least squares restricted to the atoms with `support`
    /// set; the others are zero.
    pub fn refit(&self, samples: &[ScrewVector], support: &[bool]) -> Result<DVector<f64>> {
        self.check_samples(samples)?;
        if support.len() != self.dict.n_q() {
            return Err(Error::LengthMismatch {
                left: support.len(),
                right: self.dict.n_q(),
            });
        }
        let mut q = DVector::zeros(self.dict.n_q());
        for (mode, design) in self.mode_designs() {
            let active: Vec<usize> = (0..design.columns.len())
                .filter(|&j| support[design.columns.start + j])
                .collect();
            if active.is_empty() {
                continue;
            }
            let a = design.weighted.select_columns(&active);
            let y = self.target(samples, mode);
            let c = least_squares(&a, &y);
            for (&j, v) in active.iter().zip(c.iter()) {
                let col = design.columns.start + j;
                q[col] = v / self.norms[col];
            }
        }
        Ok(q)
    }

    /// Strain of coefficients `q` at the design abscissae.
    pub fn strain(&self, q: &DVector<f64>) -> Result<Vec<ScrewVector>> {
        self.dict.check_coordinates(q)?;
        Ok(self
            .s_grid
            .iter()
            .zip(&self.stress_free)
            .map(|(&s, x0)| self.dict.deformation(q, s) + *x0)
            .collect())
    }

    pub fn rod(&self) -> &RodProperties {
        &self.rod
    }
}

fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-12 * a.nrows().max(a.ncols()) as f64;
    svd.solve(y, cutoff).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

struct ModeProblem<'a> {
    gram: &'a DMatrix<f64>,
    rhs: &'a DVector<f64>,
    gamma: &'a DVector<f64>,
    /// `½‖y‖²`, so the objective is the true misfit plus penalty.
    offset: f64,
    lipschitz: f64,
}

struct ModeSolution {
    c: DVector<f64>,
    iterations: usize,
    converged: bool,
    /// Objective of every accepted iterate.
    #[cfg_attr(not(test), allow(dead_code))]
    objectives: Vec<f64>,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

impl ModeProblem<'_> {
    fn gradient(&self, c: &DVector<f64>) -> DVector<f64> {
        self.gram * c - self.rhs
    }

    fn objective(&self, c: &DVector<f64>) -> f64 {
        let smooth = 0.5 * c.dot(&(self.gram * c)) - c.dot(self.rhs) + self.offset;
        smooth + self.gamma.dot(&c.abs())
    }

    fn prox_step(&self, y: &DVector<f64>) -> DVector<f64> {
        let g = self.gradient(y);
        DVector::from_fn(y.len(), |i, _| {
            soft_threshold(y[i] - g[i] / self.lipschitz, self.gamma[i] / self.lipschitz)
        })
    }

    /// Subgradient optimality of `c`, with slack `KKT_TOLERANCE·Λ`.
    fn certified(&self, c: &DVector<f64>) -> bool {
        let g = self.gradient(c);
        let slack = KKT_TOLERANCE * self.lipschitz;
        c.iter().zip(g.iter()).zip(self.gamma.iter()).all(|((&ci, &gi), &gm)| {
            if ci != 0.0 {
                (gi + gm * ci.signum()).abs() < slack
            } else {
                gi.abs() <= gm + slack
            }
        })
    }

    /// Solves the stationarity conditions on the support and sign pattern
    /// of `c` exactly; returns the result if it keeps the signs of the
    /// penalized entries and does not raise the objective.
    fn polish(&self, c: &DVector<f64>) -> Option<DVector<f64>> {
        let support: Vec<usize> = (0..c.len()).filter(|&i| c[i] != 0.0).collect();
        if support.is_empty() {
            return None;
        }
        let g = self.gram.select_rows(&support).select_columns(&support);
        let b = DVector::from_iterator(
            support.len(),
            support.iter().map(|&i| self.rhs[i] - self.gamma[i] * c[i].signum()),
        );
        let x = g.cholesky()?.solve(&b);
        let mut out = DVector::zeros(c.len());
        for (&i, v) in support.iter().zip(x.iter()) {
            if !v.is_finite() || (self.gamma[i] > 0.0 && v.signum() != c[i].signum()) {
                return None;
            }
            out[i] = *v;
        }
        (self.objective(&out) <= self.objective(c)).then_some(out)
    }

    /// Accelerated proximal gradient with function-value restart.
    fn solve(&self, start: DVector<f64>, config: &BpdConfig) -> ModeSolution {
        if self.lipschitz == 0.0 {
            // Every atom vanishes at the samples; the penalty alone decides.
            let c = DVector::zeros(start.len());
            let converged = self.certified(&c);
            return ModeSolution {
                c,
                iterations: 0,
                converged,
                objectives: Vec::new(),
            };
        }
        let mut x = start;
        let mut fx = self.objective(&x);
        let mut objectives = vec![fx];
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < config.max_iterations {
            iterations += 1;
            let mut next = self.prox_step(&y);
            let mut f_next = self.objective(&next);
            if f_next > fx {
                // Momentum overshot: restart with a plain step from x.
                t = 1.0;
                next = self.prox_step(&x);
                f_next = self.objective(&next);
            }
            let stalled = f_next > fx;
            if !stalled {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                y = &next + (&next - &x) * ((t - 1.0) / t_next);
                t = t_next;
            }
            let change = if stalled {
                0.0
            } else {
                (fx - f_next) / fx.abs().max(f64::MIN_POSITIVE)
            };
            if !stalled {
                x = next;
                fx = f_next;
                objectives.push(fx);
            }
            if change < config.tolerance || iterations % POLISH_INTERVAL == 0 {
                if let Some(p) = self.polish(&x).filter(|p| self.certified(p)) {
                    x = p;
                    objectives.push(self.objective(&x));
                    converged = true;
                    break;
                }
                if change < config.tolerance && self.certified(&x) {
                    converged = true;
                    break;
                }
                if stalled {
                    break;
                }
            }
        }
        if !converged {
            converged = self.certified(&x);
        }
        ModeSolution {
            c: x,
            iterations,
            converged,
            objectives,
        }
    }
}

/// Weighted-ℓ₁ fit of strain samples taken at `s_grid`.
pub fn bpd_fit(
    samples: &[ScrewVector],
    s_grid: &[f64],
    dict: &BasisDictionary,
    rod: &RodProperties,
    config: &BpdConfig,
) -> Result<FitResult> {
    FitDesign::new(dict, rod, s_grid)?.fit(samples, config, None)
}

/// Fits every frame in turn, warm-starting each from the previous one.
/// With `block = Some(b)` the warm-start chain restarts from zero every
/// `b` frames.
pub fn fit_series(
    design: &FitDesign,
    frames: &[&[ScrewVector]],
    config: &BpdConfig,
    block: Option<usize>,
) -> Result<Vec<FitResult>> {
    if block == Some(0) {
        return Err(Error::invalid("warm-start block length must be positive"));
    }
    let mut out: Vec<FitResult> = Vec::with_capacity(frames.len());
    for (m, frame) in frames.iter().enumerate() {
        let chained = block.map_or(true, |b| m % b != 0);
        let warm = out.last().filter(|_| chained).map(|f| &f.q);
        out.push(design.fit(frame, config, warm)?);
    }
    Ok(out)
}

/// `Eᵢ = qᵢ²·∫₀ᴸ bᵢ(s)² ds`
pub fn basis_energy(q: f64, atom: &Atom, length: f64) -> f64 {
    q * q * atom.squared_norm(length)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyFractions {
    pub fraction: DVector<f64>,
    /// False for modes whose atoms carry no energy; their fractions are 0.
    pub defined: [bool; 6],
}

impl EnergyFractions {
    /// Error for the first mode with atoms but no energy.
    pub fn require_defined(&self, dict: &BasisDictionary) -> Result<()> {
        match (0..6).find(|&m| !self.defined[m] && !dict.mode_range(m).is_empty()) {
            Some(mode) => Err(Error::ZeroEnergy { mode: Some(mode) }),
            None => Ok(()),
        }
    }
}

/// `Eᵢ/Σⱼ Eⱼ` with the sum over the atoms of the same mode.
pub fn energy_fractions(q: &DVector<f64>, dict: &BasisDictionary) -> EnergyFractions {
    let length = dict.length();
    let mut fraction = DVector::zeros(dict.n_q());
    let mut defined = [false; 6];
    for mode in 0..6 {
        let range = dict.mode_range(mode);
        let energies: Vec<f64> = range
            .clone()
            .zip(dict.mode_atoms(mode))
            .map(|(c, atom)| basis_energy(q[c], atom, length))
            .collect();
        let total: f64 = energies.iter().sum();
        if total > 0.0 {
            defined[mode] = true;
            for (c, e) in range.zip(energies) {
                fraction[c] = e / total;
            }
        }
    }
    EnergyFractions { fraction, defined }
}

/// Fraction of each atom averaged over the frames where its mode carries
/// energy.
pub fn mean_energy_fractions(fits: &[FitResult], dict: &BasisDictionary) -> DVector<f64> {
    let modes = dict.column_modes();
    let mut sum = DVector::zeros(dict.n_q());
    let mut count = vec![0usize; dict.n_q()];
    for fit in fits {
        for c in 0..dict.n_q() {
            if fit.energy_defined[modes[c]] {
                sum[c] += fit.energy_fraction[c];
                count[c] += 1;
            }
        }
    }
    for (s, n) in sum.iter_mut().zip(count) {
        if n > 0 {
            *s /= n as f64;
        }
    }
    sum
}

/// Drops atoms whose time-averaged energy fraction is below `threshold`
/// and refits every frame by least squares on the atoms that remain and
/// were active in some frame.
pub fn truncate_bases(
    design: &FitDesign,
    frames: &[&[ScrewVector]],
    fits: &[FitResult],
    threshold: f64,
) -> Result<Vec<FitResult>> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "truncation threshold {threshold} outside [0, 1)"
        )));
    }
    if frames.len() != fits.len() {
        return Err(Error::LengthMismatch {
            left: frames.len(),
            right: fits.len(),
        });
    }
    let mean = mean_energy_fractions(fits, &design.dict);
    let kept: Vec<bool> = mean.iter().map(|f| *f >= threshold).collect();
    let support: Vec<bool> = kept.iter().zip(mean.iter()).map(|(k, f)| *k && *f > 0.0).collect();
    frames
        .iter()
        .zip(fits)
        .map(|(frame, fit)| {
            let q = design.refit(frame, &support)?;
            let mut out = design.result(frame, q, kept.clone());
            out.iterations = fit.iterations;
            out.converged = fit.converged;
            out.underdetermined = fit.underdetermined;
            Ok(out)
        })
        .collect()
}

/// Position distance and `dist_so3` between matching poses.
pub fn backbone_errors(reconstructed: &[Pose], measured: &[Pose]) -> Result<Vec<(f64, f64)>> {
    if reconstructed.len() != measured.len() {
        return Err(Error::LengthMismatch {
            left: reconstructed.len(),
            right: measured.len(),
        });
    }
    Ok(reconstructed
        .iter()
        .zip(measured)
        .map(|(a, b)| ((a.position - b.position).norm(), dist_so3(&a.rotation, &b.rotation)))
        .collect())
}

/// Writes `t,atom_id,mode,coefficient,energy_fraction,kept`, one row per
/// frame and dictionary column.
pub fn write_fits_csv<W: Write>(writer: W, times: &[f64], fits: &[FitResult], dict: &BasisDictionary) -> Result<()> {
    if times.len() != fits.len() {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: fits.len(),
        });
    }
    let modes = dict.column_modes();
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["t", "atom_id", "mode", "coefficient", "energy_fraction", "kept"])?;
    for (t, fit) in times.iter().zip(fits) {
        for c in 0..dict.n_q() {
            out.write_record([
                t.to_string(),
                c.to_string(),
                MODE_NAMES[modes[c]].to_string(),
                fit.q[c].to_string(),
                fit.energy_fraction[c].to_string(),
                fit.kept[c].to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Frame times and coefficient vectors from the format of
/// [`write_fits_csv`]; `n_q` is the dictionary size.
pub fn read_fits_csv<R: Read>(reader: R, n_q: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("fit CSV has no {name} column")))
    };
    let (t_col, id_col, q_col) = (find("t")?, find("atom_id")?, find("coefficient")?);
    let parse = |field: &str, row: usize| -> Result<f64> {
        field
            .parse()
            .map_err(|_| Error::invalid(format!("row {}: cannot parse {field:?} as a number", row + 2)))
    };
    if n_q == 0 {
        return Err(Error::EmptyDictionary);
    }
    let mut times: Vec<f64> = Vec::new();
    let mut frames: Vec<DVector<f64>> = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        rows += 1;
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let t = parse(field(t_col), i)?;
        let id = parse(field(id_col), i)?;
        let expected = i % n_q;
        if id != expected as f64 {
            return Err(Error::invalid(format!(
                "row {}: expected atom {expected}, found {id}",
                i + 2
            )));
        }
        if expected == 0 {
            times.push(t);
            frames.push(DVector::zeros(n_q));
        } else if times.last() != Some(&t) {
            return Err(Error::invalid(format!(
                "row {}: frame ends before atom {expected}",
                i + 2
            )));
        }
        frames.last_mut().expect("frame started")[expected] = parse(field(q_col), i)?;
    }
    if rows == 0 || rows % n_q != 0 {
        return Err(Error::invalid(format!(
            "fit CSV has {rows} rows, not a multiple of {n_q} atoms"
        )));
    }
    Ok((times, frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvs::kinematics::uniform_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn midpoints(length: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) * length / n as f64).collect()
    }

    fn mixed_dictionary(mode: usize) -> BasisDictionary {
        let mut dict = BasisDictionary::new(1.0).unwrap();
        let mut atoms = Atom::polynomials(3);
        atoms.extend(Atom::fourier(2).into_iter().skip(1));
        atoms.extend(Atom::gaussians(3));
        dict.set_mode(mode, atoms).unwrap();
        dict
    }

    /// Fourier atoms up to order 3 followed by three Gaussians.
    fn sparse_dictionary(mode: usize) -> BasisDictionary {
        let mut dict = BasisDictionary::new(1.0).unwrap();
        let mut atoms = Atom::fourier(3);
        atoms.extend(Atom::gaussians(3));
        dict.set_mode(mode, atoms).unwrap();
        dict
    }

    fn synthetic(dict: &BasisDictionary, rod: &RodProperties, q: &DVector<f64>, s: &[f64]) -> Vec<ScrewVector> {
        s.iter().map(|&x| dict.deformation(q, x) + rod.stress_free(x)).collect()
    }

    /// Cyclic coordinate descent on the same normalized weighted problem,
    /// run to a fixed point.
    fn coordinate_descent(design: &FitDesign, samples: &[ScrewVector], gamma: f64, mode: usize) -> DVector<f64> {
        let md = design.modes.iter().find(|d| d.mode == mode).unwrap();
        let y = design.target(samples, mode);
        let rhs = md.weighted.tr_mul(&y);
        let n = md.columns.len();
        let mut c = DVector::zeros(n);
        for _ in 0..1_000_000 {
            let mut delta: f64 = 0.0;
            for i in 0..n {
                let r = rhs[i] - (md.gram.row(i) * &c)[0] + md.gram[(i, i)] * c[i];
                let v = soft_threshold(r, gamma) / md.gram[(i, i)];
                delta = delta.max((v - c[i]).abs());
                c[i] = v;
            }
            if delta < 1e-13 {
                break;
            }
        }
        DVector::from_fn(n, |j, _| c[j] / design.norms[md.columns.start + j])
    }

    #[test]
    fn zero_gamma_is_least_squares() {
        let rod = RodProperties::desk_cylinder();
        let dict = BasisDictionary::polynomial(1.0, 3).unwrap();
        let s = midpoints(1.0, 60);
        let samples: Vec<ScrewVector> = s
            .iter()
            .map(|&x| ScrewVector::new([x.sin(), x * x, (3.0 * x).cos(), 1.0 + 0.1 * x.exp(), 0.0, -x]))
            .collect();
        let fit = bpd_fit(&samples, &s, &dict, &rod, &BpdConfig::uniform(0.0)).unwrap();
        assert!(fit.converged);
        // Normal-equations oracle on the raw (unnormalized) design.
        let w = sample_weights(&s, 1.0);
        for mode in 0..6 {
            let b = DMatrix::from_fn(s.len(), 4, |n, j| w[n].sqrt() * s[n].powi(j as i32));
            let y = DVector::from_fn(s.len(), |n, _| {
                w[n].sqrt() * (samples[n][mode] - rod.stress_free(s[n])[mode])
            });
            let oracle = (b.transpose() * &b).cholesky().unwrap().solve(&(b.transpose() * y));
            let got = fit.q.rows(4 * mode, 4);
            assert!((got - &oracle).amax() < 1e-6 * oracle.amax().max(1.0), "mode {mode}");
        }
    }

    #[test]
    fn large_gamma_gives_zero() {
        let rod = RodProperties::desk_cylinder();
        let dict = mixed_dictionary(1);
        let s = midpoints(1.0, 50);
        let samples: Vec<ScrewVector> = s
            .iter()
            .map(|&x| ScrewVector::new([0.0, x.cos(), 0.0, 1.0, 0.0, 0.0]))
            .collect();
        let design = FitDesign::new(&dict, &rod, &s).unwrap();
        let md = &design.modes[0];
        let bound = md.weighted.tr_mul(&design.target(&samples, 1)).amax();
        let fit = design.fit(&samples, &BpdConfig::uniform(bound * 1.0001), None).unwrap();
        assert_eq!(fit.q.amax(), 0.0);
        assert!(fit.converged);
        let below = design.fit(&samples, &BpdConfig::uniform(bound * 0.9), None).unwrap();
        assert!(below.q.amax() > 0.0);
    }

    #[test]
    fn sparse_support_recovered_and_matches_coordinate_descent() {
        let rod = RodProperties::desk_cylinder();
        let dict = sparse_dictionary(2);
        let s = midpoints(1.0, 200);
        let mut q = DVector::zeros(dict.n_q());
        q[3] = 2.0;
        q[7] = 0.5;
        let samples = synthetic(&dict, &rod, &q, &s);
        let design = FitDesign::new(&dict, &rod, &s).unwrap();
        let config = BpdConfig::uniform(1e-3);
        let fit = design.fit(&samples, &config, None).unwrap();
        assert!(fit.converged);
        let support: Vec<usize> = (0..dict.n_q()).filter(|&c| fit.q[c] != 0.0).collect();
        assert_eq!(support, vec![3, 7]);
        assert!((fit.q[3] - 2.0).abs() < 5e-2 && (fit.q[7] - 0.5).abs() < 5e-2);
        let oracle = coordinate_descent(&design, &samples, 1e-3, 2);
        assert!((&fit.q - oracle).amax() < 1e-6);
    }

    #[test]
    fn objective_monotone_and_certified() {
        let rod = RodProperties::desk_cone();
        let dict = mixed_dictionary(0);
        let s = midpoints(1.0, 80);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let samples: Vec<ScrewVector> = s
                .iter()
                .map(|&x| ScrewVector::new([(x * rng.random_range(1.0..6.0)).sin(), 0.0, 0.0, 1.0, 0.0, 0.0]))
                .collect();
            let design = FitDesign::new(&dict, &rod, &s).unwrap();
            let md = &design.modes[0];
            let y = design.target(&samples, 0);
            let rhs = md.weighted.tr_mul(&y);
            let gamma = DVector::from_element(md.columns.len(), rng.random_range(1e-4..1e-1));
            let problem = ModeProblem {
                gram: &md.gram,
                rhs: &rhs,
                gamma: &gamma,
                offset: 0.5 * y.norm_squared(),
                lipschitz: md.lipschitz,
            };
            let solved = problem.solve(DVector::zeros(md.columns.len()), &BpdConfig::default());
            assert!(solved.objectives.windows(2).all(|w| w[1] <= w[0]));
            assert!(solved.converged);
            assert!(problem.certified(&solved.c));
        }
    }

    #[test]
    fn fits_csv_round_trip() {
        let rod = RodProperties::desk_cylinder();
        let dict = mixed_dictionary(1);
        let s = midpoints(1.0, 80);
        let design = FitDesign::new(&dict, &rod, &s).unwrap();
        let fits: Vec<FitResult> = (0..3)
            .map(|m| {
                let q = DVector::from_fn(dict.n_q(), |i, _| ((i + 3 * m) as f64).sin() / 3.0);
                design
                    .fit(&synthetic(&dict, &rod, &q, &s), &BpdConfig::uniform(1e-4), None)
                    .unwrap()
            })
            .collect();
        let times = [0.0, 0.02, 0.04];
        let mut buf = Vec::new();
        write_fits_csv(&mut buf, &times, &fits, &dict).unwrap();
        let (t, q) = read_fits_csv(buf.as_slice(), dict.n_q()).unwrap();
        assert_eq!(t, times);
        for (a, b) in q.iter().zip(&fits) {
            assert_eq!(a, &b.q);
        }
        assert!(read_fits_csv(buf.as_slice(), dict.n_q() + 1).is_err());
    }

    #[test]
    fn warm_start_reaches_same_optimum() {
        let rod = RodProperties::desk_cylinder();
        let dict = mixed_dictionary(4);
        let s = midpoints(1.0, 100);
        let design = FitDesign::new(&dict, &rod, &s).unwrap();
        let frames: Vec<Vec<ScrewVector>> = (0..5)
            .map(|m| {
                s.iter()
                    .map(|&x| ScrewVector::new([0.0, 0.0, 0.0, 1.0, (x + 0.1 * m as f64).sin() * 0.01, 0.0]))
                    .collect()
            })
            .collect();
        let refs: Vec<&[ScrewVector]> = frames.iter().map(Vec::as_slice).collect();
        let config = BpdConfig::uniform(1e-5);
        let warm = fit_series(&design, &refs, &config, None).unwrap();
        let cold = fit_series(&design, &refs, &config, Some(1)).unwrap();
        let blocks = fit_series(&design, &refs, &config, Some(2)).unwrap();
        for ((a, b), c) in warm.iter().zip(&cold).zip(&blocks) {
            assert!(a.converged && b.converged);
            assert!((&a.q - &b.q).amax() < 1e-6 * a.q.amax().max(1.0));
            assert!((&a.q - &c.q).amax() < 1e-6 * a.q.amax().max(1.0));
        }
        let again = fit_series(&design, &refs, &config, Some(2)).unwrap();
        assert_eq!(blocks, again);
    }

    #[test]
    fn energies() {
        let length = 1.0;
        assert_eq!(basis_energy(0.0, &Atom::Polynomial { degree: 2 }, length), 0.0);
        assert_eq!(basis_energy(2.0, &Atom::Polynomial { degree: 0 }, length), 4.0);
        let sine = Atom::Sine { order: 1 };
        let n = 20_000;
        let quad: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) / n as f64;
                sine.eval(s, length).powi(2) / n as f64
            })
            .sum();
        assert!((basis_energy(1.0, &sine, length) - 0.5).abs() < 1e-15);
        assert!((quad - 0.5).abs() < 1e-8);
    }

    #[test]
    fn fractions_sum_to_one_and_are_scale_invariant() {
        let dict = mixed_dictionary(2);
        let mut q = DVector::from_fn(dict.n_q(), |i, _| ((i + 1) as f64 * 0.77).sin());
        let f = energy_fractions(&q, &dict);
        assert!((f.fraction.sum() - 1.0).abs() < 1e-9);
        assert!(f.defined[2] && !f.defined[0]);
        assert!(f
            .require_defined(&BasisDictionary::polynomial(1.0, 1).unwrap())
            .is_err());
        q *= -3.7;
        let g = energy_fractions(&q, &dict);
        assert!((&f.fraction - &g.fraction).amax() < 1e-15);

        let mut single = DVector::zeros(dict.n_q());
        single[4] = 0.3;
        assert_eq!(energy_fractions(&single, &dict).fraction[4], 1.0);
        // cos(2πs/L) and cos(4πs/L) have equal norms.
        let mut two = DVector::zeros(dict.n_q());
        two[4] = 1.0;
        two[5] = -1.0;
        let h = energy_fractions(&two, &dict);
        assert!((h.fraction[4] - 0.5).abs() < 1e-15 && (h.fraction[5] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn truncation_drops_weak_atoms_and_debiases() {
        let rod = RodProperties::desk_cylinder();
        let dict = mixed_dictionary(1);
        let s = midpoints(1.0, 120);
        let mut q = DVector::zeros(dict.n_q());
        q[0] = 1.0;
        q[2] = 0.3;
        q[5] = 0.02;
        let noise = Normal::new(0.0, 1e-4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut samples = synthetic(&dict, &rod, &q, &s);
        for x in &mut samples {
            x.0[1] += noise.sample(&mut rng);
        }
        let design = FitDesign::new(&dict, &rod, &s).unwrap();
        let fit = design.fit(&samples, &BpdConfig::uniform(1e-4), None).unwrap();
        let frames = [samples.as_slice()];

        let none = truncate_bases(&design, &frames, std::slice::from_ref(&fit), 0.0).unwrap();
        assert!(none[0].kept.iter().all(|k| *k));

        // A single active atom holds all the energy of its mode.
        let mut lone = DVector::zeros(dict.n_q());
        lone[2] = 0.4;
        let lone_samples = synthetic(&dict, &rod, &lone, &s);
        let lone_fit = design.fit(&lone_samples, &BpdConfig::uniform(1e-6), None).unwrap();
        assert_eq!(lone_fit.energy_fraction[2], 1.0);
        let dominant = truncate_bases(&design, &[lone_samples.as_slice()], &[lone_fit], 1.0 - 1e-9).unwrap();
        assert_eq!(dominant[0].kept.iter().filter(|k| **k).count(), 1);
        assert!(dominant[0].kept[2]);
        assert!((dominant[0].q[2] - 0.4).abs() < 1e-12);

        let mut last_dofs = usize::MAX;
        let mut last_residual = 0.0;
        for threshold in [0.0, 0.01, 0.05, 0.3] {
            let t = truncate_bases(&design, &frames, std::slice::from_ref(&fit), threshold).unwrap();
            let dofs = t[0].kept.iter().filter(|k| **k).count();
            assert!(dofs <= last_dofs);
            assert!(t[0].residual_norm >= last_residual - 1e-12);
            // Debiasing never does worse than zeroing the dropped atoms.
            let mut zeroed = fit.q.clone();
            for (c, k) in t[0].kept.iter().enumerate() {
                if !k {
                    zeroed[c] = 0.0;
                }
            }
            let plain = design.result(&samples, zeroed, t[0].kept.clone());
            assert!(t[0].residual_norm <= plain.residual_norm + 1e-12);
            last_dofs = dofs;
            last_residual = t[0].residual_norm;
        }
        assert!(truncate_bases(&design, &frames, &[fit], 1.0).is_err());
    }

    #[test]
    fn backbone_error_metrics() {
        let poses: Vec<Pose> = crate::gvs::integrate_strain(&uniform_grid(1.0, 10), |s| {
            Ok(ScrewVector::new([0.1, s, 0.0, 1.0, 0.0, 0.0]))
        })
        .unwrap();
        assert!(backbone_errors(&poses, &poses)
            .unwrap()
            .iter()
            .all(|(p, o)| *p == 0.0 && *o == 0.0));
        let d = nalgebra::Vector3::new(0.003, -0.004, 0.0);
        let shifted: Vec<Pose> = poses.iter().map(|g| Pose::from_translation(d).compose(g)).collect();
        for (p, o) in backbone_errors(&shifted, &poses).unwrap() {
            assert!((p - 0.005).abs() < 1e-15 && o == 0.0);
        }
        assert!(backbone_errors(&poses[1..], &poses).is_err());
    }

    #[test]
    fn fits_csv_rows() {
        let dict = BasisDictionary::polynomial(1.0, 0).unwrap();
        let rod = RodProperties::desk_cylinder();
        let s = midpoints(1.0, 10);
        let samples = synthetic(&dict, &rod, &DVector::from_element(6, 0.1), &s);
        let fit = bpd_fit(&samples, &s, &dict, &rod, &BpdConfig::uniform(0.0)).unwrap();
        let mut buf = Vec::new();
        write_fits_csv(&mut buf, &[0.5], &[fit], &dict).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,atom_id,mode,coefficient,energy_fraction,kept"
        );
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().nth(4).unwrap().starts_with("0.5,3,sx,"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let rod = RodProperties::desk_cylinder();
        let dict = BasisDictionary::polynomial(1.0, 1).unwrap();
        let s = midpoints(1.0, 5);
        let samples = vec![ScrewVector::zeros(); 5];
        assert!(bpd_fit(&samples[..4], &s, &dict, &rod, &BpdConfig::default()).is_err());
        assert!(bpd_fit(&samples, &s, &dict, &rod, &BpdConfig::uniform(-1.0)).is_err());
        assert!(matches!(
            bpd_fit(
                &samples,
                &s,
                &BasisDictionary::new(1.0).unwrap(),
                &rod,
                &BpdConfig::default()
            ),
            Err(Error::EmptyDictionary)
        ));
        let few = bpd_fit(&samples[..1], &s[..1], &dict, &rod, &BpdConfig::uniform(0.0)).unwrap();
        assert!(few.underdetermined);
    }
}
