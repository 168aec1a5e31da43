//! Scalar basis atoms and the per-mode dictionary that builds `B_q(s)`.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::ScrewVector;
use crate::rodmodel::RodProperties;

pub const MODE_NAMES: [&str; 6] = ["kx", "ky", "kz", "sx", "sy", "sz"];

/// One scalar function of the arc length.
///
/// Trigonometric and Gaussian atoms are expressed in the normalized
/// abscissa `u = s/L`; polynomial atoms use the physical `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Atom {
    /// `s^degree`
    Polynomial { degree: u32 },
    /// `cos(2π·order·s/L)`
    Cosine { order: u32 },
    /// `sin(2π·order·s/L)`, order ≥ 1
    Sine { order: u32 },
    /// `exp(−(s/L − center)²/width²)`
    Gaussian { center: f64, width: f64 },
    /// Piecewise-linear profile through the given samples, held constant
    /// outside the sampled range.
    Sampled { abscissae: Vec<f64>, values: Vec<f64> },
}

impl Atom {
    /// Monomials of degree 0..=order.
    pub fn polynomials(order: u32) -> Vec<Atom> {
        (0..=order).map(|degree| Atom::Polynomial { degree }).collect()
    }

    /// `cos` of orders 0..=order followed by `sin` of orders 1..=order.
    pub fn fourier(order: u32) -> Vec<Atom> {
        let cos = (0..=order).map(|order| Atom::Cosine { order });
        let sin = (1..=order).map(|order| Atom::Sine { order });
        cos.chain(sin).collect()
    }

    /// `order + 1` Gaussians centered at `h/order`, width `(2√(ln 2)·order)⁻¹`.
    pub fn gaussians(order: u32) -> Vec<Atom> {
        let n = order.max(1) as f64;
        let width = gaussian_width(order.max(1));
        (0..=order.max(1))
            .map(|h| Atom::Gaussian {
                center: h as f64 / n,
                width,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Atom::Sine { order: 0 } => Err(Error::invalid("sine atom of order 0 is identically zero")),
            Atom::Gaussian { center, width } => {
                if !(width.is_finite() && *width > 0.0 && center.is_finite()) {
                    return Err(Error::invalid("gaussian atom needs a finite center and positive width"));
                }
                Ok(())
            }
            Atom::Sampled { abscissae, values } => {
                if abscissae.len() != values.len() {
                    return Err(Error::LengthMismatch {
                        left: abscissae.len(),
                        right: values.len(),
                    });
                }
                if abscissae.len() < 2 {
                    return Err(Error::invalid("sampled atom needs at least two samples"));
                }
                if abscissae.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("sampled atom abscissae must be strictly ascending"));
                }
                if values.iter().chain(abscissae).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("sampled atom has non-finite entries"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, s: f64, length: f64) -> f64 {
        match self {
            Atom::Polynomial { degree } => s.powi(*degree as i32),
            Atom::Cosine { order } => (2.0 * PI * *order as f64 * s / length).cos(),
            Atom::Sine { order } => (2.0 * PI * *order as f64 * s / length).sin(),
            Atom::Gaussian { center, width } => {
                let d = (s / length - center) / width;
                (-d * d).exp()
            }
            Atom::Sampled { abscissae, values } => interpolate(abscissae, values, s),
        }
    }

    /// `∫₀ᴸ b(s)² ds`, in closed form for every family.
    pub fn squared_norm(&self, length: f64) -> f64 {
        match self {
            Atom::Polynomial { degree } => {
                let p = 2 * *degree as i32 + 1;
                length.powi(p) / p as f64
            }
            Atom::Cosine { order: 0 } => length,
            Atom::Cosine { .. } => 0.5 * length,
            Atom::Sine { order: 0 } => 0.0,
            Atom::Sine { .. } => 0.5 * length,
            Atom::Gaussian { center, width } => {
                let a = std::f64::consts::SQRT_2 / width;
                let span = libm::erf(a * (1.0 - center)) - libm::erf(-a * center);
                length * (PI.sqrt() / (2.0 * a)) * span
            }
            Atom::Sampled { abscissae, values } => {
                let mut knots = vec![0.0];
                knots.extend(abscissae.iter().copied().filter(|&x| x > 0.0 && x < length));
                knots.push(length);
                knots
                    .windows(2)
                    .map(|w| {
                        let (a, b) = (
                            interpolate(abscissae, values, w[0]),
                            interpolate(abscissae, values, w[1]),
                        );
                        (w[1] - w[0]) * (a * a + a * b + b * b) / 3.0
                    })
                    .sum()
            }
        }
    }

    /// Continuous spatial Fourier transform over the rod,
    /// `∫₀ᴸ b(s)·e^{−jks} ds`.
    pub fn sft(&self, k: f64, length: f64) -> Complex64 {
        match self {
            Atom::Cosine { order } | Atom::Sine { order } => {
                let a = 2.0 * PI * *order as f64 / length;
                let plus = exp_integral(a - k, length);
                let minus = exp_integral(-a - k, length);
                match self {
                    Atom::Cosine { .. } => (plus + minus) * 0.5,
                    _ => (plus - minus) * Complex64::new(0.0, -0.5),
                }
            }
            _ => {
                let mut breaks = vec![0.0];
                if let Atom::Sampled { abscissae, .. } = self {
                    breaks.extend(abscissae.iter().copied().filter(|&x| x > 0.0 && x < length));
                }
                breaks.push(length);
                let extra = match self {
                    Atom::Polynomial { degree } => *degree as usize / 4,
                    Atom::Gaussian { width, .. } => (1.0 / width).ceil() as usize,
                    _ => 0,
                };
                let mut total = Complex64::new(0.0, 0.0);
                for w in breaks.windows(2) {
                    let span = w[1] - w[0];
                    let panels = 1 + extra + (k.abs() * span / PI).ceil() as usize;
                    total += gauss_legendre(w[0], w[1], panels, |s| {
                        Complex64::from_polar(self.eval(s, length), -k * s)
                    });
                }
                total
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Atom::Polynomial { degree } => format!("poly{degree}"),
            Atom::Cosine { order } => format!("cos{order}"),
            Atom::Sine { order } => format!("sin{order}"),
            Atom::Gaussian { center, .. } => format!("gauss@{center}"),
            Atom::Sampled { .. } => "sampled".to_string(),
        }
    }
}

pub fn gaussian_width(order: u32) -> f64 {
    1.0 / (2.0 * std::f64::consts::LN_2.sqrt() * order as f64)
}

fn interpolate(xs: &[f64], ys: &[f64], s: f64) -> f64 {
    let last = xs.len() - 1;
    if s <= xs[0] {
        return ys[0];
    }
    if s >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&x| x <= s) - 1;
    let t = (s - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// `∫₀ᴸ e^{jbs} ds`
fn exp_integral(b: f64, length: f64) -> Complex64 {
    let x = b * length;
    if x.abs() < 1e-4 {
        // Series keeps full precision where (e^{jx} − 1)/(jb) cancels.
        let j = Complex64::new(0.0, 1.0);
        length * (1.0 + j * x / 2.0 - x * x / 6.0 - j * x * x * x / 24.0)
    } else {
        (Complex64::from_polar(1.0, x) - 1.0) / Complex64::new(0.0, b)
    }
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights of composite 8-point Gauss–Legendre on `[a, b]`.
pub(crate) fn gauss_legendre_rule(a: f64, b: f64, panels: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels).flat_map(move |p| {
        let mid = a + (p as f64 + 0.5) * h;
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
    })
}

fn gauss_legendre(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
    gauss_legendre_rule(a, b, panels).map(|(s, w)| f(s) * w).sum()
}

/// Ordered atoms for each of the six strain modes.
///
/// Columns of `B_q` are numbered mode-major: all atoms of κ_x first,
/// then κ_y, and so on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDictionary {
    length: f64,
    modes: [Vec<Atom>; 6],
}

impl BasisDictionary {
    pub fn new(length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("dictionary length must be positive"));
        }
        Ok(BasisDictionary {
            length,
            modes: Default::default(),
        })
    }

    /// Same atom list on every mode.
    pub fn uniform(length: f64, atoms: &[Atom]) -> Result<Self> {
        let mut dict = Self::new(length)?;
        for mode in 0..6 {
            dict.set_mode(mode, atoms.to_vec())?;
        }
        Ok(dict)
    }

    pub fn polynomial(length: f64, order: u32) -> Result<Self> {
        Self::uniform(length, &Atom::polynomials(order))
    }

    pub fn fourier(length: f64, order: u32) -> Result<Self> {
        Self::uniform(length, &Atom::fourier(order))
    }

    pub fn gaussian(length: f64, order: u32) -> Result<Self> {
        Self::uniform(length, &Atom::gaussians(order))
    }

    pub fn set_mode(&mut self, mode: usize, atoms: Vec<Atom>) -> Result<()> {
        check_mode(mode)?;
        self.modes[mode].clear();
        for atom in atoms {
            self.push(mode, atom)?;
        }
        Ok(())
    }

    pub fn push(&mut self, mode: usize, atom: Atom) -> Result<()> {
        check_mode(mode)?;
        atom.validate()?;
        if self.modes[mode].contains(&atom) {
            return Err(Error::invalid(format!(
                "duplicate atom {} in mode {}",
                atom.label(),
                MODE_NAMES[mode]
            )));
        }
        self.modes[mode].push(atom);
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_q(&self) -> usize {
        self.modes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_q() == 0
    }

    pub fn mode_atoms(&self, mode: usize) -> &[Atom] {
        &self.modes[mode]
    }

    /// Columns of `B_q` belonging to `mode`.
    pub fn mode_range(&self, mode: usize) -> Range<usize> {
        let start: usize = self.modes[..mode].iter().map(Vec::len).sum();
        start..start + self.modes[mode].len()
    }

    /// `(mode, atom)` for every column, in column order.
    pub fn columns(&self) -> impl Iterator<Item = (usize, &Atom)> + '_ {
        self.modes
            .iter()
            .enumerate()
            .flat_map(|(mode, atoms)| atoms.iter().map(move |a| (mode, a)))
    }

    pub fn column_modes(&self) -> Vec<usize> {
        self.columns().map(|(m, _)| m).collect()
    }

    /// Atom values at `s`, one per column.
    pub fn column_values(&self, s: f64) -> Vec<f64> {
        self.columns().map(|(_, a)| a.eval(s, self.length)).collect()
    }

    /// `B_q(s)·q` without the stress-free offset.
    pub fn deformation(&self, q: &DVector<f64>, s: f64) -> ScrewVector {
        let mut xi = ScrewVector::zeros();
        for (j, (mode, atom)) in self.columns().enumerate() {
            xi[mode] += atom.eval(s, self.length) * q[j];
        }
        xi
    }

    pub(crate) fn check_domain(&self, s: f64) -> Result<()> {
        let slack = 1e-12 * self.length;
        if !(s >= -slack && s <= self.length + slack) {
            return Err(Error::OutOfDomain { s, length: self.length });
        }
        Ok(())
    }

    pub(crate) fn check_rod(&self, rod: &RodProperties) -> Result<()> {
        if (self.length - rod.length).abs() > 1e-12 * rod.length {
            return Err(Error::invalid(format!(
                "dictionary length {} does not match rod length {}",
                self.length, rod.length
            )));
        }
        Ok(())
    }

    pub(crate) fn check_coordinates(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n_q() {
            return Err(Error::LengthMismatch {
                left: q.len(),
                right: self.n_q(),
            });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("generalized coordinates must be finite"));
        }
        Ok(())
    }
}

fn check_mode(mode: usize) -> Result<()> {
    if mode >= 6 {
        return Err(Error::IndexOutOfRange { index: mode, len: 6 });
    }
    Ok(())
}

/// `B_q(s)`, a 6×n_q matrix with one non-zero per column.
pub fn basis_matrix(dict: &BasisDictionary, s: f64) -> Result<DMatrix<f64>> {
    dict.check_domain(s)?;
    let mut b = DMatrix::zeros(6, dict.n_q());
    for (j, (mode, atom)) in dict.columns().enumerate() {
        b[(mode, j)] = atom.eval(s, dict.length);
    }
    Ok(b)
}

/// `ξ(s) = B_q(s)·q + ξ*(s)`
pub fn strain_at(dict: &BasisDictionary, q: &DVector<f64>, rod: &RodProperties, s: f64) -> Result<ScrewVector> {
    dict.check_domain(s)?;
    dict.check_rod(rod)?;
    dict.check_coordinates(q)?;
    Ok(dict.deformation(q, s) + rod.stress_free(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn polynomial_column_for_bending() {
        let mut dict = BasisDictionary::new(1.0).unwrap();
        dict.set_mode(2, Atom::polynomials(2)).unwrap();
        let b = basis_matrix(&dict, 0.5).unwrap();
        assert_eq!(b.shape(), (6, 3));
        assert_eq!(b.row(2).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.5, 0.25]);
        assert_eq!(b.rows(0, 2).amax(), 0.0);
        assert_eq!(b.rows(3, 3).amax(), 0.0);
    }

    #[test]
    fn zero_order_cosine_is_constant() {
        let atom = Atom::Cosine { order: 0 };
        for s in [0.0, 0.3, 0.77, 1.0] {
            assert_eq!(atom.eval(s, 1.0), 1.0);
        }
    }

    #[test]
    fn gaussian_peak_and_width() {
        let atoms = Atom::gaussians(2);
        assert_eq!(atoms.len(), 3);
        assert_eq!(atoms[1].eval(0.5, 1.0), 1.0);
        let expected = 1.0 / (2.0 * (2.0f64.ln()).sqrt() * 2.0);
        match &atoms[0] {
            Atom::Gaussian { width, .. } => assert_eq!(*width, expected),
            _ => unreachable!(),
        }
        // Half maximum at distance 1/(2n) from the center.
        assert_relative_eq!(atoms[1].eval(0.75, 1.0), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn fourier_family_layout() {
        let atoms = Atom::fourier(2);
        let labels: Vec<_> = atoms.iter().map(Atom::label).collect();
        assert_eq!(labels, ["cos0", "cos1", "cos2", "sin1", "sin2"]);
    }

    #[test]
    fn mode_major_columns() {
        let dict = BasisDictionary::polynomial(1.0, 2).unwrap();
        assert_eq!(dict.n_q(), 18);
        assert_eq!(dict.mode_range(3), 9..12);
        let b = basis_matrix(&dict, 0.2).unwrap();
        for j in 0..18 {
            let nonzero: Vec<_> = (0..6).filter(|&i| b[(i, j)] != 0.0).collect();
            assert_eq!(nonzero, vec![j / 3]);
        }
    }

    #[test]
    fn strain_defaults_and_linearity() {
        let rod = RodProperties::desk_cylinder();
        let dict = BasisDictionary::polynomial(1.0, 2).unwrap();
        let zero = DVector::zeros(dict.n_q());
        assert_eq!(strain_at(&dict, &zero, &rod, 0.4).unwrap(), rod.stress_free(0.4));
        let q1 = DVector::from_fn(18, |i, _| (i as f64 * 0.37).sin());
        let q2 = DVector::from_fn(18, |i, _| (i as f64 * 1.1).cos());
        let star = rod.stress_free(0.4);
        let lhs = strain_at(&dict, &(&q1 + &q2), &rod, 0.4).unwrap() - star;
        let rhs =
            (strain_at(&dict, &q1, &rod, 0.4).unwrap() - star) + (strain_at(&dict, &q2, &rod, 0.4).unwrap() - star);
        assert_relative_eq!(lhs.0, rhs.0, epsilon = 1e-14);
        let mut unit = zero.clone();
        unit[dict.mode_range(2).start] = 1.0;
        let xi = strain_at(&dict, &unit, &rod, 0.9).unwrap();
        assert_eq!(xi, star + ScrewVector::new([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn domain_and_dictionary_checks() {
        let dict = BasisDictionary::polynomial(1.0, 1).unwrap();
        assert!(matches!(basis_matrix(&dict, 1.2), Err(Error::OutOfDomain { .. })));
        let mut d = BasisDictionary::new(1.0).unwrap();
        d.push(0, Atom::Cosine { order: 1 }).unwrap();
        assert!(d.push(0, Atom::Cosine { order: 1 }).is_err());
        assert!(d.push(0, Atom::Sine { order: 0 }).is_err());
        assert!(d.push(7, Atom::Cosine { order: 1 }).is_err());
    }

    #[test]
    fn squared_norms_match_quadrature() {
        let length = 1.3;
        let mut atoms = Atom::polynomials(4);
        atoms.extend(Atom::fourier(3));
        atoms.extend(Atom::gaussians(3));
        atoms.push(Atom::Sampled {
            abscissae: vec![-0.1, 0.2, 0.5, 0.9, 1.1],
            values: vec![1.0, -0.5, 2.0, 0.3, 0.0],
        });
        for atom in &atoms {
            let exact = atom.squared_norm(length);
            let numeric = simpson(|s| atom.eval(s, length).powi(2), 0.0, length, 20_000);
            let tol = if matches!(atom, Atom::Sampled { .. }) {
                1e-6
            } else {
                1e-10
            };
            assert_relative_eq!(exact, numeric, max_relative = tol);
        }
        assert_relative_eq!(Atom::Sine { order: 1 }.squared_norm(1.0), 0.5);
    }

    #[test]
    fn sft_matches_quadrature() {
        let length = 1.0;
        let mut atoms = Atom::polynomials(3);
        atoms.extend(Atom::fourier(2));
        atoms.extend(Atom::gaussians(2));
        for atom in &atoms {
            for k in [0.0, 0.7, 2.0 * PI, 13.0, 40.0] {
                let exact = atom.sft(k, length);
                let re = simpson(|s| atom.eval(s, length) * (k * s).cos(), 0.0, length, 20_000);
                let im = simpson(|s| -atom.eval(s, length) * (k * s).sin(), 0.0, length, 20_000);
                assert!(
                    (exact - Complex64::new(re, im)).norm() < 1e-9,
                    "{} at k={k}",
                    atom.label()
                );
            }
        }
    }
}
