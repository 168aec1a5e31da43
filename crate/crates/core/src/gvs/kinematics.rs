//! Forward kinematics by midpoint collocation and the geometric Jacobian.

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use super::basis::BasisDictionary;
use crate::error::{Error, Result};
use crate::liealg::{adjoint_big_inv, exp_se3, right_jacobian, Pose, ScrewVector};
use crate::rodmodel::RodProperties;

/// Integration steps over the full rod used when no grid is given.
pub const DEFAULT_STEPS: usize = 200;

/// `steps + 1` equally spaced abscissae from 0 to `end`, endpoints exact.
pub fn uniform_grid(end: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps)
        .map(|k| if k == steps { end } else { end * k as f64 / steps as f64 })
        .collect()
}

pub(crate) fn check_grid(s_grid: &[f64], length: f64) -> Result<()> {
    let Some(&first) = s_grid.first() else {
        return Err(Error::invalid("empty s-grid"));
    };
    if first.abs() > 1e-12 * length {
        return Err(Error::invalid(format!("s-grid must start at 0, starts at {first}")));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("s-grid must be strictly ascending"));
    }
    let last = s_grid[s_grid.len() - 1];
    if last > length * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain { s: last, length });
    }
    Ok(())
}

/// Integrates `g′ = g·ξ̂` from the identity at `s_grid[0]`, one exponential
/// per interval evaluated at the interval midpoint.
pub fn integrate_strain(s_grid: &[f64], strain: impl FnMut(f64) -> Result<ScrewVector>) -> Result<Vec<Pose>> {
    integrate_strain_from(Pose::identity(), s_grid, strain)
}

/// As [`integrate_strain`], starting from an arbitrary base pose.
pub fn integrate_strain_from(
    base: Pose,
    s_grid: &[f64],
    mut strain: impl FnMut(f64) -> Result<ScrewVector>,
) -> Result<Vec<Pose>> {
    let mut poses = Vec::with_capacity(s_grid.len());
    let mut g = base;
    poses.push(g);
    for w in s_grid.windows(2) {
        let xi = strain(0.5 * (w[0] + w[1]))?;
        g = g.compose(&exp_se3(&xi, w[1] - w[0]));
        poses.push(g);
    }
    Ok(poses)
}

/// Poses `g(s)` on `s_grid` for the strain `B_q(s)q + ξ*(s)`.
pub fn forward_kinematics(
    dict: &BasisDictionary,
    q: &DVector<f64>,
    rod: &RodProperties,
    s_grid: &[f64],
) -> Result<Vec<Pose>> {
    dict.check_rod(rod)?;
    dict.check_coordinates(q)?;
    check_grid(s_grid, rod.length)?;
    integrate_strain(s_grid, |s| Ok(dict.deformation(q, s) + rod.stress_free(s)))
}

/// One half-interval of the collocation step: `E = exp(ξh)` and the
/// pieces of the Jacobian update `J ↦ Ad_{E⁻¹}·J + T(ξh)·h·B_q`.
///
/// Jacobians are stored column by column.
pub(crate) struct HalfStep {
    pub exp: Pose,
    pub ad_inv: Matrix6<f64>,
    pub tangent: Matrix6<f64>,
}

impl HalfStep {
    pub fn new(xi: &ScrewVector, h: f64) -> Self {
        let exp = exp_se3(xi, h);
        HalfStep {
            exp,
            ad_inv: adjoint_big_inv(&exp),
            tangent: right_jacobian(&(*xi * h)),
        }
    }

    /// Columns of `T(ξh)·h·B_q(m)` from the atom values at the midpoint.
    pub fn input_columns(&self, h: f64, values: &[f64], modes: &[usize], out: &mut Vec<Vector6<f64>>) {
        out.clear();
        out.extend(
            values
                .iter()
                .zip(modes)
                .map(|(&b, &mode)| self.tangent.column(mode) * (h * b)),
        );
    }

    pub fn advance(&self, jac: &mut [Vector6<f64>], input: &[Vector6<f64>]) {
        for (col, inp) in jac.iter_mut().zip(input) {
            *col = self.ad_inv * *col + inp;
        }
    }
}

pub(crate) fn columns_to_matrix(cols: &[Vector6<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(6, cols.len(), |i, j| cols[j][i])
}

/// Poses and body Jacobians `J(s)` (with `η(s) = J(s)·q̇`) on `s_grid`.
///
/// The Jacobian is the exact derivative of the discrete forward
/// kinematics, so it agrees with finite differences of
/// [`forward_kinematics`] on the same grid up to differencing error.
pub fn kinematics_on_grid(
    dict: &BasisDictionary,
    q: &DVector<f64>,
    rod: &RodProperties,
    s_grid: &[f64],
) -> Result<Vec<(Pose, DMatrix<f64>)>> {
    dict.check_rod(rod)?;
    dict.check_coordinates(q)?;
    check_grid(s_grid, rod.length)?;
    let modes = dict.column_modes();
    let mut g = Pose::identity();
    let mut jac = vec![Vector6::zeros(); dict.n_q()];
    let mut input = Vec::with_capacity(dict.n_q());
    let mut out = Vec::with_capacity(s_grid.len());
    out.push((g, columns_to_matrix(&jac)));
    for w in s_grid.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let half = 0.5 * (w[1] - w[0]);
        let xi = dict.deformation(q, m) + rod.stress_free(m);
        let step = HalfStep::new(&xi, half);
        step.input_columns(half, &dict.column_values(m), &modes, &mut input);
        step.advance(&mut jac, &input);
        step.advance(&mut jac, &input);
        g = g.compose(&step.exp).compose(&step.exp);
        out.push((g, columns_to_matrix(&jac)));
    }
    Ok(out)
}

/// Geometric Jacobian at `s`, integrated on a uniform grid of
/// `⌈DEFAULT_STEPS·s/L⌉` intervals.
pub fn jacobian(dict: &BasisDictionary, q: &DVector<f64>, rod: &RodProperties, s: f64) -> Result<DMatrix<f64>> {
    rod.check_domain(s)?;
    if s <= 0.0 {
        dict.check_coordinates(q)?;
        return Ok(DMatrix::zeros(6, dict.n_q()));
    }
    let grid = uniform_grid(s, jacobian_steps(rod, s));
    let mut all = kinematics_on_grid(dict, q, rod, &grid)?;
    Ok(all
        .pop()
        .map(|(_, j)| j)
        .unwrap_or_else(|| DMatrix::zeros(6, dict.n_q())))
}

/// Number of intervals [`jacobian`] uses to reach `s`.
pub fn jacobian_steps(rod: &RodProperties, s: f64) -> usize {
    ((DEFAULT_STEPS as f64 * s / rod.length).ceil() as usize).max(1)
}
