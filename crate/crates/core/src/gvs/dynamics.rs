//! Generalized-coordinate dynamics of a GVS rod and RK4 time integration.
//!
//! The equations of motion are the Galerkin projection of the body-frame
//! Cosserat balance `𝓜η̇ + ad*_η𝓜η = F` onto the Jacobian columns:
//!
//! `M_q q̈ = −K_q q − D_q q̇ + ∫B_qᵀB_τ τ + ∫Jᵀ𝓜Ad⁻¹_g𝓖 − ∫Jᵀ(𝓜J̇q̇ + ad*_η𝓜η)`
//!
//! All integrals use the composite midpoint rule on a fixed grid.

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector6};

use super::basis::BasisDictionary;
use super::kinematics::HalfStep;
use crate::error::{Error, Result};
use crate::liealg::{adjoint_big_inv, coadjoint_small, right_jacobian_apply, Pose, ScrewVector};
use crate::rodmodel::{
    actuation_column, damping_diagonal, inertia_diagonal, stiffness_diagonal, ActuatorRouting, RodProperties,
};

pub const DEFAULT_QUADRATURE_POINTS: usize = 200;
/// Largest accepted condition number of the generalized mass matrix.
pub const MAX_MASS_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
struct Cell {
    mid: f64,
    values: Vec<f64>,
    stress_free: ScrewVector,
    inertia: Vector6<f64>,
}

/// A rod with its basis, actuators and gravity, prepared for repeated
/// evaluation of the equations of motion.
#[derive(Clone, Debug)]
pub struct GvsModel {
    dict: BasisDictionary,
    rod: RodProperties,
    routing: Vec<ActuatorRouting>,
    gravity: ScrewVector,
    modes: Vec<usize>,
    cells: Vec<Cell>,
    h: f64,
    stiffness_q: DMatrix<f64>,
    damping_q: DMatrix<f64>,
    mass_scale: Vec<Vector6<f64>>,
}

/// Quantities evaluated at the quadrature midpoints for one `q`.
struct Sweep {
    poses: Vec<Pose>,
    /// Jacobian columns, `n_q` per cell.
    columns: Vec<Vector6<f64>>,
    strains: Vec<ScrewVector>,
    n: usize,
}

impl Sweep {
    fn jacobian(&self, cell: usize) -> &[Vector6<f64>] {
        &self.columns[cell * self.n..(cell + 1) * self.n]
    }
}

/// Time samples of an integrated trajectory.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub qdot: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl GvsModel {
    pub fn new(
        dict: BasisDictionary,
        rod: RodProperties,
        routing: Vec<ActuatorRouting>,
        gravity: ScrewVector,
    ) -> Result<Self> {
        Self::with_quadrature(dict, rod, routing, gravity, DEFAULT_QUADRATURE_POINTS)
    }

    pub fn with_quadrature(
        dict: BasisDictionary,
        rod: RodProperties,
        routing: Vec<ActuatorRouting>,
        gravity: ScrewVector,
        points: usize,
    ) -> Result<Self> {
        rod.validate()?;
        dict.check_rod(&rod)?;
        if dict.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        if points == 0 {
            return Err(Error::invalid("quadrature needs at least one point"));
        }
        if !gravity.is_finite() {
            return Err(Error::invalid("gravity twist must be finite"));
        }
        for r in &routing {
            r.validate(&rod)?;
        }
        let n = dict.n_q();
        let modes = dict.column_modes();
        let h = rod.length / points as f64;
        let mut cells = Vec::with_capacity(points);
        let mut stiffness_q = DMatrix::zeros(n, n);
        let mut damping_q = DMatrix::zeros(n, n);
        for k in 0..points {
            let mid = (k as f64 + 0.5) * h;
            let values = dict.column_values(mid);
            let sigma = stiffness_diagonal(&rod, mid)?;
            let psi = damping_diagonal(&rod, mid)?;
            for a in 0..n {
                for b in 0..n {
                    if modes[a] == modes[b] {
                        let w = h * values[a] * values[b];
                        stiffness_q[(a, b)] += w * sigma[modes[a]];
                        damping_q[(a, b)] += w * psi[modes[a]];
                    }
                }
            }
            cells.push(Cell {
                mid,
                values,
                stress_free: rod.stress_free(mid),
                inertia: inertia_diagonal(&rod, mid)?,
            });
        }
        let mass_scale = cells.iter().map(|c| c.inertia.map(|m| (h * m).sqrt())).collect();
        Ok(GvsModel {
            mass_scale,
            dict,
            rod,
            routing,
            gravity,
            modes,
            cells,
            h,
            stiffness_q,
            damping_q,
        })
    }

    pub fn dictionary(&self) -> &BasisDictionary {
        &self.dict
    }

    pub fn rod(&self) -> &RodProperties {
        &self.rod
    }

    pub fn routing(&self) -> &[ActuatorRouting] {
        &self.routing
    }

    pub fn n_q(&self) -> usize {
        self.modes.len()
    }

    /// `K_q = ∫B_qᵀΣB_q ds`
    pub fn stiffness_q(&self) -> &DMatrix<f64> {
        &self.stiffness_q
    }

    /// `D_q = ∫B_qᵀΨB_q ds`
    pub fn damping_q(&self) -> &DMatrix<f64> {
        &self.damping_q
    }

    fn strain(&self, cell: &Cell, q: &DVector<f64>) -> ScrewVector {
        cell.stress_free + self.rate(cell, q)
    }

    /// `B_q(m)·v` as a screw.
    fn rate(&self, cell: &Cell, v: &DVector<f64>) -> ScrewVector {
        let mut out = ScrewVector::zeros();
        for (j, (&b, &mode)) in cell.values.iter().zip(&self.modes).enumerate() {
            out[mode] += b * v[j];
        }
        out
    }

    fn sweep(&self, q: &DVector<f64>) -> Sweep {
        let n = self.n_q();
        let half = 0.5 * self.h;
        let mut g = Pose::identity();
        let mut jac = vec![Vector6::zeros(); n];
        let mut input = Vec::with_capacity(n);
        let mut sweep = Sweep {
            poses: Vec::with_capacity(self.cells.len()),
            columns: Vec::with_capacity(self.cells.len() * n),
            strains: Vec::with_capacity(self.cells.len()),
            n,
        };
        for cell in &self.cells {
            let xi = self.strain(cell, q);
            let step = HalfStep::new(&xi, half);
            step.input_columns(half, &cell.values, &self.modes, &mut input);
            step.advance(&mut jac, &input);
            let g_mid = g.compose(&step.exp);
            sweep.columns.extend_from_slice(&jac);
            step.advance(&mut jac, &input);
            g = g_mid.compose(&step.exp);
            sweep.poses.push(g_mid);
            sweep.strains.push(xi);
        }
        sweep
    }

    /// Body velocities `η = J·q̇` at the quadrature midpoints, without
    /// forming the Jacobians.
    fn velocities(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> Vec<Vector6<f64>> {
        let half = 0.5 * self.h;
        let mut eta = Vector6::zeros();
        let mut out = Vec::with_capacity(self.cells.len());
        for cell in &self.cells {
            let omega = self.strain(cell, q) * half;
            let ad_inv = adjoint_big_inv(&crate::liealg::exp_se3(&omega, 1.0));
            let input = right_jacobian_apply(&omega, &(self.rate(cell, qdot).0 * half));
            let mid = ad_inv * eta + input;
            eta = ad_inv * mid + input;
            out.push(mid);
        }
        out
    }

    fn mass_from(&self, sweep: &Sweep) -> DMatrix<f64> {
        let n = self.n_q();
        // Columns of `w` are the rows of √(h𝓜)·J, cell after cell.
        let mut w = DMatrix::zeros(n, 6 * self.cells.len());
        for (k, scale) in self.mass_scale.iter().enumerate() {
            let jac = sweep.jacobian(k);
            for i in 0..6 {
                let mut col = w.column_mut(6 * k + i);
                for (c, j) in jac.iter().enumerate() {
                    col[c] = scale[i] * j[i];
                }
            }
        }
        &w * w.transpose()
    }

    /// `M_q(q) = ∫Jᵀ𝓜J ds`
    pub fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.dict.check_coordinates(q)?;
        Ok(self.mass_from(&self.sweep(q)))
    }

    fn check_inputs(&self, q: &DVector<f64>, qdot: &DVector<f64>, tau: &[f64]) -> Result<()> {
        self.dict.check_coordinates(q)?;
        self.dict.check_coordinates(qdot)?;
        if tau.len() != self.routing.len() {
            return Err(Error::LengthMismatch {
                left: tau.len(),
                right: self.routing.len(),
            });
        }
        Ok(())
    }

    fn forces_from(&self, sweep: &Sweep, q: &DVector<f64>, qdot: &DVector<f64>, tau: &[f64]) -> Result<DVector<f64>> {
        let n = self.n_q();
        let mut f = -(&self.stiffness_q * q) - &self.damping_q * qdot;

        // J̇q̇ by a central difference of η along the direction of motion.
        let speed = qdot.amax();
        let convective: Vec<Vector6<f64>> = if speed > 0.0 {
            let eps = 1e-6 * q.amax().max(1.0) / speed;
            let plus = self.velocities(&(q + qdot * eps), qdot);
            let minus = self.velocities(&(q - qdot * eps), qdot);
            plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * eps)).collect()
        } else {
            vec![Vector6::zeros(); self.cells.len()]
        };

        let gravity = self.gravity.0.iter().any(|&v| v != 0.0);
        for (k, cell) in self.cells.iter().enumerate() {
            let jac = sweep.jacobian(k);
            let mut wrench = Vector6::zeros();
            if gravity {
                wrench += cell
                    .inertia
                    .component_mul(&(adjoint_big_inv(&sweep.poses[k]) * self.gravity.0));
            }
            if speed > 0.0 {
                let eta: Vector6<f64> = jac.iter().zip(qdot.iter()).map(|(c, v)| c * *v).sum();
                let momentum = cell.inertia.component_mul(&eta);
                wrench -= cell.inertia.component_mul(&convective[k]);
                wrench -= coadjoint_small(&ScrewVector(eta)) * momentum;
            }
            if wrench.iter().any(|&v| v != 0.0) {
                for (fc, col) in f.iter_mut().zip(jac) {
                    *fc += self.h * col.dot(&wrench);
                }
            }

            let mut act = Vector6::zeros();
            for (a, (route, &t)) in self.routing.iter().zip(tau).enumerate() {
                if t != 0.0 {
                    let col = actuation_column(self.rod.length, route, &sweep.strains[k], cell.mid).ok_or(
                        Error::DegenerateTangent {
                            actuator: a,
                            s: cell.mid,
                        },
                    )?;
                    act += col * t;
                }
            }
            if act.iter().any(|&v| v != 0.0) {
                for c in 0..n {
                    f[c] += self.h * cell.values[c] * act[self.modes[c]];
                }
            }
        }
        Ok(f)
    }

    /// Right-hand side of `M_q q̈ = f_gen`.
    pub fn generalized_forces(&self, q: &DVector<f64>, qdot: &DVector<f64>, tau: &[f64]) -> Result<DVector<f64>> {
        self.check_inputs(q, qdot, tau)?;
        self.forces_from(&self.sweep(q), q, qdot, tau)
    }

    /// `q̈` from the equations of motion.
    pub fn acceleration(&self, q: &DVector<f64>, qdot: &DVector<f64>, tau: &[f64]) -> Result<DVector<f64>> {
        self.check_inputs(q, qdot, tau)?;
        let sweep = self.sweep(q);
        let mass = self.mass_from(&sweep);
        let f = self.forces_from(&sweep, q, qdot, tau)?;
        solve_mass(mass, &f)
    }

    /// `½q̇ᵀM_q q̇ + ½qᵀK_q q`
    pub fn mechanical_energy(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> Result<f64> {
        let m = self.mass_matrix(q)?;
        self.dict.check_coordinates(qdot)?;
        Ok(0.5 * qdot.dot(&(&m * qdot)) + 0.5 * q.dot(&(&self.stiffness_q * q)))
    }

    /// Classical RK4 with fixed step `dt`, recording every
    /// `record_every`-th step (and the initial state).
    pub fn simulate(
        &self,
        q0: &DVector<f64>,
        qdot0: &DVector<f64>,
        input: impl Fn(f64) -> Vec<f64>,
        t_final: f64,
        dt: f64,
        record_every: usize,
    ) -> Result<Trajectory> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("time step must be positive"));
        }
        if !(t_final >= dt) {
            return Err(Error::invalid("final time must be at least one time step"));
        }
        if record_every == 0 {
            return Err(Error::invalid("record interval must be at least one step"));
        }
        self.dict.check_coordinates(q0)?;
        self.dict.check_coordinates(qdot0)?;
        let steps = (t_final / dt).round() as usize;
        let mut traj = Trajectory::default();
        let (mut q, mut v) = (q0.clone(), qdot0.clone());
        traj.times.push(0.0);
        traj.q.push(q.clone());
        traj.qdot.push(v.clone());
        for step in 0..steps {
            let t = step as f64 * dt;
            let tau0 = input(t);
            let tau_half = input(t + 0.5 * dt);
            let tau1 = input(t + dt);
            let a1 = self.acceleration(&q, &v, &tau0)?;
            let (q2, v2) = (&q + &v * (0.5 * dt), &v + &a1 * (0.5 * dt));
            let a2 = self.acceleration(&q2, &v2, &tau_half)?;
            let (q3, v3) = (&q + &v2 * (0.5 * dt), &v + &a2 * (0.5 * dt));
            let a3 = self.acceleration(&q3, &v3, &tau_half)?;
            let (q4, v4) = (&q + &v3 * dt, &v + &a3 * dt);
            let a4 = self.acceleration(&q4, &v4, &tau1)?;
            q += (&v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (dt / 6.0);
            v += (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (dt / 6.0);
            if q.iter().chain(v.iter()).any(|x| !x.is_finite()) {
                return Err(Error::Diverged { t: t + dt });
            }
            if (step + 1) % record_every == 0 {
                traj.times.push((step + 1) as f64 * dt);
                traj.q.push(q.clone());
                traj.qdot.push(v.clone());
            }
        }
        Ok(traj)
    }
}

fn solve_mass(mass: DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    let eig = SymmetricEigen::new(mass);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_MASS_CONDITION) {
        return Err(Error::SingularMass { condition });
    }
    let mut y = eig.eigenvectors.tr_mul(f);
    for (yi, lambda) in y.iter_mut().zip(eig.eigenvalues.iter()) {
        *yi /= lambda;
    }
    Ok(&eig.eigenvectors * y)
}

/// `q̈` for one state; builds a [`GvsModel`] on the default quadrature.
#[allow(clippy::too_many_arguments)]
pub fn generalized_dynamics(
    dict: &BasisDictionary,
    rod: &RodProperties,
    routing: &[ActuatorRouting],
    gravity: &ScrewVector,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    tau: &[f64],
) -> Result<DVector<f64>> {
    GvsModel::new(dict.clone(), rod.clone(), routing.to_vec(), *gravity)?.acceleration(q, qdot, tau)
}

/// RK4 trajectory recorded at every step.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    dict: &BasisDictionary,
    rod: &RodProperties,
    routing: &[ActuatorRouting],
    gravity: &ScrewVector,
    q0: &DVector<f64>,
    qdot0: &DVector<f64>,
    input: impl Fn(f64) -> Vec<f64>,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    GvsModel::new(dict.clone(), rod.clone(), routing.to_vec(), *gravity)?.simulate(q0, qdot0, input, t_final, dt, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvs::basis::Atom;
    use crate::gvs::kinematics::uniform_grid;

    fn model(gravity: bool) -> GvsModel {
        let rod = RodProperties::desk_cylinder();
        let dict = BasisDictionary::polynomial(1.0, 2).unwrap();
        let routing = vec![
            ActuatorRouting::longitudinal(0.05, 0.0),
            ActuatorRouting::helicoidal(0.05, 0.5, 1.0),
        ];
        let g = if gravity {
            ScrewVector::new([0.0, 0.0, 0.0, 0.0, 0.0, -9.81])
        } else {
            ScrewVector::zeros()
        };
        GvsModel::with_quadrature(dict, rod, routing, g, 50).unwrap()
    }

    fn pseudo_random(n: usize, seed: f64, scale: f64) -> DVector<f64> {
        DVector::from_fn(n, |i, _| scale * ((i as f64 + 1.0) * seed).sin())
    }

    #[test]
    fn rest_at_stress_free_state() {
        let m = model(false);
        let z = DVector::zeros(m.n_q());
        assert_eq!(m.acceleration(&z, &z, &[0.0, 0.0]).unwrap().amax(), 0.0);
    }

    #[test]
    fn stiffness_and_damping_are_symmetric_positive_definite() {
        let m = model(false);
        for mat in [m.stiffness_q(), m.damping_q()] {
            assert!((mat - mat.transpose()).amax() < 1e-12 * mat.amax());
            let eig = SymmetricEigen::new(mat.clone());
            assert!(eig.eigenvalues.min() > 0.0);
        }
    }

    #[test]
    fn mass_matrix_is_symmetric_and_matches_sweep() {
        let m = model(false);
        let q = pseudo_random(m.n_q(), 0.7, 0.3);
        let mass = m.mass_matrix(&q).unwrap();
        assert!((&mass - mass.transpose()).amax() < 1e-12 * mass.amax());
        // Midpoint Jacobians are the derivative of the midpoint poses.
        let sweep = m.sweep(&q);
        let h = 1e-6;
        for c in [0, 4, 8, 13, 17] {
            let mut e = DVector::zeros(m.n_q());
            e[c] = h;
            let (plus, minus) = (m.sweep(&(&q + &e)), m.sweep(&(&q - &e)));
            for k in [0, 17, 49] {
                let g = sweep.poses[k];
                let fd = (crate::liealg::log_se3(&g.relative_to(&plus.poses[k])).unwrap().0
                    - crate::liealg::log_se3(&g.relative_to(&minus.poses[k])).unwrap().0)
                    / (2.0 * h);
                assert!((fd - sweep.jacobian(k)[c]).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn linearization_at_rest() {
        let m = model(false);
        let n = m.n_q();
        let z: DVector<f64> = DVector::zeros(n);
        let tau = [0.0, 0.0];
        let mass = m.mass_matrix(&z).unwrap();
        let h = 1e-6;
        for c in 0..n {
            let mut e = DVector::zeros(n);
            e[c] = h;
            let dq = (m.generalized_forces(&e, &z, &tau).unwrap() - m.generalized_forces(&-&e, &z, &tau).unwrap())
                / (2.0 * h);
            let dv = (m.generalized_forces(&z, &e, &tau).unwrap() - m.generalized_forces(&z, &-&e, &tau).unwrap())
                / (2.0 * h);
            let kc = m.stiffness_q().column(c).into_owned();
            let dc = m.damping_q().column(c).into_owned();
            assert!((dq + &kc).amax() < 1e-6 * kc.amax().max(1.0));
            assert!((dv + &dc).amax() < 1e-6 * dc.amax().max(1.0));
        }
        let q = pseudo_random(n, 0.3, 1e-7);
        let v = pseudo_random(n, 0.9, 1e-7);
        let acc = m.acceleration(&q, &v, &tau).unwrap();
        let linear = mass
            .cholesky()
            .unwrap()
            .solve(&(-(m.stiffness_q() * &q) - m.damping_q() * &v));
        assert!((&acc - &linear).amax() < 1e-6 * linear.amax());
    }

    #[test]
    fn power_balance_of_conservative_terms() {
        // Without damping, input or gravity: q̇ᵀM q̈ + ½q̇ᵀṀq̇ + q̇ᵀKq = 0.
        let mut m = model(false);
        m.damping_q.fill(0.0);
        let n = m.n_q();
        let q = pseudo_random(n, 0.41, 0.2);
        let v = pseudo_random(n, 1.3, 0.5);
        let a = m.acceleration(&q, &v, &[0.0, 0.0]).unwrap();
        let h = 1e-5;
        let mdot = (m.mass_matrix(&(&q + &v * h)).unwrap() - m.mass_matrix(&(&q - &v * h)).unwrap()) / (2.0 * h);
        let mass = m.mass_matrix(&q).unwrap();
        let elastic = v.dot(&(m.stiffness_q() * &q));
        let inertial = v.dot(&(&mass * &a));
        let rate = inertial + 0.5 * v.dot(&(&mdot * &v)) + elastic;
        assert!(rate.abs() < 1e-8 * elastic.abs(), "{rate} vs {elastic}");
    }

    #[test]
    fn velocity_terms_match_christoffel_free_form() {
        // C q̇ = Ṁq̇ − ½∂_q(q̇ᵀMq̇), both derivatives by central differences.
        let m = model(false);
        let n = m.n_q();
        let q = pseudo_random(n, 0.57, 0.3);
        let v = pseudo_random(n, 1.7, 0.8);
        let z = DVector::zeros(n);
        let tau = [0.0, 0.0];
        let ours = -(m.generalized_forces(&q, &v, &tau).unwrap() - m.generalized_forces(&q, &z, &tau).unwrap())
            - m.damping_q() * &v;
        let h = 1e-5;
        let mass = |x: &DVector<f64>| m.mass_matrix(x).unwrap();
        let mdot = (mass(&(&q + &v * h)) - mass(&(&q - &v * h))) / (2.0 * h);
        let mut oracle = &mdot * &v;
        for c in 0..n {
            let mut e = DVector::zeros(n);
            e[c] = h;
            let kin = |x: &DVector<f64>| v.dot(&(mass(x) * &v));
            oracle[c] -= 0.5 * (kin(&(&q + &e)) - kin(&(&q - &e))) / (2.0 * h);
        }
        assert!((&ours - &oracle).amax() < 1e-6 * oracle.amax(), "{ours} vs {oracle}");
    }

    #[test]
    fn gravity_bends_horizontal_rod_downwards() {
        let m = model(true);
        let z = DVector::zeros(m.n_q());
        let a = m.acceleration(&z, &z, &[0.0, 0.0]).unwrap();
        let poses = |q: &DVector<f64>| {
            crate::gvs::kinematics::forward_kinematics(m.dictionary(), q, m.rod(), &uniform_grid(1.0, 20)).unwrap()
        };
        let tip = poses(&(&a * 1e-4)).last().unwrap().position;
        assert!(tip.z < 0.0, "{tip}");
    }

    #[test]
    fn singular_mass_detected() {
        let rod = RodProperties::desk_cylinder();
        let mut dict = BasisDictionary::new(1.0).unwrap();
        dict.push(0, Atom::Polynomial { degree: 0 }).unwrap();
        dict.push(
            0,
            Atom::Sampled {
                abscissae: vec![0.0, 1.0],
                values: vec![1.0, 1.0],
            },
        )
        .unwrap();
        let m = GvsModel::with_quadrature(dict, rod, vec![], ScrewVector::zeros(), 20).unwrap();
        let z = DVector::zeros(2);
        assert!(matches!(m.acceleration(&z, &z, &[]), Err(Error::SingularMass { .. })));
    }

    #[test]
    fn zero_input_from_rest_stays_put() {
        let m = model(false);
        let z = DVector::zeros(m.n_q());
        let traj = m.simulate(&z, &z, |_| vec![0.0, 0.0], 0.01, 1e-3, 1).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.q.iter().all(|q| q.amax() == 0.0));
    }
}
