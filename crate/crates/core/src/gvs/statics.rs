//! Pointwise static equilibrium `ξ = Σ⁻¹·B_τ(ξ, s)·τ + ξ*` of an
//! actuated rod without external loads.

use nalgebra::Vector6;

use crate::error::{Error, Result};
use crate::liealg::ScrewVector;
use crate::rodmodel::{actuation_column, stiffness_diagonal, ActuatorRouting, RodProperties};

pub const RELAXATION: f64 = 0.5;
pub const TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;

/// Converged equilibrium at one abscissa.
#[derive(Clone, Debug)]
pub struct StaticPoint {
    pub strain: ScrewVector,
    pub iterations: usize,
    /// `‖ξ − F(ξ)‖∞` of every iterate, last one below [`TOLERANCE`].
    pub residuals: Vec<f64>,
}

/// Equilibrium strain field, solved lazily at each requested abscissa.
#[derive(Clone, Debug)]
pub struct StaticSolution {
    rod: RodProperties,
    routing: Vec<ActuatorRouting>,
    tau: Vec<f64>,
}

pub fn static_strain_solve(rod: &RodProperties, routing: &[ActuatorRouting], tau: &[f64]) -> Result<StaticSolution> {
    rod.validate()?;
    if routing.len() != tau.len() {
        return Err(Error::LengthMismatch {
            left: tau.len(),
            right: routing.len(),
        });
    }
    for r in routing {
        r.validate(rod)?;
    }
    if tau.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("actuator inputs must be finite"));
    }
    Ok(StaticSolution {
        rod: rod.clone(),
        routing: routing.to_vec(),
        tau: tau.to_vec(),
    })
}

impl StaticSolution {
    pub fn at(&self, s: f64) -> Result<ScrewVector> {
        self.solve_at(s).map(|p| p.strain)
    }

    pub fn sample(&self, s_grid: &[f64]) -> Result<Vec<ScrewVector>> {
        s_grid.iter().map(|&s| self.at(s)).collect()
    }

    fn map(&self, xi: &ScrewVector, s: f64, compliance: &Vector6<f64>) -> Result<ScrewVector> {
        let mut wrench = Vector6::zeros();
        for (a, (route, &t)) in self.routing.iter().zip(&self.tau).enumerate() {
            if t != 0.0 {
                let col = actuation_column(self.rod.length, route, xi, s)
                    .ok_or(Error::DegenerateTangent { actuator: a, s })?;
                wrench += col * t;
            }
        }
        Ok(ScrewVector(compliance.component_mul(&wrench)) + self.rod.stress_free(s))
    }

    /// Damped fixed-point iteration started from `ξ*(s)`.
    pub fn solve_at(&self, s: f64) -> Result<StaticPoint> {
        let compliance = stiffness_diagonal(&self.rod, s)?.map(|k| 1.0 / k);
        let mut xi = self.rod.stress_free(s);
        let mut residuals = Vec::new();
        for iteration in 1..=MAX_ITERATIONS {
            let target = self.map(&xi, s, &compliance)?;
            let residual = (target - xi).max_abs();
            residuals.push(residual);
            if residual < TOLERANCE {
                return Ok(StaticPoint {
                    strain: xi,
                    iterations: iteration,
                    residuals,
                });
            }
            xi = xi + (target - xi) * RELAXATION;
        }
        let residual = (self.map(&xi, s, &compliance)? - xi).max_abs();
        Err(Error::NoConvergence {
            s,
            residual,
            iterate: Box::new(xi),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_input_returns_stress_free_in_one_iteration() {
        let rod = RodProperties::desk_cylinder();
        let routing = [
            ActuatorRouting::longitudinal(0.05, 0.0),
            ActuatorRouting::helicoidal(0.05, 0.0, 1.0),
        ];
        let sol = static_strain_solve(&rod, &routing, &[0.0, 0.0]).unwrap();
        for s in [0.0, 0.5, 1.0] {
            let p = sol.solve_at(s).unwrap();
            assert_eq!(p.strain, rod.stress_free(s));
            assert_eq!(p.iterations, 1);
        }
    }

    #[test]
    fn centerline_tension_stretches() {
        let rod = RodProperties::desk_cylinder();
        let sol = static_strain_solve(&rod, &[ActuatorRouting::longitudinal(0.0, 0.0)], &[1.0]).unwrap();
        let xi = sol.at(0.3).unwrap();
        let ea = rod.young_modulus * std::f64::consts::PI * 0.01;
        assert!((xi[3] - (1.0 + 1.0 / ea)).abs() < TOLERANCE);
        assert_relative_eq!(xi[3] - 1.0, 3.1831e-5, max_relative = 1e-4);
        for i in [0, 1, 2, 4, 5] {
            assert_eq!(xi[i], 0.0);
        }
    }

    #[test]
    fn residual_decreases_monotonically() {
        for rod in [RodProperties::desk_cylinder(), RodProperties::desk_cone()] {
            let routing = [
                ActuatorRouting::longitudinal(0.008, 0.0),
                ActuatorRouting::helicoidal(0.008, 1.0, 1.0),
            ];
            let sol = static_strain_solve(&rod, &routing, &[0.3, 0.2]).unwrap();
            for k in 0..=10 {
                let p = sol.solve_at(k as f64 / 10.0).unwrap();
                assert!(p.residuals.windows(2).all(|w| w[1] <= w[0]), "{:?}", p.residuals);
                assert!(*p.residuals.last().unwrap() < TOLERANCE);
            }
        }
    }

    #[test]
    fn helical_cable_gives_constant_twist() {
        let rod = RodProperties::desk_cylinder();
        let sol = static_strain_solve(&rod, &[ActuatorRouting::helicoidal(0.08, 0.0, 1.0)], &[1.0]).unwrap();
        let twist: Vec<f64> = (0..=100).map(|k| sol.at(k as f64 / 100.0).unwrap()[0]).collect();
        let mean = twist.iter().sum::<f64>() / twist.len() as f64;
        let spread = twist.iter().map(|t| (t - mean).abs()).fold(0.0, f64::max);
        assert!(mean.abs() > 0.0);
        assert!(spread < 1e-3 * mean.abs(), "{spread} vs {mean}");
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let rod = RodProperties::desk_cylinder();
        assert!(static_strain_solve(&rod, &[ActuatorRouting::longitudinal(0.0, 0.0)], &[]).is_err());
    }
}
