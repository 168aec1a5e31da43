//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use nalgebra::DVector;
use rodspectra::gvs::{BasisDictionary, GvsModel};
use rodspectra::rodmodel::{ActuatorRouting, RodProperties};
use rodspectra::spectra::StrainGrid;
use rodspectra::ScrewVector;

/// Three straight tendons and four helicoidal chambers.
pub fn h_support_routing() -> Vec<ActuatorRouting> {
    let mut routing: Vec<ActuatorRouting> = (0..3)
        .map(|i| ActuatorRouting::longitudinal(0.05, 2.0 * PI * i as f64 / 3.0))
        .collect();
    for i in 0..4 {
        let turns = if i % 2 == 0 { 1.0 } else { -1.0 };
        routing.push(ActuatorRouting::helicoidal(0.07, PI / 4.0 + PI * i as f64 / 2.0, turns));
    }
    routing
}

pub fn desk_model(order: u32, quadrature: usize) -> GvsModel {
    let rod = RodProperties::desk_cylinder();
    let dict = BasisDictionary::polynomial(rod.length, order).expect("valid order");
    GvsModel::with_quadrature(dict, rod, h_support_routing(), ScrewVector::zeros(), quadrature).expect("valid model")
}

/// A smooth non-trivial coefficient vector.
pub fn sample_q(n_q: usize) -> DVector<f64> {
    DVector::from_fn(n_q, |i, _| 0.3 * ((i + 1) as f64).sin())
}

/// Travelling-wave strain on `points` midpoints of a 1 m rod over `frames` frames.
pub fn wave_grid(points: usize, frames: usize) -> StrainGrid {
    let lambda = 1.0 / points as f64;
    let rows = (0..frames)
        .map(|m| {
            let t = m as f64 * 0.01;
            (0..points)
                .map(|n| {
                    let s = (n as f64 + 0.5) * lambda;
                    ScrewVector::new([
                        0.1 * (2.0 * PI * s).cos(),
                        (6.0 * s - 3.0 * t).sin(),
                        0.5 * s * (2.0 * t).cos(),
                        1.0 + 0.01 * s,
                        0.02 * (4.0 * s).sin(),
                        0.0,
                    ])
                })
                .collect()
        })
        .collect();
    StrainGrid::new(rows, lambda, 0.01, 1.0)
        .and_then(|g| g.with_abscissa_offset(0.5))
        .expect("valid grid")
}
