//! Cross-section properties, constitutive matrices and actuator routing.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{adjoint_big_inv, Pose, ScrewVector};

/// Strain of the unloaded rod, affine in s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StressFreeStrain {
    Uniform([f64; 6]),
    Affine { base: [f64; 6], tip: [f64; 6] },
}

impl Default for StressFreeStrain {
    fn default() -> Self {
        StressFreeStrain::Uniform([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    }
}

impl StressFreeStrain {
    pub fn at(&self, s: f64, length: f64) -> ScrewVector {
        match self {
            StressFreeStrain::Uniform(v) => ScrewVector::new(*v),
            StressFreeStrain::Affine { base, tip } => {
                let u = s / length;
                let a = ScrewVector::new(*base);
                let b = ScrewVector::new(*tip);
                a * (1.0 - u) + b * u
            }
        }
    }
}

/// Geometry and material of a rod with circular, linearly tapered section.
///
/// All quantities are SI: lengths in m, density in kg/m³, moduli in Pa,
/// damping in Pa·s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodProperties {
    pub length: f64,
    pub base_radius: f64,
    /// Radius is `base_radius·(1 + taper·s/L)`; `taper ∈ (−1, 0]`.
    #[serde(default)]
    pub taper: f64,
    pub density: f64,
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub damping: f64,
    #[serde(default)]
    pub stress_free_strain: StressFreeStrain,
}

/// Area and second moments of a cross-section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionProps {
    pub area: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl RodProperties {
    /// The simulated cylindrical support arm used throughout the examples:
    /// L = 1 m, R = 0.1 m, ρ = 1000 kg/m³, E = 1 MPa, ν = 0.5, β = 0.01 MPa·s.
    pub fn desk_cylinder() -> Self {
        RodProperties {
            length: 1.0,
            base_radius: 0.1,
            taper: 0.0,
            density: 1000.0,
            young_modulus: 1.0e6,
            poisson_ratio: 0.5,
            damping: 1.0e4,
            stress_free_strain: StressFreeStrain::default(),
        }
    }

    /// Conical variant with the radius dropping to 10% at the tip.
    pub fn desk_cone() -> Self {
        RodProperties {
            taper: -0.9,
            ..Self::desk_cylinder()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.length > 0.0, "length must be positive"),
            (self.base_radius > 0.0, "base radius must be positive"),
            (self.taper > -1.0 && self.taper <= 0.0, "taper must lie in (-1, 0]"),
            (self.density > 0.0, "density must be positive"),
            (self.young_modulus > 0.0, "Young modulus must be positive"),
            (self.damping >= 0.0, "damping must be non-negative"),
            (
                (0.0..=0.5).contains(&self.poisson_ratio),
                "Poisson ratio must lie in [0, 0.5]",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::invalid(msg));
            }
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    pub fn radius(&self, s: f64) -> f64 {
        self.base_radius * (1.0 + self.taper * s / self.length)
    }

    pub fn stress_free(&self, s: f64) -> ScrewVector {
        self.stress_free_strain.at(s, self.length)
    }

    pub(crate) fn check_domain(&self, s: f64) -> Result<()> {
        // Allow for rounding in grids built as k·L/n.
        let slack = 1e-12 * self.length;
        if !(s >= -slack && s <= self.length + slack) {
            return Err(Error::OutOfDomain { s, length: self.length });
        }
        Ok(())
    }
}

pub fn cross_section_props(rod: &RodProperties, s: f64) -> Result<SectionProps> {
    rod.check_domain(s)?;
    let r = rod.radius(s);
    let r2 = r * r;
    let j = PI * r2 * r2 / 4.0;
    Ok(SectionProps {
        area: PI * r2,
        jx: 2.0 * j,
        jy: j,
        jz: j,
    })
}

/// `Σ = diag(G·Jx, E·Jy, E·Jz, E·A, G·A, G·A)`
pub fn stiffness_matrix(rod: &RodProperties, s: f64) -> Result<Matrix6<f64>> {
    Ok(Matrix6::from_diagonal(&stiffness_diagonal(rod, s)?))
}

pub fn stiffness_diagonal(rod: &RodProperties, s: f64) -> Result<Vector6<f64>> {
    let p = cross_section_props(rod, s)?;
    let (e, g) = (rod.young_modulus, rod.shear_modulus());
    Ok(Vector6::new(
        g * p.jx,
        e * p.jy,
        e * p.jz,
        e * p.area,
        g * p.area,
        g * p.area,
    ))
}

/// `Ψ = β·diag(Jx, 3Jy, 3Jz, 3A, A, A)`
pub fn damping_matrix(rod: &RodProperties, s: f64) -> Result<Matrix6<f64>> {
    Ok(Matrix6::from_diagonal(&damping_diagonal(rod, s)?))
}

pub fn damping_diagonal(rod: &RodProperties, s: f64) -> Result<Vector6<f64>> {
    let p = cross_section_props(rod, s)?;
    let b = rod.damping;
    Ok(Vector6::new(
        b * p.jx,
        3.0 * b * p.jy,
        3.0 * b * p.jz,
        3.0 * b * p.area,
        b * p.area,
        b * p.area,
    ))
}

/// `𝓜 = ρ·diag(Jx, Jy, Jz, A, A, A)`
pub fn inertia_matrix(rod: &RodProperties, s: f64) -> Result<Matrix6<f64>> {
    Ok(Matrix6::from_diagonal(&inertia_diagonal(rod, s)?))
}

pub fn inertia_diagonal(rod: &RodProperties, s: f64) -> Result<Vector6<f64>> {
    let p = cross_section_props(rod, s)?;
    let r = rod.density;
    Ok(Vector6::new(
        r * p.jx,
        r * p.jy,
        r * p.jz,
        r * p.area,
        r * p.area,
        r * p.area,
    ))
}

/// Distributed gravity wrench in the body frame, `𝓜·Ad⁻¹_g·𝓖`.
pub fn gravity_wrench(rod: &RodProperties, g: &Pose, s: f64, gravity_twist: &ScrewVector) -> Result<ScrewVector> {
    let m = inertia_diagonal(rod, s)?;
    let body = adjoint_big_inv(g) * gravity_twist.0;
    Ok(ScrewVector(m.component_mul(&body)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingKind {
    Longitudinal,
    Helicoidal,
}

/// Path of one cable or chamber relative to the backbone.
///
/// The routing point in the section plane is
/// `offset·[0, cos φ(s), sin φ(s)]` with `φ(s) = phase + 2π·turns·s/L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActuatorRouting {
    pub kind: RoutingKind,
    pub offset_radius: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub turns: f64,
}

impl ActuatorRouting {
    pub fn longitudinal(offset_radius: f64, phase: f64) -> Self {
        ActuatorRouting {
            kind: RoutingKind::Longitudinal,
            offset_radius,
            phase,
            turns: 0.0,
        }
    }

    pub fn helicoidal(offset_radius: f64, phase: f64, turns: f64) -> Self {
        ActuatorRouting {
            kind: RoutingKind::Helicoidal,
            offset_radius,
            phase,
            turns,
        }
    }

    fn effective_turns(&self) -> f64 {
        match self.kind {
            RoutingKind::Longitudinal => 0.0,
            RoutingKind::Helicoidal => self.turns,
        }
    }

    pub fn angle(&self, s: f64, length: f64) -> f64 {
        self.phase + 2.0 * PI * self.effective_turns() * s / length
    }

    /// Routing point and its s-derivative in the body frame.
    pub fn offset_and_derivative(&self, s: f64, length: f64) -> (Vector3<f64>, Vector3<f64>) {
        let phi = self.angle(s, length);
        let rate = 2.0 * PI * self.effective_turns() / length;
        let (sin, cos) = phi.sin_cos();
        let d = Vector3::new(0.0, cos, sin) * self.offset_radius;
        let dd = Vector3::new(0.0, -sin, cos) * (self.offset_radius * rate);
        (d, dd)
    }

    pub fn validate(&self, rod: &RodProperties) -> Result<()> {
        if !(self.offset_radius >= 0.0) {
            return Err(Error::invalid("actuator offset must be non-negative"));
        }
        // The radius is affine and non-increasing, so the tip is the binding case.
        let min_radius = rod.radius(0.0).min(rod.radius(rod.length));
        if self.offset_radius > min_radius {
            return Err(Error::invalid(format!(
                "actuator offset {} exceeds the section radius {}",
                self.offset_radius, min_radius
            )));
        }
        if self.kind == RoutingKind::Helicoidal && !self.turns.is_finite() {
            return Err(Error::invalid("helix turns must be finite"));
        }
        Ok(())
    }
}

/// Cable-tension wrench columns `[d × t; t]`, one per actuator.
///
/// `t` is the unit tangent of the cable in the body frame,
/// `(σ + κ × d + d′)/‖σ + κ × d + d′‖`.
pub fn actuation_matrix(
    rod: &RodProperties,
    routing: &[ActuatorRouting],
    xi: &ScrewVector,
    s: f64,
) -> Result<DMatrix<f64>> {
    rod.check_domain(s)?;
    let mut b = DMatrix::zeros(6, routing.len());
    for (a, route) in routing.iter().enumerate() {
        let col = actuation_column(rod.length, route, xi, s).ok_or(Error::DegenerateTangent { actuator: a, s })?;
        b.fixed_view_mut::<6, 1>(0, a).copy_from(&col);
    }
    Ok(b)
}

pub(crate) fn actuation_column(length: f64, route: &ActuatorRouting, xi: &ScrewVector, s: f64) -> Option<Vector6<f64>> {
    let (d, dd) = route.offset_and_derivative(s, length);
    let path = xi.linear() + xi.angular().cross(&d) + dd;
    let n = path.norm();
    if !(n >= 1e-12) {
        return None;
    }
    let t = path / n;
    let m = d.cross(&t);
    Some(Vector6::new(m.x, m.y, m.z, t.x, t.y, t.z))
}
