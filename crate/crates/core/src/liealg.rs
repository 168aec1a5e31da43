//! SE(3) and se(3) primitives.
//!
//! Twists, strains and wrenches are stored as 6-vectors with the angular
//! part first: `[κx, κy, κz, σx, σy, σz]` for a strain, `[wx, wy, wz, vx, vy, vz]`
//! for a velocity, `[mx, my, mz, fx, fy, fz]` for a wrench. All adjoint
//! operators follow the same ordering.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Below this rotation angle the exponential and logarithm use Taylor series.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Distance from π at which the logarithm reports a singular rotation.
pub const SINGULAR_ANGLE_TOL: f64 = 1e-9;

const ORTHONORMAL_TOL: f64 = 1e-9;

// Coefficients with a cancelling closed form switch to series well before
// SMALL_ANGLE; the series error is O(θ⁶) there.
const SERIES_ANGLE: f64 = 1e-3;

/// A 6-vector with angular part first.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ScrewVector(pub Vector6<f64>);

impl ScrewVector {
    pub fn zeros() -> Self {
        ScrewVector(Vector6::zeros())
    }

    pub fn new(values: [f64; 6]) -> Self {
        ScrewVector(Vector6::from_column_slice(&values))
    }

    pub fn from_parts(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        ScrewVector(Vector6::new(
            angular.x, angular.y, angular.z, linear.x, linear.y, linear.z,
        ))
    }

    pub fn angular(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn linear(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }

    pub fn as_vector(&self) -> &Vector6<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.0[0], self.0[1], self.0[2], self.0[3], self.0[4], self.0[5]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

impl From<Vector6<f64>> for ScrewVector {
    fn from(v: Vector6<f64>) -> Self {
        ScrewVector(v)
    }
}

impl From<[f64; 6]> for ScrewVector {
    fn from(v: [f64; 6]) -> Self {
        ScrewVector::new(v)
    }
}

impl Add for ScrewVector {
    type Output = ScrewVector;
    fn add(self, rhs: Self) -> Self {
        ScrewVector(self.0 + rhs.0)
    }
}

impl AddAssign for ScrewVector {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for ScrewVector {
    type Output = ScrewVector;
    fn sub(self, rhs: Self) -> Self {
        ScrewVector(self.0 - rhs.0)
    }
}

impl Neg for ScrewVector {
    type Output = ScrewVector;
    fn neg(self) -> Self {
        ScrewVector(-self.0)
    }
}

impl Mul<f64> for ScrewVector {
    type Output = ScrewVector;
    fn mul(self, rhs: f64) -> Self {
        ScrewVector(self.0 * rhs)
    }
}

impl Index<usize> for ScrewVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ScrewVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Rigid transformation of one backbone cross-section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    /// Builds a pose, checking that `rotation` is a proper rotation.
    pub fn new(rotation: Matrix3<f64>, position: Vector3<f64>) -> Result<Self> {
        let pose = Pose { rotation, position };
        pose.validate()?;
        Ok(pose)
    }

    pub fn from_translation(position: Vector3<f64>) -> Self {
        Pose {
            rotation: Matrix3::identity(),
            position,
        }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Pose {
            rotation,
            position: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rotation.iter().chain(self.position.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("pose has non-finite entries"));
        }
        let ortho = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        if ortho > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (deviation {ortho:.3e})"
            )));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invalid(format!("rotation determinant is {det}")));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            position: -(rt * self.position),
        }
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            position: self.rotation * other.position + self.position,
        }
    }

    /// `self⁻¹ · other`
    pub fn relative_to(&self, other: &Pose) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt * other.rotation,
            position: rt * (other.position - self.position),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.position);
        m
    }

    pub fn from_homogeneous(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = (m[(3, 0)].abs() + m[(3, 1)].abs() + m[(3, 2)].abs()).max((m[(3, 3)] - 1.0).abs());
        if bottom > ORTHONORMAL_TOL {
            return Err(Error::invalid("homogeneous matrix has an invalid bottom row"));
        }
        Pose::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn hat(v: &ScrewVector) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&v.angular()));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&v.linear());
    m
}

/// Inverse of [`hat`]; rejects matrices that are not in se(3).
pub fn vee(m: &Matrix4<f64>) -> Result<ScrewVector> {
    let sym = m[(0, 0)]
        .abs()
        .max(m[(1, 1)].abs())
        .max(m[(2, 2)].abs())
        .max((m[(0, 1)] + m[(1, 0)]).abs())
        .max((m[(0, 2)] + m[(2, 0)]).abs())
        .max((m[(1, 2)] + m[(2, 1)]).abs());
    let bottom = (0..4).map(|j| m[(3, j)].abs()).fold(0.0, f64::max);
    let deviation = sym.max(bottom);
    if deviation > ORTHONORMAL_TOL || !deviation.is_finite() {
        return Err(Error::NotLieAlgebraElement { deviation });
    }
    Ok(ScrewVector::new([
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
        m[(0, 3)],
        m[(1, 3)],
        m[(2, 3)],
    ]))
}

/// Closed-form exponential of `hat(xi)·s`.
pub fn exp_se3(xi: &ScrewVector, s: f64) -> Pose {
    let w = xi.angular() * s;
    let v = xi.linear() * s;
    let theta = w.norm();
    let th2 = theta * theta;
    let (a, b) = if theta < SMALL_ANGLE {
        (
            1.0 - th2 / 6.0 + th2 * th2 / 120.0,
            0.5 - th2 / 24.0 + th2 * th2 / 720.0,
        )
    } else {
        let half = (0.5 * theta).sin();
        (theta.sin() / theta, 2.0 * half * half / th2)
    };
    let c = if theta < SERIES_ANGLE {
        1.0 / 6.0 - th2 / 120.0 + th2 * th2 / 5040.0
    } else {
        (theta - theta.sin()) / (th2 * theta)
    };
    let wx = skew(&w);
    let wx2 = wx * wx;
    let rotation = Matrix3::identity() + wx * a + wx2 * b;
    let left_jac = Matrix3::identity() + wx * b + wx2 * c;
    Pose {
        rotation,
        position: left_jac * v,
    }
}

/// Rotation angle of `r` in [0, π], with the trace argument clamped.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    (0.5 * (r.trace() - 1.0)).clamp(-1.0, 1.0).acos()
}

fn log_so3(r: &Matrix3<f64>) -> (Vector3<f64>, f64) {
    let theta = rotation_angle(r);
    let anti = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if theta < SMALL_ANGLE {
        let th2 = theta * theta;
        // θ / sin θ
        let k = 1.0 + th2 / 6.0 + 7.0 * th2 * th2 / 360.0;
        return (anti * (0.5 * k), theta);
    }
    if theta > 3.0 {
        // Near π the antisymmetric part vanishes; take the axis from the
        // symmetric part and its sign from the antisymmetric one.
        let one_minus_cos = 1.0 - theta.cos();
        let b = (r + r.transpose()) * 0.5 - Matrix3::identity() * theta.cos();
        let j = (0..3)
            .max_by(|&i, &k| b[(i, i)].partial_cmp(&b[(k, k)]).unwrap())
            .unwrap_or(0);
        let mut axis = b.column(j).into_owned() / one_minus_cos;
        axis /= axis.norm();
        if axis.dot(&anti) < 0.0 {
            axis = -axis;
        }
        return (axis * theta, theta);
    }
    (anti * (0.5 * theta / theta.sin()), theta)
}

/// Logarithm of a pose, returned as the vee of the se(3) element.
pub fn log_se3(g: &Pose) -> Result<ScrewVector> {
    let (w, theta) = log_so3(&g.rotation);
    if PI - theta < SINGULAR_ANGLE_TOL {
        return Err(Error::SingularRotation { angle: theta });
    }
    let th2 = theta * theta;
    let d = if theta < SERIES_ANGLE {
        1.0 / 12.0 + th2 / 720.0 + th2 * th2 / 30240.0
    } else {
        let half = 0.5 * theta;
        (1.0 - half / half.tan()) / th2
    };
    let wx = skew(&w);
    let inv_left_jac = Matrix3::identity() - wx * 0.5 + wx * wx * d;
    Ok(ScrewVector::from_parts(w, inv_left_jac * g.position))
}

/// `Ad_g = [[R, 0], [r̃R, R]]`
pub fn adjoint_big(g: &Pose) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    let rr = skew(&g.position) * g.rotation;
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&g.rotation);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&rr);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&g.rotation);
    m
}

/// `Ad_g⁻¹ = Ad_{g⁻¹}`, built without forming the inverse pose.
pub fn adjoint_big_inv(g: &Pose) -> Matrix6<f64> {
    let rt = g.rotation.transpose();
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-(rt * skew(&g.position))));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&rt);
    m
}

/// `Ad*_g = [[R, r̃R], [0, R]]`
pub fn coadjoint_big(g: &Pose) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    let rr = skew(&g.position) * g.rotation;
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&g.rotation);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&rr);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&g.rotation);
    m
}

/// `ad_v = [[κ̃, 0], [σ̃, κ̃]]`
pub fn adjoint_small(v: &ScrewVector) -> Matrix6<f64> {
    let k = skew(&v.angular());
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&k);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(&v.linear()));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&k);
    m
}

/// `ad*_v = [[κ̃, σ̃], [0, κ̃]]`
pub fn coadjoint_small(v: &ScrewVector) -> Matrix6<f64> {
    let k = skew(&v.angular());
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&k);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew(&v.linear()));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&k);
    m
}

/// Right-trivialized tangent of the exponential,
/// `T(Ω) = Σ (−ad_Ω)ⁿ / (n+1)!`, so that
/// `exp(Ω + δ) ≈ exp(Ω)·exp(T(Ω)δ)` to first order in δ.
pub fn right_jacobian(omega: &ScrewVector) -> Matrix6<f64> {
    let (a, q) = tangent_blocks(omega);
    let mut t = Matrix6::zeros();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&a);
    t.fixed_view_mut::<3, 3>(3, 0).copy_from(&q);
    t.fixed_view_mut::<3, 3>(3, 3).copy_from(&a);
    t
}

/// `T(Ω)·v` without forming the 6×6 matrix.
pub fn right_jacobian_apply(omega: &ScrewVector, v: &Vector6<f64>) -> Vector6<f64> {
    let (a, q) = tangent_blocks(omega);
    let ang = v.fixed_rows::<3>(0).into_owned();
    let lin = v.fixed_rows::<3>(3).into_owned();
    let top = a * ang;
    let bottom = q * ang + a * lin;
    Vector6::new(top.x, top.y, top.z, bottom.x, bottom.y, bottom.z)
}

/// Diagonal and lower-left blocks of `T(Ω)`, which is block
/// lower-triangular with equal diagonal blocks.
fn tangent_blocks(omega: &ScrewVector) -> (Matrix3<f64>, Matrix3<f64>) {
    let phi = skew(&-omega.angular());
    let rho = skew(&-omega.linear());
    let theta2 = omega.angular().norm_squared();
    let theta = theta2.sqrt();
    let (c1, c2, c3, c4) = if theta < SERIES_ANGLE * 10.0 {
        let t4 = theta2 * theta2;
        (
            0.5 - theta2 / 24.0 + t4 / 720.0,
            1.0 / 6.0 - theta2 / 120.0 + t4 / 5040.0,
            1.0 / 24.0 - theta2 / 720.0 + t4 / 40320.0,
            1.0 / 120.0 - theta2 / 2520.0 + t4 / 120960.0,
        )
    } else {
        let (sin, cos) = theta.sin_cos();
        let t3 = theta2 * theta;
        (
            (1.0 - cos) / theta2,
            (theta - sin) / t3,
            (theta2 + 2.0 * cos - 2.0) / (2.0 * theta2 * theta2),
            (2.0 * theta - 3.0 * sin + theta * cos) / (2.0 * theta2 * t3),
        )
    };
    let phi2 = phi * phi;
    let a = Matrix3::identity() + phi * c1 + phi2 * c2;
    let pr = phi * rho;
    let rp = rho * phi;
    let prp = pr * phi;
    let q = rho * 0.5 + (pr + rp + prp) * c2 + (phi * pr + rp * phi - prp * 3.0) * c3 + (prp * phi + phi * prp) * c4;
    (a, q)
}

/// Angle of `R₁ᵀR₂`, in [0, π].
pub fn dist_so3(r1: &Matrix3<f64>, r2: &Matrix3<f64>) -> f64 {
    rotation_angle(&(r1.transpose() * r2)).abs()
}

/// `‖log(g₁⁻¹g₂)∨‖₂`
pub fn dist_se3(g1: &Pose, g2: &Pose) -> Result<f64> {
    Ok(log_se3(&g1.relative_to(g2))?.norm())
}
