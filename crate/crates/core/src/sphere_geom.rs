//! Points, distances and rotations on the unit 2-sphere.
//!
//! Everything here is a pure function on immutable values. Inner products are
//! clamped before inverse trigonometry and rotation results are renormalized,
//! so repeated composition does not drift off the sphere.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Neg;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};

pub type Vec3 = Vector3<f64>;

/// Below this cross-product norm two unit vectors are treated as parallel.
const PARALLEL_EPS: f64 = 1e-12;

/// Pointing direction of one agent: a unit vector on S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedAttitude(Vec3);

impl ReducedAttitude {
    /// Normalizes `(x, y, z)`. Panics on a zero or non-finite vector.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self::try_from_vector(Vec3::new(x, y, z))
            .expect("reduced attitude needs a nonzero finite vector")
    }

    pub fn try_from_vector(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(FormationError::Domain(format!(
                "cannot normalize vector ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
        Ok(Self(v / norm))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }

    pub fn dot(&self, other: &ReducedAttitude) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn cross(&self, other: &ReducedAttitude) -> Vec3 {
        self.0.cross(&other.0)
    }

    pub fn to_angles(&self) -> SphereAngles {
        vec_to_angles(self)
    }
}

impl Neg for ReducedAttitude {
    type Output = ReducedAttitude;

    fn neg(self) -> Self::Output {
        ReducedAttitude(-self.0)
    }
}

impl From<ReducedAttitude> for Vec3 {
    fn from(p: ReducedAttitude) -> Self {
        p.0
    }
}

/// Yaw/pitch-style coordinates: `psi` in [-π, π), `phi` in [-π/2, π/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereAngles {
    pub psi: f64,
    pub phi: f64,
}

impl SphereAngles {
    pub fn new(psi: f64, phi: f64) -> Self {
        Self { psi, phi }
    }
}

/// Rotation `exp(angle * hat(axis))` with a unit axis and angle in [0, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
}

/// Skew-symmetric matrix with `hat(v) * w == v × w`.
pub fn hat(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Length of the shorter great-circle arc between `a` and `b`, in [0, π].
///
/// Evaluated as `atan2(|a × b|, a·b)`, which is the arccosine of the clamped
/// inner product without the loss of precision near 0 and π.
pub fn geodesic_distance(a: &ReducedAttitude, b: &ReducedAttitude) -> f64 {
    let cos = a.dot(b).clamp(-1.0, 1.0);
    let sin = a.cross(b).norm();
    sin.atan2(cos)
}

/// Unit vector orthogonal to `a`, built from the standard basis vector least
/// aligned with `a` (lowest index on ties).
pub fn degenerate_axis(a: &ReducedAttitude) -> Vec3 {
    let v = a.vector();
    let mut best = 0;
    for k in 1..3 {
        if v[k].abs() < v[best].abs() {
            best = k;
        }
    }
    let mut e = Vec3::zeros();
    e[best] = 1.0;
    v.cross(&e).normalize()
}

/// Axis and angle of the shortest rotation carrying `a` onto `b`.
///
/// For coincident or antipodal inputs the axis is [`degenerate_axis`] of `a`.
pub fn relative_axis_angle(a: &ReducedAttitude, b: &ReducedAttitude) -> AxisAngle {
    let angle = geodesic_distance(a, b);
    let c = a.cross(b);
    let norm = c.norm();
    let axis = if norm < PARALLEL_EPS {
        degenerate_axis(a)
    } else {
        c / norm
    };
    AxisAngle { axis, angle }
}

/// Rodrigues rotation of an arbitrary 3-vector about a unit axis.
pub fn rotate_vector(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Rotates `p` about the unit `axis` by `angle` and renormalizes.
pub fn rotate(p: &ReducedAttitude, axis: &Vec3, angle: f64) -> ReducedAttitude {
    let r = rotate_vector(p.vector(), axis, angle);
    ReducedAttitude(r / r.norm())
}

pub fn angles_to_vec(s: &SphereAngles) -> ReducedAttitude {
    let (sp, cp) = s.psi.sin_cos();
    let (sf, cf) = s.phi.sin_cos();
    ReducedAttitude::new(cp * cf, sp * cf, sf)
}

/// Inverse of [`angles_to_vec`]; returns `psi = 0` at the poles.
pub fn vec_to_angles(p: &ReducedAttitude) -> SphereAngles {
    let v = p.vector();
    let rho = v.x.hypot(v.y);
    let phi = v.z.atan2(rho);
    if rho == 0.0 {
        return SphereAngles {
            psi: 0.0,
            phi: phi.clamp(-FRAC_PI_2, FRAC_PI_2),
        };
    }
    let mut psi = v.y.atan2(v.x);
    if psi >= PI {
        psi -= 2.0 * PI;
    }
    SphereAngles { psi, phi }
}

/// Maps a tangent velocity at `p` to `(psi_dot, phi_dot)`.
///
/// Undefined at the poles; callers keep away from `|phi| = π/2`.
pub fn tangent_to_angle_rates(p: &ReducedAttitude, velocity: &Vec3) -> (f64, f64) {
    let v = p.vector();
    let rho2 = v.x * v.x + v.y * v.y;
    let psi_dot = (v.x * velocity.y - v.y * velocity.x) / rho2;
    let phi_dot = velocity.z / rho2.sqrt();
    (psi_dot, phi_dot)
}

/// Whether `a`, `b`, `c` lie on one great circle, judged through the three
/// distance relations that characterize collinear triples on S².
pub fn great_circle_test(
    a: &ReducedAttitude,
    b: &ReducedAttitude,
    c: &ReducedAttitude,
    tol: f64,
) -> bool {
    let ab = geodesic_distance(a, b);
    let ac = geodesic_distance(a, c);
    let bc = geodesic_distance(b, c);
    (ab - (ac - bc).abs()).abs() <= tol
        || (ab - (ac + bc)).abs() <= tol
        || (ab + ac + bc - 2.0 * PI).abs() <= tol
}
