//! Unit-quaternion algebra, kinematics and attitude error.
//!
//! Conventions: scalar-first `[q0, q1, q2, q3]`, Hamilton product, and
//! [`quat_to_rot`] returns the body-to-inertial rotation
//! `R = (q0² − qᵀq)I + 2qqᵀ + 2q0[q]ₓ`, so that `R(a ⊗ b) = R(a)R(b)` and the
//! body-rate kinematics are `Q̇ = ½ Q ⊗ [0, ω]`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Norm below which a raw quaternion cannot be normalized.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Arbitrary (not necessarily unit) quaternion. Also used for `Q̇`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    #[inline]
    pub const fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    #[inline]
    pub fn from_parts(w: T, v: Vec3<T>) -> Self {
        Self::new(w, v.x, v.y, v.z)
    }

    #[inline]
    pub fn from_array(a: [T; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    #[inline]
    pub fn vector(&self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn conj(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Hamilton product `self ⊗ o`.
    pub fn hamilton(&self, o: &Self) -> Self {
        let (a0, a) = (self.w, self.vector());
        let (b0, b) = (o.w, o.vector());
        Self::from_parts(a0 * b0 - a.dot(&b), b * a0 + a * b0 + a.cross(&b))
    }

    /// `½ Q ⊗ [0, ω]`, valid for raw quaternions (used inside RK stages).
    pub fn kinematics(&self, omega: &Vec3<T>) -> Self {
        let q = self.vector();
        let h = T::half();
        Self::from_parts(-q.dot(omega) * h, (*omega * self.w + q.cross(omega)) * h)
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Real> Add for Quaternion<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Quaternion<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Quaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

/// Quaternion with `|‖Q‖ − 1| ≤ 1e-9`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion<T>(Quaternion<T>);

impl<T: Real> Default for UnitQuaternion<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self(Quaternion::new(T::one(), T::zero(), T::zero(), T::zero()))
    }

    /// Normalizes `raw`, failing on (near-)zero input.
    pub fn try_new(raw: Quaternion<T>) -> Result<Self> {
        quat_normalize(raw, false)
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: &Vec3<T>, angle: T) -> Self {
        let n = axis.norm();
        if n == T::zero() {
            return Self::identity();
        }
        let half = angle * T::half();
        Self(Quaternion::from_parts(half.cos(), *axis * (half.sin() / n)))
    }

    /// Exponential map of a rotation vector `θ·axis`.
    pub fn from_rotation_vector(v: &Vec3<T>) -> Self {
        Self::from_axis_angle(v, v.norm())
    }

    #[inline]
    pub fn q0(&self) -> T {
        self.0.w
    }

    #[inline]
    pub fn vector(&self) -> Vec3<T> {
        self.0.vector()
    }

    #[inline]
    pub fn quaternion(&self) -> Quaternion<T> {
        self.0
    }

    #[inline]
    pub fn to_array(&self) -> [T; 4] {
        self.0.to_array()
    }

    pub fn conj(&self) -> Self {
        quat_conj(self)
    }

    pub fn to_rot(&self) -> Mat3<T> {
        quat_to_rot(self)
    }

    /// Same rotation with `q0 ≥ 0`.
    pub fn canonical(&self) -> Self {
        if self.0.w < T::zero() {
            Self(-self.0)
        } else {
            *self
        }
    }

    /// Rotation angle in `[0, π]`: `2·acos|q0|`.
    pub fn angle(&self) -> T {
        T::two() * self.0.w.abs().min(T::one()).acos()
    }

    pub fn cast<U: Real>(&self) -> UnitQuaternion<U> {
        let a = self.to_array();
        UnitQuaternion(Quaternion::new(
            U::lit(a[0].as_f64()),
            U::lit(a[1].as_f64()),
            U::lit(a[2].as_f64()),
            U::lit(a[3].as_f64()),
        ))
    }
}

impl<T: Real> Mul for UnitQuaternion<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        quat_mul(&self, &o)
    }
}

impl<T: Real> Neg for UnitQuaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// `[v]ₓ`.
pub fn skew<T: Real>(v: &Vec3<T>) -> Mat3<T> {
    v.skew()
}

/// Hamilton product, renormalized.
pub fn quat_mul<T: Real>(a: &UnitQuaternion<T>, b: &UnitQuaternion<T>) -> UnitQuaternion<T> {
    let p = a.0.hamilton(&b.0);
    UnitQuaternion(p.scale(T::one() / p.norm()))
}

pub fn quat_conj<T: Real>(q: &UnitQuaternion<T>) -> UnitQuaternion<T> {
    UnitQuaternion(q.0.conj())
}

/// `R_Q = (q0² − qᵀq)I₃ + 2qqᵀ + 2q0[q]ₓ`.
pub fn quat_to_rot<T: Real>(q: &UnitQuaternion<T>) -> Mat3<T> {
    let q0 = q.q0();
    let v = q.vector();
    Mat3::identity()
        .scale(q0 * q0 - v.norm_squared())
        .add(&v.outer(&v).scale(T::two()))
        .add(&v.skew().scale(T::two() * q0))
}

/// Normalizes a raw 4-vector; with `canonicalize` the result has `q0 ≥ 0`.
pub fn quat_normalize<T: Real>(
    raw: Quaternion<T>,
    canonicalize: bool,
) -> Result<UnitQuaternion<T>> {
    let n = raw.norm();
    if !(n > T::lit(DEGENERATE_NORM)) {
        return Err(Error::DegenerateQuaternion { norm: n.as_f64() });
    }
    let q = UnitQuaternion(raw.scale(T::one() / n));
    Ok(if canonicalize { q.canonical() } else { q })
}

/// Attitude error between `q` and `q_d`:
///
/// ```text
/// q̃0 = q0 q0d + q_dᵀ q
/// q̃  = q0d q − q0 q_d + [q]ₓ q_d
/// ```
///
/// This is the Hamilton product `Q_d* ⊗ Q`. No hemisphere canonicalization is
/// applied here.
pub fn quat_error<T: Real>(q: &UnitQuaternion<T>, q_d: &UnitQuaternion<T>) -> UnitQuaternion<T> {
    let (q0, v) = (q.q0(), q.vector());
    let (q0d, vd) = (q_d.q0(), q_d.vector());
    let e0 = q0 * q0d + vd.dot(&v);
    let ev = v * q0d - vd * q0 + v.skew().mul_vec(&vd);
    let e = Quaternion::from_parts(e0, ev);
    UnitQuaternion(e.scale(T::one() / e.norm()))
}

/// `Q̇ = [−½ qᵀω, ½(q0 ω + [q]ₓ ω)]` for body rate `ω`.
pub fn quat_kinematics<T: Real>(q: &UnitQuaternion<T>, omega: &Vec3<T>) -> Quaternion<T> {
    q.0.kinematics(omega)
}
