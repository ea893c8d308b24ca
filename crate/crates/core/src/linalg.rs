//! Small fixed-size vector and matrix types.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Column 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T: Serialize> Serialize for Vec3<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [&self.x, &self.y, &self.z].serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Vec3<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[T; 3]>::deserialize(d).map(Self::from)
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    #[inline]
    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    #[inline]
    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    #[inline]
    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Componentwise product.
    #[inline]
    pub fn hadamard(&self, o: &Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    #[inline]
    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }

    #[inline]
    pub fn zip_map(self, o: Self, f: impl Fn(T, T) -> T) -> Self {
        Self::new(f(self.x, o.x), f(self.y, o.y), f(self.z, o.z))
    }

    #[inline]
    pub fn max_abs(&self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `[v]ₓ`, the matrix with `skew(v)·w = v × w`.
    pub fn skew(&self) -> Mat3<T> {
        let z = T::zero();
        Mat3::from_rows([
            [z, -self.z, self.y],
            [self.z, z, -self.x],
            [-self.y, self.x, z],
        ])
    }

    /// `v wᵀ`.
    pub fn outer(&self, w: &Self) -> Mat3<T> {
        let a = self.to_array();
        let b = w.to_array();
        let mut m = [[T::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i] * b[j];
            }
        }
        Mat3::from_rows(m)
    }

    /// Casts to another scalar type.
    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T> IndexMut<usize> for Vec3<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// 3×3 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    #[inline]
    pub const fn from_rows(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn zero() -> Self {
        Self::from_rows([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diagonal(&Vec3::splat(T::one()))
    }

    pub fn diagonal(d: &Vec3<T>) -> Self {
        let z = T::zero();
        Self::from_rows([[d.x, z, z], [z, d.y, z], [z, z, d.z]])
    }

    #[inline]
    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3::from(self.m[i])
    }

    #[inline]
    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Self {
        let mut t = self.m;
        for (i, row) in t.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.m[j][i];
            }
        }
        Self::from_rows(t)
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.row(i).dot(&o.col(j));
            }
        }
        Self::from_rows(r)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|e| e * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut r = self.m;
        for e in r.iter_mut().flatten() {
            *e = f(*e);
        }
        Self::from_rows(r)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.m;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e += o.m[i][j];
            }
        }
        Self::from_rows(r)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-T::one()))
    }

    pub fn det(&self) -> T {
        self.row(0).dot(&self.row(1).cross(&self.row(2)))
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |a, e| a.max(e.abs()))
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> [T; 3] {
        let mut a = self.m;
        let tol = T::epsilon() * T::lit(4.0);
        for _ in 0..64 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs() + off;
            if off <= tol * scale || off == T::zero() {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::two() * a[p][q]);
                let sgn = if theta >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let t = sgn / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // A ← Jᵀ A J with the rotation acting on rows/cols p and q.
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p], a[q]);
                for k in 0..3 {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2]];
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    /// Spectral (2-norm) condition number; infinite for singular matrices.
    pub fn condition_number(&self) -> T {
        let ev = self.transpose().mul_mat(self).symmetric_eigenvalues();
        let lo = ev[0].max(T::zero());
        if lo == T::zero() {
            return T::infinity();
        }
        (ev[2] / lo).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_matches_cross_product() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        let w = Vec3::new(4.0, 5.0, 6.0);
        assert_eq!(v.skew().mul_vec(&w), Vec3::new(-3.0, 6.0, -3.0));
        assert_eq!(Vec3::<f64>::zero().skew(), Mat3::zero());
        assert_eq!(
            Vec3::<f64>::unit_x().skew().mul_vec(&Vec3::unit_y()),
            Vec3::unit_z()
        );
        assert_eq!(v.skew().transpose(), v.skew().scale(-1.0));
        assert_eq!(v.skew().mul_vec(&w), -w.skew().mul_vec(&v));
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Q diag(1, 4, 9) Qᵀ with Q a rotation.
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let q = Mat3::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]);
        let q2 = Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]);
        let r = q.mul_mat(&q2);
        let a = r
            .mul_mat(&Mat3::diagonal(&Vec3::new(4.0, 1.0, 9.0)))
            .mul_mat(&r.transpose());
        let ev = a.symmetric_eigenvalues();
        for (got, want) in ev.iter().zip([1.0, 4.0, 9.0]) {
            assert!((got - want).abs() < 1e-12, "{ev:?}");
        }
        assert!((a.condition_number() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn identity_is_perfectly_conditioned() {
        assert_eq!(Mat3::<f64>::identity().condition_number(), 1.0);
        let singular = Mat3::<f64>::from_rows([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(singular.condition_number().is_infinite());
    }
}
