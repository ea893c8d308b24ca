//! Desired trajectories and the desired angular rate derived from a desired
//! attitude stream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::quat::{Quaternion, UnitQuaternion};
use crate::scalar::Real;

/// Largest `|Q_dᵀ Q̇_d|` accepted as tangent.
pub const TANGENT_TOLERANCE: f64 = 1e-6;

/// Trajectory family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum TrajectoryKind<T> {
    /// `(r cos Ωt, r sin Ωt, −c t)`: a climbing circle (up is `−z`).
    Helix {
        radius: T,
        rate: T,
        climb: T,
    },
    /// `A ⊙ sin(ω t + φ)` per axis, `ω` in rad/s.
    Lissajous {
        amplitude: Vec3<T>,
        frequency: Vec3<T>,
        #[serde(default = "Vec3::zero")]
        phase: Vec3<T>,
    },
    Hover {
        point: Vec3<T>,
    },
    /// Quintic minimum-jerk blends between consecutive points, each taking
    /// `segment_time`; holds the last point afterwards.
    WaypointSmooth {
        points: Vec<Vec3<T>>,
        segment_time: T,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct TrajectorySpec<T> {
    #[serde(flatten)]
    pub kind: TrajectoryKind<T>,
    #[serde(default = "Vec3::zero")]
    pub offset: Vec3<T>,
}

impl<T: Real> TrajectorySpec<T> {
    pub fn hover(point: Vec3<T>) -> Self {
        Self {
            kind: TrajectoryKind::Hover { point },
            offset: Vec3::zero(),
        }
    }

    pub fn helix(radius: T, rate: T, climb: T) -> Self {
        Self {
            kind: TrajectoryKind::Helix {
                radius,
                rate,
                climb,
            },
            offset: Vec3::zero(),
        }
    }

    pub fn with_offset(mut self, offset: Vec3<T>) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidScenario(format!("trajectory: {msg}")));
        if !self.offset.is_finite() {
            return bad("non-finite offset");
        }
        match &self.kind {
            TrajectoryKind::Helix {
                radius,
                rate,
                climb,
            } => {
                if !(radius.is_finite() && rate.is_finite() && climb.is_finite())
                    || *radius < T::zero()
                {
                    return bad("helix parameters must be finite with radius ≥ 0");
                }
            }
            TrajectoryKind::Lissajous {
                amplitude,
                frequency,
                phase,
            } => {
                if !(amplitude.is_finite() && frequency.is_finite() && phase.is_finite()) {
                    return bad("non-finite lissajous parameters");
                }
            }
            TrajectoryKind::Hover { point } => {
                if !point.is_finite() {
                    return bad("non-finite hover point");
                }
            }
            TrajectoryKind::WaypointSmooth {
                points,
                segment_time,
            } => {
                if points.is_empty() {
                    return bad("waypoint_smooth needs at least one point");
                }
                if !(*segment_time > T::zero()) || points.iter().any(|p| !p.is_finite()) {
                    return bad("waypoint_smooth needs a positive segment_time and finite points");
                }
            }
        }
        Ok(())
    }

    /// Position, velocity and acceleration at `t ≥ 0`.
    pub fn sample(&self, t: T) -> TrajectorySample<T> {
        let (p, v, a) = match &self.kind {
            TrajectoryKind::Helix {
                radius,
                rate,
                climb,
            } => {
                let (s, c) = (*rate * t).sin_cos();
                let (r, w) = (*radius, *rate);
                (
                    Vec3::new(r * c, r * s, -*climb * t),
                    Vec3::new(-r * w * s, r * w * c, -*climb),
                    Vec3::new(-r * w * w * c, -r * w * w * s, T::zero()),
                )
            }
            TrajectoryKind::Lissajous {
                amplitude,
                frequency,
                phase,
            } => {
                let arg = frequency.map(|w| w * t) + *phase;
                let (sin, cos) = (arg.map(T::sin), arg.map(T::cos));
                let aw = amplitude.hadamard(frequency);
                (
                    amplitude.hadamard(&sin),
                    aw.hadamard(&cos),
                    -aw.hadamard(frequency).hadamard(&sin),
                )
            }
            TrajectoryKind::Hover { point } => (*point, Vec3::zero(), Vec3::zero()),
            TrajectoryKind::WaypointSmooth {
                points,
                segment_time,
            } => waypoint_sample(points, *segment_time, t),
        };
        TrajectorySample {
            t,
            position: p + self.offset,
            velocity: v,
            acceleration: a,
        }
    }

    /// Upper bounds on `(‖P_d‖, ‖Ṗ_d‖, ‖P̈_d‖)` over `[0, horizon]`.
    pub fn bounds(&self, horizon: T) -> (T, T, T) {
        let off = self.offset.norm();
        match &self.kind {
            TrajectoryKind::Helix {
                radius,
                rate,
                climb,
            } => {
                let (r, w, c) = (radius.abs(), rate.abs(), climb.abs());
                (
                    off + r + c * horizon,
                    (r * r * w * w + c * c).sqrt(),
                    r * w * w,
                )
            }
            TrajectoryKind::Lissajous {
                amplitude,
                frequency,
                ..
            } => {
                let a = amplitude.map(T::abs);
                let aw = a.hadamard(&frequency.map(T::abs));
                (
                    off + a.norm(),
                    aw.norm(),
                    aw.hadamard(&frequency.map(T::abs)).norm(),
                )
            }
            TrajectoryKind::Hover { point } => (off + point.norm(), T::zero(), T::zero()),
            TrajectoryKind::WaypointSmooth {
                points,
                segment_time,
            } => {
                let pmax = points.iter().map(|p| p.norm()).fold(T::zero(), T::max);
                let dmax = points
                    .windows(2)
                    .map(|w| (w[1] - w[0]).norm())
                    .fold(T::zero(), T::max);
                let ts = *segment_time;
                (
                    off + pmax,
                    T::lit(15.0 / 8.0) * dmax / ts,
                    T::lit(10.0 / 3f64.sqrt()) * dmax / (ts * ts),
                )
            }
        }
    }
}

/// Minimum-jerk blend: value, first and second derivative of
/// `10τ³ − 15τ⁴ + 6τ⁵` for `τ ∈ [0, 1]`.
fn quintic<T: Real>(tau: T) -> (T, T, T) {
    let l = T::lit;
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (
        t3 * (l(10.0) - l(15.0) * tau + l(6.0) * t2),
        t2 * (l(30.0) - l(60.0) * tau + l(30.0) * t2),
        tau * (l(60.0) - l(180.0) * tau + l(120.0) * t2),
    )
}

fn waypoint_sample<T: Real>(points: &[Vec3<T>], seg: T, t: T) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
    let last = points.len() - 1;
    let k = (t / seg).floor().to_usize().unwrap_or(0);
    if k >= last {
        return (points[last], Vec3::zero(), Vec3::zero());
    }
    let tau = t / seg - T::lit(k as f64);
    let (s, ds, dds) = quintic(tau);
    let d = points[k + 1] - points[k];
    (points[k] + d * s, d * (ds / seg), d * (dds / (seg * seg)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub acceleration: Vec3<T>,
}

/// Desired attitude with its body-frame rate and acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeReference<T> {
    pub q_d: UnitQuaternion<T>,
    pub omega_d: Vec3<T>,
    pub omega_dot_d: Vec3<T>,
}

impl<T: Real> Default for AttitudeReference<T> {
    fn default() -> Self {
        Self::fixed(UnitQuaternion::identity())
    }
}

impl<T: Real> AttitudeReference<T> {
    pub fn fixed(q_d: UnitQuaternion<T>) -> Self {
        Self {
            q_d,
            omega_d: Vec3::zero(),
            omega_dot_d: Vec3::zero(),
        }
    }
}

/// Body rate `ω_d` with `½ Q_d ⊗ [0, ω_d] = Q̇_d`, via `ω_d = 2·vec(Q_d* ⊗ Q̇_d)`.
pub fn desired_omega<T: Real>(q_d: &UnitQuaternion<T>, q_dot: &Quaternion<T>) -> Result<Vec3<T>> {
    let q = q_d.quaternion();
    let residual = q.dot(q_dot);
    if !(residual.abs() <= T::lit(TANGENT_TOLERANCE)) {
        return Err(Error::NonTangentInput {
            residual: residual.as_f64(),
        });
    }
    Ok(q.conj().hamilton(q_dot).vector() * T::two())
}

/// `q` or `−q`, whichever lies in the same hemisphere as `reference`.
pub fn align_hemisphere<T: Real>(
    q: UnitQuaternion<T>,
    reference: &UnitQuaternion<T>,
) -> UnitQuaternion<T> {
    if q.quaternion().dot(&reference.quaternion()) < T::zero() {
        -q
    } else {
        q
    }
}

fn central_omega<T: Real>(
    qd_fn: &impl Fn(T) -> UnitQuaternion<T>,
    t: T,
    h: T,
) -> Result<(UnitQuaternion<T>, Vec3<T>)> {
    let q = qd_fn(t);
    let ahead = align_hemisphere(qd_fn(t + h), &q).quaternion();
    let behind = align_hemisphere(qd_fn(t - h), &q).quaternion();
    let q_dot = (ahead - behind).scale(T::half() / h);
    Ok((q, desired_omega(&q, &q_dot)?))
}

/// Desired attitude, rate and rate derivative at `t` from central differences
/// of a desired-attitude function with step `h ∈ [1e-5, 1e-3]`.
pub fn attitude_reference_stream<T: Real>(
    qd_fn: impl Fn(T) -> UnitQuaternion<T>,
    t: T,
    h: T,
) -> Result<AttitudeReference<T>> {
    debug_assert!(h >= T::lit(1e-5) && h <= T::lit(1e-3), "h out of range");
    let (q_d, omega_d) = central_omega(&qd_fn, t, h)?;
    let (_, ahead) = central_omega(&qd_fn, t + h, h)?;
    let (_, behind) = central_omega(&qd_fn, t - h, h)?;
    Ok(AttitudeReference {
        q_d,
        omega_d,
        omega_dot_d: (ahead - behind) * (T::half() / h),
    })
}

/// Causal desired-rate estimator for a sampled `Q_d` stream with period `h`.
///
/// The rate is the rotation vector of `Q_{k−1}* ⊗ Q_k` over `h`, exact for
/// constant-rate rotation; the acceleration is the backward difference of
/// successive rates. Both are zero until enough history exists.
#[derive(Debug, Clone)]
pub struct AttitudeReferenceTracker<T> {
    h: T,
    prev_q: Option<UnitQuaternion<T>>,
    prev_omega: Option<Vec3<T>>,
}

impl<T: Real> AttitudeReferenceTracker<T> {
    pub fn new(h: T) -> Self {
        Self {
            h,
            prev_q: None,
            prev_omega: None,
        }
    }

    pub fn reset(&mut self) {
        self.prev_q = None;
        self.prev_omega = None;
    }

    pub fn update(&mut self, q_d: UnitQuaternion<T>) -> AttitudeReference<T> {
        let (q_d, omega_d) = match self.prev_q {
            Some(prev) => {
                let q_d = align_hemisphere(q_d, &prev);
                (q_d, rotation_vector(&(prev.conj() * q_d)) / self.h)
            }
            None => (q_d, Vec3::zero()),
        };
        let omega_dot_d = match self.prev_omega {
            Some(prev) => (omega_d - prev) / self.h,
            None => Vec3::zero(),
        };
        if self.prev_q.is_some() {
            self.prev_omega = Some(omega_d);
        }
        self.prev_q = Some(q_d);
        AttitudeReference {
            q_d,
            omega_d,
            omega_dot_d,
        }
    }
}

/// Rotation vector `θ·n` of a unit quaternion, taking the short way round.
pub fn rotation_vector<T: Real>(q: &UnitQuaternion<T>) -> Vec3<T> {
    let q = q.canonical();
    let v = q.vector();
    let s = v.norm();
    if s <= T::epsilon() {
        return v * T::two();
    }
    v * (T::two() * s.atan2(q.q0()) / s)
}
