//! Quadrotor 6-DOF rigid-body model and fixed-step integration.
//!
//! Sign conventions follow the translational model literally: gravity acts
//! along `+e_z` of the inertial frame and the rotor thrust along `−e_z` of the
//! body frame, so hover at identity attitude needs `ℑ = m·g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::linalg::Vec3;
use crate::quat::{quat_kinematics, quat_normalize, Quaternion, UnitQuaternion};
use crate::scalar::Real;

/// Any state component beyond this magnitude aborts integration.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Largest integration step accepted by [`step_rk4`].
pub const MAX_STEP: f64 = 0.05;

/// Number of samples used to validate a schedule over its horizon.
const SCHEDULE_SAMPLES: usize = 2000;

/// Position and velocity in the inertial frame, attitude, and body rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub attitude: UnitQuaternion<T>,
    pub omega: Vec3<T>,
}

impl<T: Real> Default for RigidBodyState<T> {
    fn default() -> Self {
        Self::at_rest(Vec3::zero())
    }
}

impl<T: Real> RigidBodyState<T> {
    /// At rest at `position` with identity attitude.
    pub fn at_rest(position: Vec3<T>) -> Self {
        Self {
            position,
            velocity: Vec3::zero(),
            attitude: UnitQuaternion::identity(),
            omega: Vec3::zero(),
        }
    }

    fn to_array(self) -> [T; 13] {
        let (p, v, q, w) = (
            self.position,
            self.velocity,
            self.attitude.to_array(),
            self.omega,
        );
        [
            p.x, p.y, p.z, v.x, v.y, v.z, q[0], q[1], q[2], q[3], w.x, w.y, w.z,
        ]
    }

    /// Largest absolute component and its name, for divergence reporting.
    fn largest_component(&self) -> (&'static str, T) {
        let candidates = [
            ("position", self.position.max_abs()),
            ("velocity", self.velocity.max_abs()),
            ("omega", self.omega.max_abs()),
        ];
        candidates
            .into_iter()
            .fold(("position", T::zero()), |acc, c| {
                if !(c.1 <= acc.1) {
                    c
                } else {
                    acc
                }
            })
    }
}

/// Mass, diagonal inertia and gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams<T> {
    pub mass: T,
    /// Diagonal of the inertia matrix, `(J11, J22, J33)`.
    pub inertia: Vec3<T>,
    pub gravity: T,
}

impl<T: Real> VehicleParams<T> {
    /// Mass 3.5 kg, inertia diag(2, 2, 3.5) kg·m², g = 9.8 m/s².
    pub fn reference() -> Self {
        Self {
            mass: T::lit(3.5),
            inertia: Vec3::new(T::lit(2.0), T::lit(2.0), T::lit(3.5)),
            gravity: T::lit(9.8),
        }
    }

    pub fn hover_thrust(&self) -> T {
        self.mass * self.gravity
    }

    fn validate(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if positive(self.mass)
            && positive(self.inertia.x)
            && positive(self.inertia.y)
            && positive(self.inertia.z)
        {
            Ok(())
        } else {
            Err(Error::InvalidSchedule(format!(
                "non-positive parameters: m = {}, J = ({}, {}, {})",
                self.mass, self.inertia.x, self.inertia.y, self.inertia.z
            )))
        }
    }
}

impl<T: Real> Default for VehicleParams<T> {
    fn default() -> Self {
        Self::reference()
    }
}

/// Parameter a perturbation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamTarget {
    #[serde(rename = "m")]
    Mass,
    J11,
    J22,
    J33,
}

/// Time profile of an additive perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub enum Profile<T> {
    Constant {
        offset: T,
    },
    /// `amplitude·sin(2π·frequency·t + phase)`, frequency in Hz.
    Sinusoid {
        amplitude: T,
        frequency: T,
        #[serde(default)]
        phase: T,
    },
    /// `rate·(clamp(t, start, end) − start)`.
    Ramp {
        rate: T,
        start: T,
        end: T,
    },
}

impl<T: Real> Profile<T> {
    pub fn value(&self, t: T) -> T {
        match *self {
            Profile::Constant { offset } => offset,
            Profile::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (T::two() * T::PI() * frequency * t + phase).sin(),
            Profile::Ramp { rate, start, end } => rate * (t.max(start).min(end) - start),
        }
    }

    /// Times at which the profile may reach an extremum besides regular samples.
    fn critical_times(&self) -> Vec<T> {
        match *self {
            Profile::Ramp { start, end, .. } => vec![start, end],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Perturbation<T> {
    pub target: ParamTarget,
    #[serde(flatten)]
    pub profile: Profile<T>,
}

/// Nominal parameters plus time-varying perturbations, validated to stay
/// positive over a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSchedule<T> {
    nominal: VehicleParams<T>,
    perturbations: Vec<Perturbation<T>>,
}

impl<T: Real> ParamSchedule<T> {
    /// A schedule without perturbations.
    pub fn constant(nominal: VehicleParams<T>) -> Self {
        Self {
            nominal,
            perturbations: Vec::new(),
        }
    }

    /// Builds a schedule and checks positivity by sampling `[0, horizon]`.
    pub fn new(
        nominal: VehicleParams<T>,
        perturbations: Vec<Perturbation<T>>,
        horizon: T,
    ) -> Result<Self> {
        nominal.validate()?;
        let schedule = Self {
            nominal,
            perturbations,
        };
        let n = T::lit(SCHEDULE_SAMPLES as f64);
        let regular = (0..=SCHEDULE_SAMPLES).map(|i| horizon * T::lit(i as f64) / n);
        let critical: Vec<T> = schedule
            .perturbations
            .iter()
            .flat_map(|p| p.profile.critical_times())
            .filter(|t| *t >= T::zero() && *t <= horizon)
            .collect();
        for t in regular.chain(critical) {
            schedule.params_at(t)?;
        }
        Ok(schedule)
    }

    pub fn nominal(&self) -> &VehicleParams<T> {
        &self.nominal
    }

    pub fn perturbations(&self) -> &[Perturbation<T>] {
        &self.perturbations
    }

    /// Nominal values plus the sum of all active perturbations at `t`.
    pub fn params_at(&self, t: T) -> Result<VehicleParams<T>> {
        let mut p = self.nominal;
        for pert in &self.perturbations {
            let dv = pert.profile.value(t);
            match pert.target {
                ParamTarget::Mass => p.mass += dv,
                ParamTarget::J11 => p.inertia.x += dv,
                ParamTarget::J22 => p.inertia.y += dv,
                ParamTarget::J33 => p.inertia.z += dv,
            }
        }
        p.validate().map_err(|e| match e {
            Error::InvalidSchedule(msg) => Error::InvalidSchedule(format!("{msg} at t = {t}")),
            other => other,
        })?;
        Ok(p)
    }
}

/// Total thrust magnitude `ℑ ≥ 0` and body torque `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput<T> {
    pub thrust: T,
    pub torque: Vec3<T>,
}

impl<T: Real> ControlOutput<T> {
    pub fn hover(params: &VehicleParams<T>) -> Self {
        Self {
            thrust: params.hover_thrust(),
            torque: Vec3::zero(),
        }
    }
}

/// Time derivative of [`RigidBodyState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDeriv<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub attitude: Quaternion<T>,
    pub omega: Vec3<T>,
}

/// `(Ṗ, V̇)` of the expanded translational model.
pub fn translational_deriv<T: Real>(
    state: &RigidBodyState<T>,
    thrust: T,
    params: &VehicleParams<T>,
) -> (Vec3<T>, Vec3<T>) {
    translational_raw(
        &state.velocity,
        &state.attitude.quaternion(),
        thrust,
        params,
    )
}

fn translational_raw<T: Real>(
    velocity: &Vec3<T>,
    q: &Quaternion<T>,
    thrust: T,
    params: &VehicleParams<T>,
) -> (Vec3<T>, Vec3<T>) {
    let (q0, q1, q2, q3) = (q.w, q.x, q.y, q.z);
    let k = thrust / params.mass;
    let vdot = Vec3::new(
        -T::two() * k * (q0 * q2 + q1 * q3),
        -T::two() * k * (q2 * q3 - q0 * q1),
        k * (q1 * q1 + q2 * q2 - q0 * q0 - q3 * q3) + params.gravity,
    );
    (*velocity, vdot)
}

/// `ω̇` from `J ω̇ = [Jω]ₓ ω + τ` with diagonal `J`.
pub fn rotational_deriv<T: Real>(omega: &Vec3<T>, torque: &Vec3<T>, inertia: &Vec3<T>) -> Vec3<T> {
    let (j1, j2, j3) = (inertia.x, inertia.y, inertia.z);
    let (w1, w2, w3) = (omega.x, omega.y, omega.z);
    Vec3::new(
        ((j2 - j3) * w2 * w3 + torque.x) / j1,
        ((j3 - j1) * w3 * w1 + torque.y) / j2,
        ((j1 - j2) * w1 * w2 + torque.z) / j3,
    )
}

pub fn state_deriv<T: Real>(
    state: &RigidBodyState<T>,
    control: &ControlOutput<T>,
    params: &VehicleParams<T>,
) -> StateDeriv<T> {
    let (position, velocity) = translational_deriv(state, control.thrust, params);
    StateDeriv {
        position,
        velocity,
        attitude: quat_kinematics(&state.attitude, &state.omega),
        omega: rotational_deriv(&state.omega, &control.torque, &params.inertia),
    }
}

fn deriv_array<T: Real>(
    x: &[T; 13],
    control: &ControlOutput<T>,
    params: &VehicleParams<T>,
) -> [T; 13] {
    let v = Vec3::new(x[3], x[4], x[5]);
    let q = Quaternion::new(x[6], x[7], x[8], x[9]);
    let w = Vec3::new(x[10], x[11], x[12]);
    let (dp, dv) = translational_raw(&v, &q, control.thrust, params);
    let dq = q.kinematics(&w);
    let dw = rotational_deriv(&w, &control.torque, &params.inertia);
    [
        dp.x, dp.y, dp.z, dv.x, dv.y, dv.z, dq.w, dq.x, dq.y, dq.z, dw.x, dw.y, dw.z,
    ]
}

/// Advances the state by `dt` with classical RK4 under zero-order-hold
/// control. Parameters are sampled at `t`, `t + dt/2` and `t + dt`; the
/// attitude is renormalized after the step.
pub fn step_rk4<T: Real>(
    state: &RigidBodyState<T>,
    control: &ControlOutput<T>,
    schedule: &ParamSchedule<T>,
    t: T,
    dt: T,
) -> Result<RigidBodyState<T>> {
    debug_assert!(dt > T::zero() && dt <= T::lit(MAX_STEP), "dt out of range");
    let mut failure = None;
    let x = rk4_step(
        |s, x: &[T; 13]| match schedule.params_at(s) {
            Ok(p) => deriv_array(x, control, &p),
            Err(e) => {
                failure.get_or_insert(e);
                *x
            }
        },
        t,
        &state.to_array(),
        dt,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let t_end = (t + dt).as_f64();
    let attitude =
        quat_normalize(Quaternion::new(x[6], x[7], x[8], x[9]), false).map_err(|_| {
            Error::NumericalDivergence {
                t: t_end,
                component: "attitude",
                value: f64::NAN,
            }
        })?;
    let next = RigidBodyState {
        position: Vec3::new(x[0], x[1], x[2]),
        velocity: Vec3::new(x[3], x[4], x[5]),
        attitude,
        omega: Vec3::new(x[10], x[11], x[12]),
    };
    let (component, value) = next.largest_component();
    if !(value <= T::lit(DIVERGENCE_LIMIT)) || !attitude.quaternion().is_finite() {
        return Err(Error::NumericalDivergence {
            t: t_end,
            component,
            value: value.as_f64(),
        });
    }
    Ok(next)
}

/// Rotational kinetic energy `½ ωᵀJω`.
pub fn rotational_energy<T: Real>(omega: &Vec3<T>, inertia: &Vec3<T>) -> T {
    T::half() * omega.hadamard(inertia).dot(omega)
}
