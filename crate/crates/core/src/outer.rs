//! Adaptive backstepping position controller.
//!
//! Produces total thrust and a yaw-free desired attitude from position
//! tracking errors. The virtual velocity and virtual force are
//!
//! ```text
//! v_d = −θ ⊙ P̃ + Ṗ_d
//! ṽ   = V − v_d
//! F   = θ² ⊙ P̃ − ψ̂ ⊙ ṽ + P̈_d
//! ψ̂̇  = η ⊙ ṽ²
//! ```
//!
//! Thrust and desired attitude are chosen so that the translational model
//! reproduces `F` exactly:
//!
//! ```text
//! ℑ   = m ‖(Fx, Fy, Fz − g)‖
//! q0d = √(m(g − Fz)/(2ℑ) + ½)
//! q1d =  m Fy / (2ℑ q0d)
//! q2d = −m Fx / (2ℑ q0d)
//! q3d = 0
//! ```

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::quat::{quat_normalize, Quaternion, UnitQuaternion};
use crate::reference::TrajectorySample;
use crate::rigid_body::{RigidBodyState, VehicleParams};
use crate::scalar::Real;

/// Minimum thrust as a fraction of hover thrust.
pub const THRUST_MIN_RATIO: f64 = 1e-3;

/// Smallest admissible `q0d²`.
pub const RADICAND_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterGains<T> {
    /// Position gains `(θx, θy, θz)`.
    pub theta: Vec3<T>,
    /// Adaptation rates `(η1, η2, η3)`.
    pub eta: Vec3<T>,
}

impl<T: Real> OuterGains<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: &Vec3<T>| v.to_array().iter().all(|x| *x > T::zero() && x.is_finite());
        if ok(&self.theta) && ok(&self.eta) {
            Ok(())
        } else {
            Err(Error::InvalidScenario(
                "outer gains must be strictly positive".into(),
            ))
        }
    }
}

impl<T: Real> Default for OuterGains<T> {
    fn default() -> Self {
        Self {
            theta: Vec3::new(T::lit(0.8), T::lit(0.5), T::lit(0.4)),
            eta: Vec3::new(T::lit(2.0), T::lit(2.0), T::lit(20.0)),
        }
    }
}

/// Adaptive damping estimates `ψ̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOuterState<T> {
    pub psi: Vec3<T>,
}

impl<T: Real> Default for AdaptiveOuterState<T> {
    fn default() -> Self {
        Self {
            psi: Vec3::splat(T::half()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterOutput<T> {
    /// Commanded acceleration `F`.
    pub force: Vec3<T>,
    pub thrust: T,
    pub q_d: UnitQuaternion<T>,
    pub position_error: Vec3<T>,
    pub velocity_error: Vec3<T>,
}

pub fn position_error<T: Real>(p: &Vec3<T>, p_d: &Vec3<T>) -> Vec3<T> {
    *p - *p_d
}

pub fn virtual_velocity<T: Real>(
    p_err: &Vec3<T>,
    pd_dot: &Vec3<T>,
    gains: &OuterGains<T>,
) -> Vec3<T> {
    *pd_dot - gains.theta.hadamard(p_err)
}

pub fn virtual_force<T: Real>(
    p_err: &Vec3<T>,
    v_err: &Vec3<T>,
    pd_ddot: &Vec3<T>,
    psi: &AdaptiveOuterState<T>,
    gains: &OuterGains<T>,
) -> Vec3<T> {
    gains.theta.hadamard(&gains.theta).hadamard(p_err) - psi.psi.hadamard(v_err) + *pd_ddot
}

/// Explicit Euler step of `ψ̂̇ = η ⊙ ṽ²`.
pub fn update_psi<T: Real>(
    psi: &AdaptiveOuterState<T>,
    v_err: &Vec3<T>,
    gains: &OuterGains<T>,
    dt: T,
) -> AdaptiveOuterState<T> {
    AdaptiveOuterState {
        psi: psi.psi + gains.eta.hadamard(&v_err.hadamard(v_err)) * dt,
    }
}

pub fn thrust_magnitude<T: Real>(force: &Vec3<T>, params: &VehicleParams<T>) -> T {
    params.mass * Vec3::new(force.x, force.y, force.z - params.gravity).norm()
}

/// Desired attitude (`q3d = 0`) at which thrust `ℑ` produces `F`.
pub fn extract_attitude<T: Real>(
    force: &Vec3<T>,
    thrust: T,
    params: &VehicleParams<T>,
) -> Result<UnitQuaternion<T>> {
    let min = T::lit(THRUST_MIN_RATIO) * params.hover_thrust();
    if !(thrust > min) {
        return Err(Error::ThrustTooSmall {
            thrust: thrust.as_f64(),
            min: min.as_f64(),
        });
    }
    let m = params.mass;
    let radicand = m * (params.gravity - force.z) / (T::two() * thrust) + T::half();
    if !(radicand > T::lit(RADICAND_MIN)) {
        return Err(Error::ExtractionSingular {
            radicand: radicand.as_f64(),
        });
    }
    let q0 = radicand.sqrt();
    let k = m / (T::two() * thrust * q0);
    quat_normalize(
        Quaternion::new(q0, k * force.y, -k * force.x, T::zero()),
        false,
    )
}

/// Quadratic position monitor `½‖P̃‖² + ½‖ṽ‖²`.
pub fn position_lyapunov<T: Real>(p_err: &Vec3<T>, v_err: &Vec3<T>) -> T {
    T::half() * (p_err.norm_squared() + v_err.norm_squared())
}

/// One outer-loop tick: errors, virtual controls, adaptation, thrust and
/// desired attitude. The force uses the estimate held at the start of the tick.
pub fn outer_step<T: Real>(
    state: &RigidBodyState<T>,
    sample: &TrajectorySample<T>,
    psi: &AdaptiveOuterState<T>,
    gains: &OuterGains<T>,
    params: &VehicleParams<T>,
    dt: T,
) -> Result<(OuterOutput<T>, AdaptiveOuterState<T>)> {
    let p_err = position_error(&state.position, &sample.position);
    let v_d = virtual_velocity(&p_err, &sample.velocity, gains);
    let v_err = state.velocity - v_d;
    let force = virtual_force(&p_err, &v_err, &sample.acceleration, psi, gains);
    let next = update_psi(psi, &v_err, gains, dt);
    let thrust = thrust_magnitude(&force, params);
    let q_d = extract_attitude(&force, thrust, params)?;
    Ok((
        OuterOutput {
            force,
            thrust,
            q_d,
            position_error: p_err,
            velocity_error: v_err,
        },
        next,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::TrajectorySpec;
    use crate::rigid_body::translational_deriv;
    use proptest::prelude::*;

    fn achieved(q: UnitQuaternion<f64>, thrust: f64, p: &VehicleParams<f64>) -> Vec3<f64> {
        let s = RigidBodyState {
            attitude: q,
            ..RigidBodyState::default()
        };
        translational_deriv(&s, thrust, p).1
    }

    #[test]
    fn table_gain_examples() {
        let g = OuterGains::<f64>::default();
        let vd = virtual_velocity(&Vec3::new(1.0, 0.0, 0.0), &Vec3::zero(), &g);
        assert!((vd.x + 0.8).abs() < 1e-15);
        let f = virtual_force(
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.5, 0.0, 0.0),
            &Vec3::zero(),
            &AdaptiveOuterState {
                psi: Vec3::splat(2.0),
            },
            &g,
        );
        assert!((f.x + 0.36).abs() < 1e-15);
        assert_eq!(
            position_error(&Vec3::new(1.0, 2.0, 3.0), &Vec3::zero()),
            Vec3::new(1.0, 2.0, 3.0)
        );
    }

    #[test]
    fn virtual_velocity_is_linear_in_error() {
        let g = OuterGains::<f64>::default();
        let pd = Vec3::new(0.3, -0.1, 0.2);
        let e = Vec3::new(0.7, -1.3, 2.2);
        let a = virtual_velocity(&e, &pd, &g) - pd;
        let b = virtual_velocity(&(e * 2.0), &pd, &g) - pd;
        assert!((b - a * 2.0).max_abs() < 1e-15);
    }

    #[test]
    fn psi_increment() {
        let g = OuterGains {
            theta: Vec3::<f64>::splat(1.0),
            eta: Vec3::splat(1.0),
        };
        let next = update_psi(
            &AdaptiveOuterState { psi: Vec3::zero() },
            &Vec3::new(0.2, 0.0, 0.0),
            &g,
            0.01,
        );
        assert!((next.psi.x - 4e-4).abs() < 1e-18);
        assert_eq!((next.psi.y, next.psi.z), (0.0, 0.0));
    }

    #[test]
    fn hover_thrust_and_identity() {
        let p = VehicleParams::<f64>::reference();
        let thrust = thrust_magnitude(&Vec3::zero(), &p);
        assert!((thrust - 34.3).abs() < 1e-12);
        let q = extract_attitude(&Vec3::zero(), thrust, &p).unwrap();
        assert_eq!(q, UnitQuaternion::identity());
    }

    #[test]
    fn free_fall_is_rejected() {
        let p = VehicleParams::<f64>::reference();
        let f = Vec3::new(0.0, 0.0, 9.8);
        assert_eq!(thrust_magnitude(&f, &p), 0.0);
        assert!(matches!(
            extract_attitude(&f, 0.0, &p),
            Err(Error::ThrustTooSmall { .. })
        ));
        let f = Vec3::new(0.0, 0.0, 9.8 + 1e-9);
        let t = thrust_magnitude(&f, &p);
        assert!(extract_attitude(&f, t, &p).is_err());
        let f = Vec3::new(0.0, 0.0, 30.0);
        let t = thrust_magnitude(&f, &p);
        assert!(matches!(
            extract_attitude(&f, t, &p),
            Err(Error::ExtractionSingular { .. })
        ));
    }

    #[test]
    fn forward_force_pitches() {
        let p = VehicleParams::<f64>::reference();
        let f = Vec3::new(1.0, 0.0, 0.0);
        let t = thrust_magnitude(&f, &p);
        let q = extract_attitude(&f, t, &p).unwrap();
        assert_eq!(q.to_array()[1], 0.0);
        assert!(q.to_array()[2] < 0.0);
        assert_eq!(q.to_array()[3], 0.0);
        assert!((achieved(q, t, &p) - f).max_abs() < 1e-12);
    }

    #[test]
    fn printed_signs_fail_the_round_trip() {
        // q1d = −mFy/(2ℑq0d), q2d = +mFx/(2ℑq0d) tilt the wrong way.
        let p = VehicleParams::<f64>::reference();
        let f = Vec3::new(1.0, -0.5, 0.0);
        let t = thrust_magnitude(&f, &p);
        let q = extract_attitude(&f, t, &p).unwrap();
        let [q0, q1, q2, _] = q.to_array();
        let flipped = UnitQuaternion::try_new(Quaternion::new(q0, -q1, -q2, 0.0)).unwrap();
        assert!((achieved(flipped, t, &p) - f).max_abs() > 0.5);
    }

    #[test]
    fn perfect_tracking_on_hover() {
        let p = VehicleParams::<f64>::reference();
        let traj = TrajectorySpec::hover(Vec3::new(0.0, 0.0, -5.0));
        let state = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, -5.0));
        let psi = AdaptiveOuterState::default();
        let (out, next) = outer_step(
            &state,
            &traj.sample(3.0),
            &psi,
            &OuterGains::default(),
            &p,
            0.01,
        )
        .unwrap();
        assert!((out.thrust - 34.3).abs() < 1e-12);
        assert_eq!(out.q_d, UnitQuaternion::identity());
        assert_eq!(next, psi);
        let again = outer_step(
            &state,
            &traj.sample(3.0),
            &psi,
            &OuterGains::default(),
            &p,
            0.01,
        )
        .unwrap();
        assert_eq!(again, (out, next));
    }

    proptest! {
        #[test]
        fn round_trip(fx in -20.0f64..20.0, fy in -20.0f64..20.0, fz in -30.0f64..9.3,
                      m in 0.5f64..5.0) {
            let p = VehicleParams { mass: m, ..VehicleParams::reference() };
            let f = Vec3::new(fx, fy, fz);
            let t = thrust_magnitude(&f, &p);
            let q = extract_attitude(&f, t, &p).unwrap();
            prop_assert!(t >= 0.0);
            prop_assert_eq!(q.to_array()[3], 0.0);
            prop_assert!((q.quaternion().norm() - 1.0).abs() < 1e-9);
            prop_assert!((achieved(q, t, &p) - f).max_abs() < 1e-10);
        }

        #[test]
        fn psi_never_decreases(v in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 1..200)) {
            let g = OuterGains::default();
            let mut psi = AdaptiveOuterState::default();
            for e in v {
                let next = update_psi(&psi, &Vec3::from(e), &g, 0.01);
                prop_assert!(next.psi.x >= psi.psi.x && next.psi.y >= psi.psi.y && next.psi.z >= psi.psi.z);
                psi = next;
            }
        }
    }
}
