//! Euler-angle attitude controller used as a singularity baseline.
//!
//! Angles are roll–pitch–yaw in the Z-Y-X convention, `R = Rz(ψ)Ry(θ)Rx(φ)`.
//! Body rates map to angle rates through `η̇ = W(η) ω`, which contains
//! `1/cos θ` and loses rank at `θ = ±π/2`.
//!
//! The controller mirrors the quaternion sliding-mode design on the angle
//! error `e = η − η_d`:
//!
//! ```text
//! s     = γ1 ϱ(e/2) + ė
//! ë_cmd = −γ1 Φ_e − J⁻¹(μ1 s + Λ̂ ⊙ sat(s/φ))
//! τ     = J W⁻¹(η̈_d + ë_cmd − Ẇ ω) − [Jω]ₓ ω
//! ```
//!
//! The half angle keeps the surface scaled like the quaternion vector part.

use crate::inner::{
    select_branches, smoothed_sign, surface_rate, update_lambda, AdaptiveInnerState, InnerGains,
    SlidingState,
};
use crate::linalg::{Mat3, Vec3};
use crate::quat::UnitQuaternion;
use crate::rigid_body::{RigidBodyState, VehicleParams};
use crate::scalar::{signed_pow, Real};

/// `|cos θ|` below this sets the gimbal-proximity flag.
pub const GIMBAL_COS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles<T> {
    pub roll: T,
    pub pitch: T,
    pub yaw: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(roll: T, pitch: T, yaw: T) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn to_vec(self) -> Vec3<T> {
        Vec3::new(self.roll, self.pitch, self.yaw)
    }

    pub fn from_vec(v: Vec3<T>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn near_gimbal_lock(&self) -> bool {
        self.pitch.cos().abs() < T::lit(GIMBAL_COS_THRESHOLD)
    }
}

/// Z-Y-X angles of `q` and whether the pitch is within the gimbal-lock band.
pub fn quat_to_euler<T: Real>(q: &UnitQuaternion<T>) -> (EulerAngles<T>, bool) {
    let [q0, q1, q2, q3] = q.to_array();
    let two = T::two();
    let one = T::one();
    let sp = (two * (q0 * q2 - q1 * q3)).max(-one).min(one);
    let angles = EulerAngles {
        roll: (two * (q0 * q1 + q2 * q3)).atan2(one - two * (q1 * q1 + q2 * q2)),
        pitch: sp.asin(),
        yaw: (two * (q0 * q3 + q1 * q2)).atan2(one - two * (q2 * q2 + q3 * q3)),
    };
    let flag = angles.near_gimbal_lock();
    (angles, flag)
}

pub fn euler_to_quat<T: Real>(e: &EulerAngles<T>) -> UnitQuaternion<T> {
    UnitQuaternion::from_axis_angle(&Vec3::unit_z(), e.yaw)
        * UnitQuaternion::from_axis_angle(&Vec3::unit_y(), e.pitch)
        * UnitQuaternion::from_axis_angle(&Vec3::unit_x(), e.roll)
}

/// `W(η)` with `η̇ = W ω`.
pub fn rate_matrix<T: Real>(e: &EulerAngles<T>) -> Mat3<T> {
    let (sf, cf) = e.roll.sin_cos();
    let (st, ct) = e.pitch.sin_cos();
    let tt = st / ct;
    let (z, o) = (T::zero(), T::one());
    Mat3::from_rows([[o, sf * tt, cf * tt], [z, cf, -sf], [z, sf / ct, cf / ct]])
}

/// `W⁻¹(η)` with `ω = W⁻¹ η̇`; finite everywhere.
pub fn rate_matrix_inverse<T: Real>(e: &EulerAngles<T>) -> Mat3<T> {
    let (sf, cf) = e.roll.sin_cos();
    let (st, ct) = e.pitch.sin_cos();
    let (z, o) = (T::zero(), T::one());
    Mat3::from_rows([[o, z, -st], [z, cf, sf * ct], [z, -sf, cf * ct]])
}

/// `Ẇ` along angle rates `η̇`.
pub fn rate_matrix_derivative<T: Real>(e: &EulerAngles<T>, rates: &Vec3<T>) -> Mat3<T> {
    let (sf, cf) = e.roll.sin_cos();
    let (st, ct) = e.pitch.sin_cos();
    let tt = st / ct;
    let c2 = ct * ct;
    let z = T::zero();
    let d_roll = Mat3::from_rows([
        [z, cf * tt, -sf * tt],
        [z, -sf, -cf],
        [z, cf / ct, -sf / ct],
    ]);
    let d_pitch = Mat3::from_rows([
        [z, sf / c2, cf / c2],
        [z, z, z],
        [z, sf * st / c2, cf * st / c2],
    ]);
    d_roll.scale(rates.x).add(&d_pitch.scale(rates.y))
}

/// 2-norm condition number of `W(η)`.
pub fn rate_matrix_condition<T: Real>(e: &EulerAngles<T>) -> T {
    rate_matrix(e).condition_number()
}

pub fn wrap_angle<T: Real>(x: T) -> T {
    let tau = T::TAU();
    x - tau * (x / tau).round()
}

/// Desired angles with their first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerReference<T> {
    pub angles: EulerAngles<T>,
    pub rates: Vec3<T>,
    pub accels: Vec3<T>,
}

/// Causal desired-angle differentiator for a sampled `Q_d` stream with
/// period `h`, using wrapped backward differences.
#[derive(Debug, Clone)]
pub struct EulerReferenceTracker<T> {
    h: T,
    prev: Option<Vec3<T>>,
    prev_rates: Option<Vec3<T>>,
}

impl<T: Real> EulerReferenceTracker<T> {
    pub fn new(h: T) -> Self {
        Self {
            h,
            prev: None,
            prev_rates: None,
        }
    }

    pub fn update(&mut self, q_d: &UnitQuaternion<T>) -> EulerReference<T> {
        let angles = quat_to_euler(q_d).0;
        let eta = angles.to_vec();
        let rates = match self.prev {
            Some(p) => (eta - p).map(wrap_angle) / self.h,
            None => Vec3::zero(),
        };
        let accels = match self.prev_rates {
            Some(r) => (rates - r) / self.h,
            None => Vec3::zero(),
        };
        if self.prev.is_some() {
            self.prev_rates = Some(rates);
        }
        self.prev = Some(eta);
        EulerReference {
            angles,
            rates,
            accels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerStepOutput<T> {
    pub torque: Vec3<T>,
    pub adaptive: AdaptiveInnerState<T>,
    pub sliding: SlidingState<T>,
    /// Wrapped angle error `e`.
    pub angle_error: Vec3<T>,
    pub gimbal_proximity: bool,
}

/// One tick of the Euler-angle sliding-mode controller.
pub fn euler_attitude_controller<T: Real>(
    state: &RigidBodyState<T>,
    reference: &EulerReference<T>,
    adaptive: &AdaptiveInnerState<T>,
    prev: Option<&SlidingState<T>>,
    gains: &InnerGains<T>,
    params: &VehicleParams<T>,
    dt: T,
) -> EulerStepOutput<T> {
    let (angles, gimbal_proximity) = quat_to_euler(&state.attitude);
    let w = rate_matrix(&angles);
    let eta_dot = w.mul_vec(&state.omega);
    let e = (angles.to_vec() - reference.angles.to_vec()).map(wrap_angle);
    let e_dot = eta_dot - reference.rates;

    let half_e = e * T::half();
    let branch = select_branches(&half_e, prev.map(|p| &p.s), gains.epsilon);
    let c = gains.exponent();
    let rho = Vec3::from(std::array::from_fn(|i| match branch[i] {
        crate::inner::Branch::Power => signed_pow(half_e[i], c),
        crate::inner::Branch::Linear => half_e[i],
    }));
    let s = rho * gains.gamma1 + e_dot;
    let phi_rate = surface_rate(&half_e, &(e_dot * T::half()), &branch, gains);

    let j = params.inertia;
    let reaching = (s * gains.mu1 + adaptive.lambda_hat.hadamard(&smoothed_sign(&s, gains.phi)))
        .zip_map(j, |a, b| a / b);
    let e_ddot = -phi_rate * gains.gamma1 - reaching;
    let w_dot = rate_matrix_derivative(&angles, &eta_dot);
    let omega_dot = rate_matrix_inverse(&angles)
        .mul_vec(&(reference.accels + e_ddot - w_dot.mul_vec(&state.omega)));
    let jw = state.omega.hadamard(&j);
    let torque = omega_dot.hadamard(&j) - jw.cross(&state.omega);

    let sliding = SlidingState { s, branch };
    EulerStepOutput {
        torque,
        adaptive: update_lambda(adaptive, &s, gains, dt),
        sliding,
        angle_error: e,
        gimbal_proximity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::inner_step;
    use crate::reference::AttitudeReference;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn extraction_examples() {
        let (e, flag) = quat_to_euler(&UnitQuaternion::<f64>::identity());
        assert_eq!(e, EulerAngles::default());
        assert!(!flag);
        let (e, _) = quat_to_euler(&UnitQuaternion::from_axis_angle(&Vec3::unit_z(), FRAC_PI_2));
        assert!((e.to_vec() - Vec3::new(0.0, 0.0, FRAC_PI_2)).max_abs() < 1e-12);
        let (_, flag) = quat_to_euler(&UnitQuaternion::from_axis_angle(
            &Vec3::unit_y(),
            89.99f64.to_radians(),
        ));
        assert!(flag);
        let (_, flag) = quat_to_euler(&UnitQuaternion::from_axis_angle(
            &Vec3::unit_y(),
            89.9f64.to_radians(),
        ));
        assert!(!flag);
    }

    proptest! {
        #[test]
        fn recomposition(roll in -3.1f64..3.1, pitch in -1.5f64..1.5, yaw in -3.1f64..3.1) {
            let e = EulerAngles::new(roll, pitch, yaw);
            let q = euler_to_quat(&e);
            let (back, _) = quat_to_euler(&q);
            prop_assert!((back.to_vec() - e.to_vec()).max_abs() < 1e-9);
            let r = euler_to_quat(&back).to_rot();
            prop_assert!(r.sub(&q.to_rot()).max_abs() < 1e-12);
        }

        #[test]
        fn rate_matrix_inverse_is_inverse(roll in -3.1f64..3.1, pitch in -1.4f64..1.4) {
            let e = EulerAngles::new(roll, pitch, 0.3);
            let p = rate_matrix(&e).mul_mat(&rate_matrix_inverse(&e));
            prop_assert!(p.sub(&Mat3::identity()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn rate_matrix_maps_body_rates_to_angle_rates() {
        // Propagate the attitude with a body rate and difference the angles.
        let e = EulerAngles::new(0.3, -0.4, 1.0);
        let w = Vec3::new(0.2, -0.5, 0.7);
        let h = 1e-6;
        let q = euler_to_quat(&e);
        let ahead = quat_to_euler(&(q * UnitQuaternion::from_rotation_vector(&(w * h))))
            .0
            .to_vec();
        let behind = quat_to_euler(&(q * UnitQuaternion::from_rotation_vector(&(w * -h))))
            .0
            .to_vec();
        let fd = (ahead - behind) / (2.0 * h);
        assert!((fd - rate_matrix(&e).mul_vec(&w)).max_abs() < 1e-7);
    }

    #[test]
    fn rate_matrix_derivative_matches_finite_difference() {
        let e = EulerAngles::new(0.5, 0.7, -0.2);
        let rates = Vec3::new(0.3, -0.8, 0.4);
        let h = 1e-6;
        let shift = |s: f64| EulerAngles::from_vec(e.to_vec() + rates * s);
        let fd = rate_matrix(&shift(h))
            .sub(&rate_matrix(&shift(-h)))
            .scale(0.5 / h);
        assert!(fd.sub(&rate_matrix_derivative(&e, &rates)).max_abs() < 1e-7);
    }

    #[test]
    fn conditioning_grows_toward_lock() {
        let mut last = 0.0;
        for k in 0..90 {
            let pitch = (k as f64 + 0.99) * PI / 180.0;
            let c = rate_matrix_condition(&EulerAngles::new(0.2, pitch, 0.0));
            assert!(c > last, "pitch {pitch}: {c} after {last}");
            last = c;
        }
        assert!(last > 1e3);
    }

    #[test]
    fn wrapping() {
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_angle(-0.1f64) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_error_is_gyroscopic_cancellation() {
        let p = VehicleParams::reference();
        let q = euler_to_quat(&EulerAngles::new(0.1, 0.2, 0.3));
        let w = Vec3::new(0.4, -0.2, 0.5);
        let state = RigidBodyState {
            attitude: q,
            omega: w,
            ..Default::default()
        };
        let (angles, _) = quat_to_euler(&q);
        let rates = rate_matrix(&angles).mul_vec(&w);
        let accels = rate_matrix_derivative(&angles, &rates).mul_vec(&w);
        let r = EulerReference {
            angles,
            rates,
            accels,
        };
        let out = euler_attitude_controller(
            &state,
            &r,
            &AdaptiveInnerState::default(),
            None,
            &InnerGains::default(),
            &p,
            1e-3,
        );
        let want = -w.hadamard(&p.inertia).cross(&w);
        assert!((out.torque - want).max_abs() < 1e-9);
    }

    #[test]
    fn small_tilts_match_quaternion_controller() {
        let p = VehicleParams::reference();
        let g = InnerGains::default();
        let adaptive = AdaptiveInnerState::default();
        for (roll, pitch) in [(0.1, 0.0), (0.0, -0.15), (0.08, 0.12), (-0.12, 0.05)] {
            let q = euler_to_quat(&EulerAngles::new(roll, pitch, 0.0));
            let state = RigidBodyState {
                attitude: q,
                ..Default::default()
            };
            let tq = inner_step(
                &state,
                &AttitudeReference::default(),
                &adaptive,
                None,
                &g,
                &p,
                1e-3,
            )
            .torque;
            let te = euler_attitude_controller(
                &state,
                &EulerReference::default(),
                &adaptive,
                None,
                &g,
                &p,
                1e-3,
            )
            .torque;
            assert!((tq - te).norm() <= 0.1 * tq.norm(), "{tq:?} vs {te:?}");
        }
    }
}
