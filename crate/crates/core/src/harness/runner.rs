//! Cascade wiring: position loop, desired-rate derivation, attitude loop and
//! plant integration at their configured rates.

use super::log::LogRecord;
use super::metrics::{compute_metrics, Metrics};
use super::scenario::{ControllerKind, Scenario};
use crate::euler::{euler_attitude_controller, quat_to_euler, EulerReferenceTracker};
use crate::inner::{inner_step, AttitudeError, Branch, SlidingState};
use crate::linalg::Vec3;
use crate::outer::{outer_step, position_lyapunov};
use crate::reference::{AttitudeReference, AttitudeReferenceTracker};
use crate::rigid_body::{step_rk4, ControlOutput, RigidBodyState};
use crate::Result;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: Vec<LogRecord>,
    pub metrics: Metrics,
    /// State when the run ended.
    pub final_state: RigidBodyState<f64>,
}

/// Runs a scenario to completion or failure. Divergence and controller
/// failures end the run early and are reported in the metrics.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput> {
    let nominal = *sc.schedule.nominal();
    let outer_every = sc.outer_every();
    let inner_every = sc.inner_every();
    let outer_dt = outer_every as f64 * sc.dt;
    let inner_dt = inner_every as f64 * sc.dt;

    let mut state = sc.initial;
    let mut psi = sc.psi0;
    let mut lambda = sc.lambda0;
    let mut sliding: Option<SlidingState<f64>> = None;
    let mut tracker = AttitudeReferenceTracker::new(outer_dt);
    let mut euler_tracker = EulerReferenceTracker::new(outer_dt);
    let mut reference = AttitudeReference::default();
    let mut euler_reference = Default::default();
    let mut control = ControlOutput::hover(&nominal);
    let mut pending: Option<LogRecord> = None;
    let mut log = Vec::with_capacity(sc.steps() / outer_every + 1);
    let mut failure = None;

    for k in 0..sc.steps() {
        let t = k as f64 * sc.dt;

        if k % outer_every == 0 {
            let sample = sc.trajectory.sample(t);
            let (out, next_psi) =
                match outer_step(&state, &sample, &psi, &sc.outer_gains, &nominal, outer_dt) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(format!("position loop at t = {t}: {e}"));
                        break;
                    }
                };
            let (q_d, thrust, next_psi) = match sc.maneuver.filter(|m| m.is_active(t)) {
                Some(m) => (
                    m.attitude(t, &out.q_d),
                    m.thrust(t, nominal.hover_thrust()),
                    psi,
                ),
                None => (out.q_d, out.thrust, next_psi),
            };
            psi = next_psi;
            control.thrust = thrust;
            reference = tracker.update(q_d);
            euler_reference = euler_tracker.update(&reference.q_d);

            let params = sc.schedule.params_at(t)?;
            pending = Some(LogRecord {
                t,
                position: state.position,
                velocity: state.velocity,
                attitude: state.attitude.to_array(),
                omega: state.omega,
                position_d: sample.position,
                attitude_d: reference.q_d.to_array(),
                omega_d: reference.omega_d,
                position_error: out.position_error,
                velocity_error: out.velocity_error,
                thrust,
                psi: psi.psi,
                v_pos: position_lyapunov(&out.position_error, &out.velocity_error),
                mass: params.mass,
                inertia: params.inertia,
                gimbal: quat_to_euler(&state.attitude).1,
                ..Default::default()
            });
        }

        if k % inner_every == 0 {
            let (torque, next_lambda, next_sliding) = match sc.controller {
                ControllerKind::Quaternion => {
                    let o = inner_step(
                        &state,
                        &reference,
                        &lambda,
                        sliding.as_ref(),
                        &sc.inner_gains,
                        &nominal,
                        inner_dt,
                    );
                    (o.torque, o.adaptive, o.sliding)
                }
                ControllerKind::Euler => {
                    let o = euler_attitude_controller(
                        &state,
                        &euler_reference,
                        &lambda,
                        sliding.as_ref(),
                        &sc.inner_gains,
                        &nominal,
                        inner_dt,
                    );
                    (o.torque, o.adaptive, o.sliding)
                }
            };
            control.torque = torque;
            lambda = next_lambda;
            sliding = Some(next_sliding);
        }

        if let Some(mut rec) = pending.take() {
            let err = AttitudeError::new(
                &state.attitude,
                &state.omega,
                &reference.q_d,
                &reference.omega_d,
            );
            let s = sliding.map(|x| x.s).unwrap_or_else(Vec3::zero);
            rec.attitude_error = err.q_err.to_array();
            rec.omega_error = err.omega_err;
            rec.torque = control.torque;
            rec.lambda_hat = lambda.lambda_hat;
            rec.s = s;
            rec.v_att = 0.5 * s.norm_squared();
            rec.branch = sliding
                .map(|x| x.branch.map(|b| b == Branch::Linear))
                .unwrap_or_default();
            log.push(rec);
        }

        match step_rk4(&state, &control, &sc.schedule, t, sc.dt) {
            Ok(next) => state = next,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }

    let mut metrics = compute_metrics(&log)?;
    metrics.diverged = failure.is_some();
    metrics.failure = failure;
    Ok(RunOutput {
        log,
        metrics,
        final_state: state,
    })
}
