//! Cascaded quaternion flight control for an underactuated quadrotor.
//!
//! The translational loop is an adaptive backstepping controller producing
//! total thrust and a yaw-free desired attitude ([`outer`]); the attitude loop
//! is an adaptive sliding-mode controller on a non-singular surface
//! ([`inner`]). [`rigid_body`] holds the 6-DOF plant and its RK4 integrator,
//! [`reference`] the desired trajectories and attitude-rate derivation,
//! [`euler`] an Euler-angle baseline for singularity comparisons, and
//! [`harness`] the scenario runner, CSV log and metrics.
//!
//! All numeric modules are generic over [`Real`] (`f32`/`f64`); the aliases
//! below fix the common `f64` instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod euler;
pub mod harness;
pub mod inner;
pub mod integrate;
pub mod linalg;
pub mod outer;
pub mod quat;
pub mod reference;
pub mod rigid_body;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::{Mat3, Vec3};
pub use quat::{Quaternion, UnitQuaternion};
pub use scalar::Real;

pub type Vec3d = Vec3<f64>;
pub type Mat3d = Mat3<f64>;
pub type Quatd = UnitQuaternion<f64>;
pub type Statef = rigid_body::RigidBodyState<f32>;
pub type State = rigid_body::RigidBodyState<f64>;
pub type Params = rigid_body::VehicleParams<f64>;
pub type Schedule = rigid_body::ParamSchedule<f64>;
pub type Control = rigid_body::ControlOutput<f64>;
pub type OuterGains = outer::OuterGains<f64>;
pub type InnerGains = inner::InnerGains<f64>;
pub type Trajectory = reference::TrajectorySpec<f64>;

pub type Vec3f = Vec3<f32>;
pub type Quatf = UnitQuaternion<f32>;
