//! Scenario files: TOML with dotted-key overrides.
//!
//! ```toml
//! name = "hover"
//! duration = 20.0
//! controller = "quaternion"   # or "euler"
//!
//! [initial]
//! position = [1.0, -1.0, -4.0]
//!
//! [trajectory]
//! kind = "hover"
//! point = [0.0, 0.0, -5.0]
//!
//! [[perturbation]]
//! target = "m"
//! profile = "sinusoid"
//! amplitude = 0.35
//! frequency = 0.05
//! ```
//!
//! Overrides use the same dotted paths, with array indices as path segments,
//! e.g. `inner.lambda=1.5` or `perturbation.0.amplitude=0.2`. Values are TOML
//! literals; anything that does not parse as one is taken as a string.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::inner::{AdaptiveInnerState, InnerGains, SurfaceDerivative};
use crate::linalg::Vec3;
use crate::outer::{AdaptiveOuterState, OuterGains};
use crate::quat::{quat_normalize, Quaternion, UnitQuaternion};
use crate::reference::TrajectorySpec;
use crate::rigid_body::{ParamSchedule, Perturbation, RigidBodyState, VehicleParams, MAX_STEP};

/// Largest accepted number of integration steps.
pub const MAX_STEPS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[default]
    Quaternion,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManeuverKind {
    /// Pitch about body `y` following `peak·sin²(π τ / duration)`.
    PitchFlip,
}

/// Open-loop attitude excursion layered on the position loop's desired
/// attitude for a time window. Thrust is held at the nominal hover thrust
/// scaled by `max(cos θ, 0)`, and the position-loop adaptation is paused
/// while it is active.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Maneuver {
    pub kind: ManeuverKind,
    pub start: f64,
    pub duration: f64,
    #[serde(default = "default_peak")]
    pub peak_deg: f64,
}

fn default_peak() -> f64 {
    100.0
}

impl Maneuver {
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && t < self.start + self.duration
    }

    /// Commanded pitch angle at `t` (zero outside the window).
    pub fn pitch(&self, t: f64) -> f64 {
        if !self.is_active(t) {
            return 0.0;
        }
        let tau = (t - self.start) / self.duration;
        self.peak_deg.to_radians() * (std::f64::consts::PI * tau).sin().powi(2)
    }

    /// `base` rotated by the commanded pitch about its own `y` axis.
    pub fn attitude(&self, t: f64, base: &UnitQuaternion<f64>) -> UnitQuaternion<f64> {
        match self.kind {
            ManeuverKind::PitchFlip => {
                *base * UnitQuaternion::from_axis_angle(&Vec3::unit_y(), self.pitch(t))
            }
        }
    }

    pub fn thrust(&self, t: f64, hover: f64) -> f64 {
        hover * self.pitch(t).cos().max(0.0)
    }
}

/// Uniform initial-condition randomization, seeded by the scenario seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jitter {
    /// Half-width per position component, m.
    #[serde(default)]
    pub position: f64,
    /// Half-width per velocity component, m/s.
    #[serde(default)]
    pub velocity: f64,
    /// Half-width per rotation-vector component, degrees.
    #[serde(default)]
    pub attitude_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialFile {
    #[serde(default = "Vec3::zero")]
    position: Vec3<f64>,
    #[serde(default = "Vec3::zero")]
    velocity: Vec3<f64>,
    #[serde(default = "identity_array")]
    attitude: [f64; 4],
    #[serde(default = "Vec3::zero")]
    omega: Vec3<f64>,
    jitter: Option<Jitter>,
}

fn identity_array() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for InitialFile {
    fn default() -> Self {
        Self {
            position: Vec3::zero(),
            velocity: Vec3::zero(),
            attitude: identity_array(),
            omega: Vec3::zero(),
            jitter: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct VehicleFile {
    mass: f64,
    inertia: Vec3<f64>,
    gravity: f64,
}

impl Default for VehicleFile {
    fn default() -> Self {
        let p = VehicleParams::reference();
        Self {
            mass: p.mass,
            inertia: p.inertia,
            gravity: p.gravity,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OuterFile {
    theta: Vec3<f64>,
    eta: Vec3<f64>,
    psi0: Vec3<f64>,
}

impl Default for OuterFile {
    fn default() -> Self {
        let g = OuterGains::default();
        Self {
            theta: g.theta,
            eta: g.eta,
            psi0: AdaptiveOuterState::default().psi,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct InnerFile {
    gamma1: f64,
    c1: u32,
    c2: u32,
    epsilon: f64,
    mu1: f64,
    lambda: f64,
    phi: f64,
    lambda0: f64,
    surface_derivative: SurfaceDerivative,
}

impl Default for InnerFile {
    fn default() -> Self {
        let g = InnerGains::default();
        Self {
            gamma1: g.gamma1,
            c1: g.c1,
            c2: g.c2,
            epsilon: g.epsilon,
            mu1: g.mu1,
            lambda: g.lambda,
            phi: g.phi,
            lambda0: AdaptiveInnerState::default().lambda_hat.x,
            surface_derivative: g.surface_derivative,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default = "default_duration")]
    duration: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_outer_rate")]
    outer_rate: f64,
    #[serde(default = "default_inner_rate")]
    inner_rate: f64,
    #[serde(default)]
    controller: ControllerKind,
    #[serde(default)]
    seed: u64,
    output: Option<PathBuf>,
    #[serde(default)]
    initial: InitialFile,
    #[serde(default)]
    vehicle: VehicleFile,
    #[serde(default)]
    perturbation: Vec<Perturbation<f64>>,
    trajectory: TrajectorySpec<f64>,
    #[serde(default)]
    outer: OuterFile,
    #[serde(default)]
    inner: InnerFile,
    maneuver: Option<Maneuver>,
}

fn default_duration() -> f64 {
    100.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_outer_rate() -> f64 {
    100.0
}
fn default_inner_rate() -> f64 {
    1000.0
}

/// A validated simulation run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub dt: f64,
    pub outer_rate: f64,
    pub inner_rate: f64,
    pub controller: ControllerKind,
    pub seed: u64,
    /// Output directory for the log, if the file names one.
    pub output: Option<PathBuf>,
    /// Initial state after jitter.
    pub initial: RigidBodyState<f64>,
    pub schedule: ParamSchedule<f64>,
    pub trajectory: TrajectorySpec<f64>,
    pub outer_gains: OuterGains<f64>,
    pub psi0: AdaptiveOuterState<f64>,
    pub inner_gains: InnerGains<f64>,
    pub lambda0: AdaptiveInnerState<f64>,
    pub maneuver: Option<Maneuver>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidScenario(msg.into())
}

/// Integer ratio `a / b`, or an error if it is not (close to) a whole number.
fn whole_ratio(a: f64, b: f64, what: &str) -> Result<usize> {
    let r = a / b;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-6 * n {
        Ok(n as usize)
    } else {
        Err(invalid(format!(
            "{what} must be a whole multiple, got ratio {r}"
        )))
    }
}

impl Scenario {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text, overrides).map_err(|e| match e {
            Error::InvalidScenario(msg) => invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| invalid(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let file: ScenarioFile = table
            .try_into()
            .map_err(|e: toml::de::Error| invalid(e.message().to_owned()))?;
        Self::from_file(file)
    }

    fn from_file(f: ScenarioFile) -> Result<Self> {
        if !(f.duration > 0.0 && f.duration.is_finite()) {
            return Err(invalid("duration must be positive"));
        }
        if !(f.dt > 0.0 && f.dt <= MAX_STEP) {
            return Err(invalid(format!("dt must lie in (0, {MAX_STEP}]")));
        }
        if f.duration / f.dt > MAX_STEPS {
            return Err(invalid("duration / dt exceeds 1e7 steps"));
        }
        if !(f.outer_rate > 0.0 && f.inner_rate >= f.outer_rate) {
            return Err(invalid("rates must satisfy inner_rate ≥ outer_rate > 0"));
        }
        let outer_every = whole_ratio(1.0 / f.outer_rate, f.dt, "outer period / dt")?;
        let inner_every = whole_ratio(1.0 / f.inner_rate, f.dt, "inner period / dt")?;
        if outer_every % inner_every != 0 {
            return Err(invalid(
                "outer period must be a whole multiple of the inner period",
            ));
        }

        let nominal = VehicleParams {
            mass: f.vehicle.mass,
            inertia: f.vehicle.inertia,
            gravity: f.vehicle.gravity,
        };
        if !(nominal.gravity > 0.0) {
            return Err(invalid("gravity must be positive"));
        }
        let schedule = ParamSchedule::new(nominal, f.perturbation, f.duration)?;
        f.trajectory.validate()?;

        let outer_gains = OuterGains {
            theta: f.outer.theta,
            eta: f.outer.eta,
        };
        outer_gains.validate()?;
        if !f
            .outer
            .psi0
            .to_array()
            .iter()
            .all(|x| x.is_finite() && *x >= 0.0)
        {
            return Err(invalid("outer.psi0 must be non-negative"));
        }
        let i = &f.inner;
        let inner_gains = InnerGains {
            gamma1: i.gamma1,
            c1: i.c1,
            c2: i.c2,
            epsilon: i.epsilon,
            mu1: i.mu1,
            lambda: i.lambda,
            phi: i.phi,
            surface_derivative: i.surface_derivative,
        };
        inner_gains.validate()?;
        if !(i.lambda0 >= 0.0 && i.lambda0.is_finite()) {
            return Err(invalid("inner.lambda0 must be non-negative"));
        }
        if let Some(m) = &f.maneuver {
            if !(m.start >= 0.0 && m.duration > 0.0 && m.peak_deg.is_finite()) {
                return Err(invalid(
                    "maneuver needs start ≥ 0, duration > 0 and a finite peak",
                ));
            }
        }

        let attitude = quat_normalize(Quaternion::from_array(f.initial.attitude), false)
            .map_err(|e| invalid(format!("initial.attitude: {e}")))?;
        let mut initial = RigidBodyState {
            position: f.initial.position,
            velocity: f.initial.velocity,
            attitude,
            omega: f.initial.omega,
        };
        if let Some(j) = f.initial.jitter {
            apply_jitter(&mut initial, &j, f.seed);
        }

        Ok(Self {
            name: f.name,
            duration: f.duration,
            dt: f.dt,
            outer_rate: f.outer_rate,
            inner_rate: f.inner_rate,
            controller: f.controller,
            seed: f.seed,
            output: f.output,
            initial,
            schedule,
            trajectory: f.trajectory,
            outer_gains,
            psi0: AdaptiveOuterState { psi: f.outer.psi0 },
            inner_gains,
            lambda0: AdaptiveInnerState {
                lambda_hat: Vec3::splat(i.lambda0),
            },
            maneuver: f.maneuver,
        })
    }

    /// Dynamics steps per outer-loop tick.
    pub fn outer_every(&self) -> usize {
        (1.0 / (self.outer_rate * self.dt)).round() as usize
    }

    /// Dynamics steps per inner-loop tick.
    pub fn inner_every(&self) -> usize {
        (1.0 / (self.inner_rate * self.dt)).round() as usize
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

fn apply_jitter(state: &mut RigidBodyState<f64>, j: &Jitter, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |half: f64| {
        let mut c = || {
            if half > 0.0 {
                rng.gen_range(-half..=half)
            } else {
                0.0
            }
        };
        Vec3::new(c(), c(), c())
    };
    state.position += draw(j.position);
    state.velocity += draw(j.velocity);
    let rot = draw(j.attitude_deg.to_radians());
    state.attitude = state.attitude * UnitQuaternion::from_rotation_vector(&rot);
}

fn parse_literal(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_owned())),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

/// Sets `key=value` on a parsed scenario table, creating tables as needed.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| invalid(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("override key {key:?} is malformed")));
    }
    let value = parse_literal(raw.trim());
    let mut root = toml::Value::Table(std::mem::take(table));
    let result = set_path(&mut root, &path, value, key);
    if let toml::Value::Table(t) = root {
        *table = t;
    }
    result
}

fn set_path(root: &mut toml::Value, path: &[&str], value: toml::Value, key: &str) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = root;
    for seg in parents {
        node = descend(node, seg, key)?;
    }
    match node {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let idx: usize = last
                .parse()
                .map_err(|_| invalid(format!("override {key:?}: expected an index")))?;
            let cell = a
                .get_mut(idx)
                .ok_or_else(|| invalid(format!("override {key:?}: index {idx} out of range")))?;
            *cell = value;
        }
        _ => return Err(invalid(format!("override {key:?}: parent is not a table"))),
    }
    Ok(())
}

fn descend<'a>(v: &'a mut toml::Value, seg: &str, key: &str) -> Result<&'a mut toml::Value> {
    match v {
        toml::Value::Table(t) => Ok(t
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))),
        toml::Value::Array(a) => {
            let idx: usize = seg
                .parse()
                .map_err(|_| invalid(format!("override {key:?}: expected an index at {seg:?}")))?;
            a.get_mut(idx)
                .ok_or_else(|| invalid(format!("override {key:?}: index {idx} out of range")))
        }
        _ => Err(invalid(format!(
            "override {key:?}: {seg:?} is not inside a table"
        ))),
    }
}
