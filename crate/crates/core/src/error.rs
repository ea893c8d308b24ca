use std::path::PathBuf;

/// Errors raised by the simulator and controllers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate quaternion: norm {norm:e} is at or below 1e-12")]
    DegenerateQuaternion { norm: f64 },

    #[error("numerical divergence at t = {t}: |{component}| = {value:e} exceeds the divergence threshold")]
    NumericalDivergence {
        t: f64,
        component: &'static str,
        value: f64,
    },

    #[error("invalid parameter schedule: {0}")]
    InvalidSchedule(String),

    #[error("quaternion derivative is not tangent: |Qᵀ·Q̇| = {residual:e}")]
    NonTangentInput { residual: f64 },

    #[error("commanded thrust {thrust} N is at or below the minimum {min} N")]
    ThrustTooSmall { thrust: f64, min: f64 },

    #[error("attitude extraction singular: q0d radicand {radicand:e} (commanded tilt near 180°)")]
    ExtractionSingular { radicand: f64 },

    #[error("log is empty")]
    EmptyLog,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    LogFormat { path: PathBuf, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
