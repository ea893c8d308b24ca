//! Summary metrics over a run log.

use serde::{Deserialize, Serialize};

use super::log::LogRecord;
use crate::error::{Error, Result};

/// Fraction of the initial position error that counts as settled.
pub const SETTLING_FRACTION: f64 = 0.05;

/// Length of the trailing window for the final-window RMSE.
pub const FINAL_WINDOW: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub records: usize,
    /// Time of the last record.
    pub end_time: f64,
    pub position_rmse: f64,
    /// Over records at or after the settling time; `None` if unsettled.
    pub position_rmse_settled: Option<f64>,
    pub position_rmse_final: f64,
    pub attitude_rmse: f64,
    pub attitude_rmse_settled: Option<f64>,
    pub attitude_rmse_final: f64,
    /// First time after which `‖P̃‖` stays within 5% of its initial value.
    pub settling_time: Option<f64>,
    /// `∫‖τ‖ dt`.
    pub torque_effort: f64,
    /// `∫ℑ dt`.
    pub thrust_effort: f64,
    /// Mean `‖Δτ‖` between consecutive records.
    pub chattering_index: f64,
    pub max_thrust: f64,
    pub max_torque: f64,
    pub peak_position_error: f64,
    pub peak_attitude_error: f64,
    pub diverged: bool,
    /// Why the run ended early, if it did.
    pub failure: Option<String>,
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Metrics over `log`. Divergence information is left unset.
pub fn compute_metrics(log: &[LogRecord]) -> Result<Metrics> {
    let first = log.first().ok_or(Error::EmptyLog)?;
    let last = log.last().ok_or(Error::EmptyLog)?;
    let pos = |r: &LogRecord| r.position_error.norm();
    let att = |r: &LogRecord| r.attitude_error_angle();

    let threshold = SETTLING_FRACTION * pos(first);
    let settling_time = match log.iter().rposition(|r| pos(r) > threshold) {
        None => Some(first.t),
        Some(i) if i + 1 < log.len() => Some(log[i + 1].t),
        Some(_) => None,
    };
    let settled = |f: &dyn Fn(&LogRecord) -> f64| {
        settling_time.map(|ts| rms(log.iter().filter(|r| r.t >= ts).map(f)))
    };
    let final_start = last.t - FINAL_WINDOW;
    let in_final = |r: &&LogRecord| r.t >= final_start;

    let mut torque_effort = 0.0;
    let mut thrust_effort = 0.0;
    let mut chatter = 0.0;
    for w in log.windows(2) {
        let h = w[1].t - w[0].t;
        torque_effort += h * w[0].torque.norm();
        thrust_effort += h * w[0].thrust;
        chatter += (w[1].torque - w[0].torque).norm();
    }

    Ok(Metrics {
        records: log.len(),
        end_time: last.t,
        position_rmse: rms(log.iter().map(pos)),
        position_rmse_settled: settled(&pos),
        position_rmse_final: rms(log.iter().filter(in_final).map(pos)),
        attitude_rmse: rms(log.iter().map(att)),
        attitude_rmse_settled: settled(&att),
        attitude_rmse_final: rms(log.iter().filter(in_final).map(att)),
        settling_time,
        torque_effort,
        thrust_effort,
        chattering_index: if log.len() > 1 {
            chatter / (log.len() - 1) as f64
        } else {
            0.0
        },
        max_thrust: log.iter().map(|r| r.thrust).fold(0.0, f64::max),
        max_torque: log.iter().map(|r| r.torque.norm()).fold(0.0, f64::max),
        peak_position_error: log.iter().map(pos).fold(0.0, f64::max),
        peak_attitude_error: log.iter().map(att).fold(0.0, f64::max),
        diverged: false,
        failure: None,
    })
}

/// Fraction of consecutive samples, taken every `stride` records from index
/// `start`, where `values` rises by more than `tolerance`.
pub fn monotonic_violation_fraction(
    values: &[f64],
    start: usize,
    stride: usize,
    tolerance: f64,
) -> f64 {
    let sampled: Vec<f64> = values
        .iter()
        .skip(start)
        .step_by(stride.max(1))
        .copied()
        .collect();
    if sampled.len() < 2 {
        return 0.0;
    }
    let bad = sampled
        .windows(2)
        .filter(|w| w[1] > w[0] + tolerance)
        .count();
    bad as f64 / (sampled.len() - 1) as f64
}
