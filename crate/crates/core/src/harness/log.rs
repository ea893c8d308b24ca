//! Per-tick log records and their CSV encoding.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Column names, in file order.
pub const HEADER: [&str; 60] = [
    "t",
    "px",
    "py",
    "pz",
    "vx",
    "vy",
    "vz",
    "q0",
    "q1",
    "q2",
    "q3",
    "wx",
    "wy",
    "wz",
    "pdx",
    "pdy",
    "pdz",
    "q0d",
    "q1d",
    "q2d",
    "q3d",
    "wdx",
    "wdy",
    "wdz",
    "epx",
    "epy",
    "epz",
    "evx",
    "evy",
    "evz",
    "eq0",
    "eq1",
    "eq2",
    "eq3",
    "ewx",
    "ewy",
    "ewz",
    "thrust",
    "tau1",
    "tau2",
    "tau3",
    "psix",
    "psiy",
    "psiz",
    "lam1",
    "lam2",
    "lam3",
    "s1",
    "s2",
    "s3",
    "Vpos",
    "Vatt",
    "m",
    "J11",
    "J22",
    "J33",
    "branch1",
    "branch2",
    "branch3",
    "gimbal_flag",
];

/// One outer-loop tick. Quaternions are scalar-first; `branch[i]` is true
/// when the linear surface branch is active on axis `i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRecord {
    pub t: f64,
    pub position: Vec3<f64>,
    pub velocity: Vec3<f64>,
    pub attitude: [f64; 4],
    pub omega: Vec3<f64>,
    pub position_d: Vec3<f64>,
    pub attitude_d: [f64; 4],
    pub omega_d: Vec3<f64>,
    pub position_error: Vec3<f64>,
    pub velocity_error: Vec3<f64>,
    pub attitude_error: [f64; 4],
    pub omega_error: Vec3<f64>,
    pub thrust: f64,
    pub torque: Vec3<f64>,
    pub psi: Vec3<f64>,
    pub lambda_hat: Vec3<f64>,
    pub s: Vec3<f64>,
    pub v_pos: f64,
    pub v_att: f64,
    pub mass: f64,
    pub inertia: Vec3<f64>,
    pub branch: [bool; 3],
    pub gimbal: bool,
}

impl LogRecord {
    /// Attitude error angle `2 acos|q̃0|`.
    pub fn attitude_error_angle(&self) -> f64 {
        2.0 * self.attitude_error[0].abs().min(1.0).acos()
    }

    pub fn to_row(&self) -> [f64; 60] {
        let mut row = [0.0; 60];
        let mut i = 0;
        let mut push = |xs: &[f64]| {
            row[i..i + xs.len()].copy_from_slice(xs);
            i += xs.len();
        };
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        push(&[self.t]);
        push(&self.position.to_array());
        push(&self.velocity.to_array());
        push(&self.attitude);
        push(&self.omega.to_array());
        push(&self.position_d.to_array());
        push(&self.attitude_d);
        push(&self.omega_d.to_array());
        push(&self.position_error.to_array());
        push(&self.velocity_error.to_array());
        push(&self.attitude_error);
        push(&self.omega_error.to_array());
        push(&[self.thrust]);
        push(&self.torque.to_array());
        push(&self.psi.to_array());
        push(&self.lambda_hat.to_array());
        push(&self.s.to_array());
        push(&[self.v_pos, self.v_att, self.mass]);
        push(&self.inertia.to_array());
        push(&self.branch.map(flag));
        push(&[flag(self.gimbal)]);
        row
    }

    pub fn from_row(row: &[f64; 60]) -> Self {
        let v = |i: usize| Vec3::new(row[i], row[i + 1], row[i + 2]);
        let q = |i: usize| [row[i], row[i + 1], row[i + 2], row[i + 3]];
        let flag = |i: usize| row[i] != 0.0;
        Self {
            t: row[0],
            position: v(1),
            velocity: v(4),
            attitude: q(7),
            omega: v(11),
            position_d: v(14),
            attitude_d: q(17),
            omega_d: v(21),
            position_error: v(24),
            velocity_error: v(27),
            attitude_error: q(30),
            omega_error: v(34),
            thrust: row[37],
            torque: v(38),
            psi: v(41),
            lambda_hat: v(44),
            s: v(47),
            v_pos: row[50],
            v_att: row[51],
            mass: row[52],
            inertia: v(53),
            branch: [flag(56), flag(57), flag(58)],
            gimbal: flag(59),
        }
    }
}

/// Shortest representation that parses back to the same value.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_log_to<W: Write>(log: &[LogRecord], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for r in log {
        w.write_record(r.to_row().iter().map(|x| format_float(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log_from<R: Read>(reader: R) -> std::result::Result<Vec<LogRecord>, String> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(HEADER.iter().copied()) {
        let missing: Vec<_> = HEADER
            .iter()
            .filter(|h| !header.iter().any(|x| x == **h))
            .collect();
        return Err(format!("unexpected header (missing columns: {missing:?})"));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let mut row = [0.0; 60];
        for (i, field) in rec.iter().enumerate() {
            row[i] = field.trim().parse().map_err(|_| {
                format!(
                    "row {}: column {} is not a number: {field:?}",
                    line + 2,
                    HEADER[i]
                )
            })?;
        }
        out.push(LogRecord::from_row(&row));
    }
    Ok(out)
}

pub fn write_log(log: &[LogRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    write_log_to(log, BufWriter::new(file)).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        other => Error::LogFormat {
            path: path.to_owned(),
            msg: format!("{other:?}"),
        },
    })
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_log_from(BufReader::new(file)).map_err(|msg| Error::LogFormat {
        path: path.to_owned(),
        msg,
    })
}
