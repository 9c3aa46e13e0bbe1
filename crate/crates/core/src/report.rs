//! JSON reports and CSV point clouds.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA: u32 = 1;

/// Conventions a reader needs to interpret the numbers in a report.
pub const CONVENTION: &str = "sharp(a) = P a with P[i][j] = pi(dx_i, dx_j); pi(a, b) = <sharp a, b>; \
omega_can((v1, a1), (v2, a2)) = <v1, a2> - <v2, a1>; gauge by eta: (v, a) -> (v, a + eta(v, .))";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Prerequisite,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Prerequisite => 3,
            Status::Error => 4,
        }
    }

    fn rank(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Prerequisite => 2,
            Status::Error => 3,
        }
    }

    pub fn worst(self, other: Status) -> Status {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }

    pub fn of_error(e: &Error) -> Status {
        match e {
            Error::Prerequisite(_) | Error::NotImmersion { .. } | Error::RankDefect { .. } => Status::Prerequisite,
            _ => Status::Error,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `value <= tolerance`, with NaN failing.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub checks: Vec<Check>,
    pub details: Value,
}

impl Stage {
    pub fn new(name: &str) -> Stage {
        Stage {
            name: name.into(),
            status: Status::Pass,
            message: None,
            checks: vec![],
            details: Value::Null,
        }
    }

    pub fn check(&mut self, c: Check) {
        if !c.pass {
            self.status = self.status.worst(Status::Fail);
        }
        self.checks.push(c);
    }

    pub fn fail_with(&mut self, status: Status, message: String) {
        self.status = self.status.worst(status);
        self.message = Some(message);
    }

    pub fn details<T: Serialize>(&mut self, v: &T) {
        self.details = serde_json::to_value(v).unwrap_or(Value::Null);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub scene: String,
    pub command: String,
    pub convention: &'static str,
    pub status: Status,
    pub exit_code: i32,
    pub parameters: Value,
    pub stages: Vec<Stage>,
}

impl Report {
    pub fn new(scene: &str, command: &str, parameters: Value) -> Report {
        Report {
            schema: SCHEMA,
            scene: scene.into(),
            command: command.into(),
            convention: CONVENTION,
            status: Status::Pass,
            exit_code: 0,
            parameters,
            stages: vec![],
        }
    }

    pub fn push(&mut self, stage: Stage) {
        self.status = self.status.worst(stage.status);
        self.exit_code = self.status.exit_code();
        self.stages.push(stage);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One row of a point cloud.
#[derive(Clone, Debug)]
pub struct CloudRow {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
    pub residual: f64,
}

/// Write rows with header `u1.., xi1.., x1.., residual`.
pub fn write_cloud(path: &Path, rows: &[CloudRow]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if let Some(first) = rows.first() {
        let header: Vec<String> = (1..=first.u.len())
            .map(|i| format!("u{i}"))
            .chain((1..=first.xi.len()).map(|i| format!("xi{i}")))
            .chain((1..=first.x.len()).map(|i| format!("x{i}")))
            .chain(std::iter::once("residual".to_string()))
            .collect();
        w.write_record(&header).map_err(io)?;
    }
    for r in rows {
        let rec: Vec<String> = r
            .u
            .iter()
            .chain(&r.xi)
            .chain(&r.x)
            .chain(std::iter::once(&r.residual))
            .map(|v| format!("{v:e}"))
            .collect();
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
