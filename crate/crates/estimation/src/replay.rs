//! Offline localisation replay over JSONL step logs.

use std::io::{BufRead, Write};

use kidsize_core::config::Config;
use kidsize_core::{FieldModel, Point2, Pose2D, Segment2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ekf::{ekf_predict, ekf_update_heading, ekf_update_lines, BeliefState, EkfError};
use crate::team::{fuse_team, TeammateReport};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Ekf {
        line: usize,
        #[source]
        source: EkfError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One localisation input record. Every field except `t_ns` is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplayStep {
    pub t_ns: u64,
    /// Sets the belief to this pose with kick-off covariance.
    pub reset: Option<Pose2D>,
    pub odometry: Option<Pose2D>,
    pub dt: Option<f64>,
    pub heading: Option<f64>,
    /// Robot-frame metric segments.
    pub lines: Vec<Segment2>,
    pub ball: Option<Point2>,
    pub reports: Vec<TeammateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutput {
    pub t_ns: u64,
    pub belief: BeliefState,
}

pub fn replay_step(
    b: &BeliefState,
    step: &ReplayStep,
    field: &FieldModel,
    cfg: &Config,
) -> Result<BeliefState, EkfError> {
    let mut out = match step.reset {
        Some(p) => BeliefState::kickoff(p, &cfg.ekf),
        None => b.clone(),
    };
    if let Some(odom) = &step.odometry {
        out = ekf_predict(&out, odom, step.dt.unwrap_or(0.01), &cfg.ekf)?;
    }
    if let Some(h) = step.heading {
        out = ekf_update_heading(&out, h, &cfg.ekf);
    }
    if !step.lines.is_empty() {
        out = ekf_update_lines(&out, &step.lines, field, &cfg.ekf);
    }
    if !step.reports.is_empty() {
        out = fuse_team(&out, step.ball.as_ref(), &step.reports, &cfg.team);
    }
    out.last_update_ns = step.t_ns;
    Ok(out)
}

/// Reads steps from `input` and writes one belief per line to `output`.
pub fn replay(
    input: impl BufRead,
    mut output: impl Write,
    start: BeliefState,
    field: &FieldModel,
    cfg: &Config,
) -> Result<usize, ReplayError> {
    let mut b = start;
    let mut n = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let step: ReplayStep =
            serde_json::from_str(&line).map_err(|source| ReplayError::Json { line: i + 1, source })?;
        b = replay_step(&b, &step, field, cfg).map_err(|source| ReplayError::Ekf { line: i + 1, source })?;
        let rec = ReplayOutput {
            t_ns: step.t_ns,
            belief: b.clone(),
        };
        serde_json::to_writer(&mut output, &rec).map_err(|source| ReplayError::Json { line: i + 1, source })?;
        output.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}
