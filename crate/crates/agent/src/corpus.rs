//! Labelled synthetic frames for vision evaluation.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use kidsize_core::{CameraModel, Config, FieldModel, Point2, Pose2D};
use kidsize_simworld::{project_ball, render_camera, BallState, RobotState, WorldState};
use kidsize_vision::CameraFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Analytic ball image position, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallLabel {
    pub u: f64,
    pub v: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledFrame {
    pub frame: CameraFrame,
    /// `None` for ball-free frames.
    pub ball: Option<BallLabel>,
}

/// One line of `truth.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub file: String,
    pub ball: Option<BallLabel>,
}

/// `n` frames from random robot poses. With `with_ball`, every frame shows
/// the whole ball on the field; otherwise the same kind of views without
/// a ball. Each frame gets its own brightness and hue jitter.
pub fn sample_frames(cfg: &Config, n: usize, seed: u64, with_ball: bool) -> Vec<LabelledFrame> {
    let cam = CameraModel::from_config(cfg);
    let field = FieldModel::from_config(cfg).expect("validated config");
    let r = cfg.ball.radius_m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut k = 0u64;
    while out.len() < n {
        k += 1;
        let robot = Pose2D::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-3.1..3.1),
        );
        let d = rng.random_range(0.4..4.0);
        let a: f64 = rng.random_range(-0.45..0.45);
        let (s, c) = (robot.theta + a).sin_cos();
        let ball = Point2::new(robot.x + d * c, robot.y + d * s);
        if !field.contains(&ball) {
            continue;
        }
        let ball = with_ball.then(|| BallState::at_rest(ball.x, ball.y));
        let mut w = WorldState::new(vec![RobotState::new(robot)], ball, seed ^ k);
        w.time_ns = k * 33_333_333;
        let label = match project_ball(&w, 0, &cam, r, &cfg.sim) {
            Some(t) if t.fully_inside(&cam) => Some(BallLabel {
                u: t.u,
                v: t.v,
                radius: t.radius_px,
            }),
            Some(_) => continue,
            None if with_ball => continue,
            None => None,
        };
        let frame = render_camera(&w, 0, &cam, &field, r, &cfg.sim);
        out.push(LabelledFrame { frame, ball: label });
    }
    out
}

/// Writes `frame_NNNN.yuyv` files and `truth.jsonl` into `dir`.
pub fn write_corpus(dir: &Path, frames: &[LabelledFrame]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut truth = io::BufWriter::new(fs::File::create(dir.join("truth.jsonl"))?);
    for (i, f) in frames.iter().enumerate() {
        let file = format!("frame_{i:04}.yuyv");
        f.frame
            .write_yuyv(dir.join(&file))
            .map_err(|e| io::Error::other(e.to_string()))?;
        serde_json::to_writer(&mut truth, &TruthRecord { file, ball: f.ball })?;
        truth.write_all(b"\n")?;
    }
    truth.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_match_request() {
        let cfg = Config::default();
        let with = sample_frames(&cfg, 3, 1, true);
        assert!(with.iter().all(|f| f.ball.is_some()));
        let without = sample_frames(&cfg, 3, 1, false);
        assert!(without.iter().all(|f| f.ball.is_none()));
        assert_eq!(sample_frames(&cfg, 3, 1, true), with);
    }
}
