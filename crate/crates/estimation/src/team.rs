//! Confidence-weighted team consensus on which field half the robot is in.

use kidsize_core::config::TeamSection;
use kidsize_core::{Point2, Pose2D};
use serde::{Deserialize, Serialize};

use crate::ekf::BeliefState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeammateReport {
    pub robot_id: u8,
    pub pose: Pose2D,
    pub confidence: f64,
    pub ball_field: Option<Point2>,
    pub age_s: f64,
}

/// Agreement scores of the current and mirrored pose hypotheses, plus the
/// total weight of the reports that took part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisScores {
    pub current: f64,
    pub mirrored: f64,
    pub weight: f64,
}

/// Scores both hypotheses by how well the ball seen at `own_ball` (robot
/// frame) lands on teammates' reported sightings.
pub fn score_hypotheses(
    b: &BeliefState,
    own_ball: &Point2,
    reports: &[TeammateReport],
    cfg: &TeamSection,
) -> HypothesisScores {
    let here = b.mean.to_field(own_ball);
    let there = b.mean.mirrored().to_field(own_ball);
    let two_s2 = 2.0 * cfg.ball_sigma_m * cfg.ball_sigma_m;
    let mut s = HypothesisScores {
        current: 0.0,
        mirrored: 0.0,
        weight: 0.0,
    };
    for r in reports {
        let w = r.confidence.clamp(0.0, 1.0);
        if w <= 0.0 || !(r.age_s < cfg.max_report_age_s) {
            continue;
        }
        let Some(ball) = r.ball_field else { continue };
        s.current += w * (-(here - ball).norm_squared() / two_s2).exp();
        s.mirrored += w * (-(there - ball).norm_squared() / two_s2).exp();
        s.weight += w;
    }
    s
}

/// Two-hypothesis symmetry test. Without an own ball sighting or any
/// weighted teammate sighting the belief is returned unchanged.
pub fn fuse_team(
    b: &BeliefState,
    own_ball: Option<&Point2>,
    reports: &[TeammateReport],
    cfg: &TeamSection,
) -> BeliefState {
    let Some(own) = own_ball else {
        return b.clone();
    };
    let s = score_hypotheses(b, own, reports, cfg);
    if s.weight <= 0.0 {
        return b.clone();
    }
    if s.mirrored > cfg.flip_ratio * s.current {
        let mut m = b.mirrored();
        m.confidence = (b.confidence - cfg.flip_penalty).max(0.0);
        return m;
    }
    let agreement = (s.current / s.weight).clamp(0.0, 1.0);
    BeliefState {
        confidence: ((1.0 - cfg.blend) * b.confidence + cfg.blend * agreement).clamp(0.0, 1.0),
        ..b.clone()
    }
}
