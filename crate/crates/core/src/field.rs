use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::geometry::{Point2, Segment2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("field dimension `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("centre circle radius {radius} does not fit a {length} x {width} field")]
    CircleTooLarge { radius: f64, length: f64, width: f64 },
    #[error("{0} must be narrower than the field")]
    TooWide(&'static str),
    #[error("goal area depth {0} reaches the centre circle")]
    GoalAreaTooDeep(f64),
}

/// Field geometry in the field frame (origin at the centre mark, x toward the
/// opponent goal, y left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    pub length_m: f64,
    pub width_m: f64,
    pub line_width_m: f64,
    pub centre_circle_radius_m: f64,
    pub goal_width_m: f64,
    pub goal_area_depth_m: f64,
    pub goal_area_width_m: f64,
    /// Carpet margin outside the touch and goal lines.
    pub border_m: f64,
    pub line_segments: Vec<Segment2>,
    /// Opponent left, opponent right, own left, own right.
    pub goal_posts: [Point2; 4],
}

/// Scalar dimensions from which a [`FieldModel`] is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDims {
    pub length_m: f64,
    pub width_m: f64,
    pub line_width_m: f64,
    pub centre_circle_radius_m: f64,
    pub goal_width_m: f64,
    pub goal_area_depth_m: f64,
    pub goal_area_width_m: f64,
    pub border_m: f64,
}

impl Default for FieldDims {
    fn default() -> Self {
        Self {
            length_m: 9.0,
            width_m: 6.0,
            line_width_m: 0.05,
            centre_circle_radius_m: 0.75,
            goal_width_m: 2.6,
            goal_area_depth_m: 1.0,
            goal_area_width_m: 3.0,
            border_m: 0.7,
        }
    }
}

impl FieldModel {
    pub fn new(d: FieldDims) -> Result<Self, FieldError> {
        let checks = [
            (d.length_m, "length_m"),
            (d.width_m, "width_m"),
            (d.line_width_m, "line_width_m"),
            (d.centre_circle_radius_m, "centre_circle_radius_m"),
            (d.goal_width_m, "goal_width_m"),
            (d.goal_area_depth_m, "goal_area_depth_m"),
            (d.goal_area_width_m, "goal_area_width_m"),
        ];
        for (v, name) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FieldError::NonPositive(name));
            }
        }
        if !(d.border_m >= 0.0) {
            return Err(FieldError::NonPositive("border_m"));
        }
        let r = d.centre_circle_radius_m;
        if r >= d.width_m / 2.0 || r >= d.length_m / 2.0 {
            return Err(FieldError::CircleTooLarge {
                radius: r,
                length: d.length_m,
                width: d.width_m,
            });
        }
        if d.goal_width_m >= d.width_m {
            return Err(FieldError::TooWide("goal"));
        }
        if d.goal_area_width_m >= d.width_m {
            return Err(FieldError::TooWide("goal area"));
        }
        if d.goal_area_depth_m >= d.length_m / 2.0 - r {
            return Err(FieldError::GoalAreaTooDeep(d.goal_area_depth_m));
        }

        let hl = d.length_m / 2.0;
        let hw = d.width_m / 2.0;
        let p = Point2::new;
        let mut lines = vec![
            Segment2::new(p(-hl, hw), p(hl, hw)),
            Segment2::new(p(-hl, -hw), p(hl, -hw)),
            Segment2::new(p(hl, -hw), p(hl, hw)),
            Segment2::new(p(-hl, -hw), p(-hl, hw)),
            Segment2::new(p(0.0, -hw), p(0.0, hw)),
        ];
        let ga = d.goal_area_width_m / 2.0;
        for s in [1.0, -1.0] {
            let front = s * (hl - d.goal_area_depth_m);
            lines.push(Segment2::new(p(front, -ga), p(front, ga)));
            lines.push(Segment2::new(p(front, ga), p(s * hl, ga)));
            lines.push(Segment2::new(p(front, -ga), p(s * hl, -ga)));
        }
        let gw = d.goal_width_m / 2.0;
        Ok(Self {
            length_m: d.length_m,
            width_m: d.width_m,
            line_width_m: d.line_width_m,
            centre_circle_radius_m: r,
            goal_width_m: d.goal_width_m,
            goal_area_depth_m: d.goal_area_depth_m,
            goal_area_width_m: d.goal_area_width_m,
            border_m: d.border_m,
            line_segments: lines,
            goal_posts: [p(hl, gw), p(hl, -gw), p(-hl, gw), p(-hl, -gw)],
        })
    }

    pub fn from_config(cfg: &Config) -> Result<Self, FieldError> {
        let f = &cfg.field;
        Self::new(FieldDims {
            length_m: f.length_m,
            width_m: f.width_m,
            line_width_m: f.line_width_m,
            centre_circle_radius_m: f.centre_circle_radius_m,
            goal_width_m: f.goal_width_m,
            goal_area_depth_m: f.goal_area_depth_m,
            goal_area_width_m: f.goal_area_width_m,
            border_m: f.border_m,
        })
    }

    pub fn opponent_goal(&self) -> Point2 {
        Point2::new(self.length_m / 2.0, 0.0)
    }

    pub fn own_goal(&self) -> Point2 {
        Point2::new(-self.length_m / 2.0, 0.0)
    }

    /// True when `p` lies on or inside the outer lines.
    pub fn contains(&self, p: &Point2) -> bool {
        p.x.abs() <= self.length_m / 2.0 && p.y.abs() <= self.width_m / 2.0
    }

    /// True when `p` lies on the carpet (field plus border).
    pub fn on_carpet(&self, p: &Point2) -> bool {
        p.x.abs() <= self.length_m / 2.0 + self.border_m && p.y.abs() <= self.width_m / 2.0 + self.border_m
    }

    /// True when `p` is painted white (a field line or the centre circle).
    pub fn is_line(&self, p: &Point2) -> bool {
        let hw = self.line_width_m / 2.0;
        let r = p.norm();
        if (r - self.centre_circle_radius_m).abs() <= hw {
            return true;
        }
        self.line_segments.iter().any(|s| s.distance_to_point(p) <= hw)
    }
}

impl Default for FieldModel {
    fn default() -> Self {
        Self::new(FieldDims::default()).expect("default field dimensions are consistent")
    }
}

impl fmt::Display for FieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "field {} m x {} m", self.length_m, self.width_m)?;
        writeln!(f, "line width {} m", self.line_width_m)?;
        writeln!(f, "centre circle radius {} m", self.centre_circle_radius_m)?;
        writeln!(
            f,
            "goal width {} m, goal area {} m x {} m, border {} m",
            self.goal_width_m, self.goal_area_depth_m, self.goal_area_width_m, self.border_m
        )?;
        for (i, s) in self.line_segments.iter().enumerate() {
            writeln!(
                f,
                "line {:2}: ({:+.3}, {:+.3}) -> ({:+.3}, {:+.3})",
                i, s.a.x, s.a.y, s.b.x, s.b.y
            )?;
        }
        for (i, p) in self.goal_posts.iter().enumerate() {
            writeln!(f, "post {}: ({:+.3}, {:+.3})", i, p.x, p.y)?;
        }
        Ok(())
    }
}
