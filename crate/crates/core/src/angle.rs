use std::f64::consts::PI;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("angle is not finite: {0}")]
pub struct AngleError(pub f64);

/// Maps `theta` into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> Result<f64, AngleError> {
    if !theta.is_finite() {
        return Err(AngleError(theta));
    }
    Ok(wrap_angle(theta))
}

/// Infallible variant of [`normalize_angle`]; non-finite input is passed through.
pub fn wrap_angle(theta: f64) -> f64 {
    if !theta.is_finite() {
        return theta;
    }
    let r = theta.rem_euclid(TWO_PI);
    if r > PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Planar pose in the field frame: origin at the centre mark, x toward the
/// opponent goal, y to the left, theta counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Applies a displacement expressed in this pose's own frame.
    pub fn compose(&self, delta: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            self.x + c * delta.x - s * delta.y,
            self.y + s * delta.x + c * delta.y,
            self.theta + delta.theta,
        )
    }

    pub fn inverse(&self) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// The displacement `d` such that `self.compose(&d) == other`.
    pub fn between(&self, other: &Pose2D) -> Pose2D {
        self.inverse().compose(other)
    }

    /// Field-frame point expressed in this pose's frame.
    pub fn to_local(&self, p: &Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }

    /// Point in this pose's frame expressed in the field frame.
    pub fn to_field(&self, p: &Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    /// The pose rotated 180° about the centre mark (the symmetric-field twin).
    pub fn mirrored(&self) -> Pose2D {
        Pose2D::new(-self.x, -self.y, self.theta + PI)
    }
}

impl Add for Pose2D {
    type Output = Pose2D;

    /// Component-wise sum with the angle re-normalized.
    fn add(self, rhs: Pose2D) -> Pose2D {
        Pose2D::new(self.x + rhs.x, self.y + rhs.y, self.theta + rhs.theta)
    }
}

impl Sub for Pose2D {
    type Output = Pose2D;

    fn sub(self, rhs: Pose2D) -> Pose2D {
        Pose2D::new(self.x - rhs.x, self.y - rhs.y, self.theta - rhs.theta)
    }
}
