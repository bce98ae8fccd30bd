use serde::{Deserialize, Serialize};

pub type Point2 = nalgebra::Vector2<f64>;

/// Straight segment between two planar points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn midpoint(&self) -> Point2 {
        (self.a + self.b) * 0.5
    }

    /// Unit direction from `a` to `b`; zero for a degenerate segment.
    pub fn direction(&self) -> Point2 {
        let d = self.b - self.a;
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            Point2::zeros()
        }
    }

    /// Direction angle in `(-π, π]`.
    pub fn angle(&self) -> f64 {
        let d = self.b - self.a;
        d.y.atan2(d.x)
    }

    /// Parameter of the orthogonal projection of `p` on the carrier line,
    /// 0 at `a` and 1 at `b`.
    pub fn project_param(&self, p: &Point2) -> f64 {
        let d = self.b - self.a;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return 0.0;
        }
        (p - self.a).dot(&d) / len2
    }

    pub fn distance_to_point(&self, p: &Point2) -> f64 {
        let t = self.project_param(p).clamp(0.0, 1.0);
        (self.a + (self.b - self.a) * t - p).norm()
    }

    /// Distance from `p` to the infinite line through the segment.
    pub fn line_distance(&self, p: &Point2) -> f64 {
        let d = self.direction();
        let r = p - self.a;
        (d.x * r.y - d.y * r.x).abs()
    }
}
