use kidsize_core::config::VisionSection;
use kidsize_core::Point2;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::lines::LineSegment2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleDetection {
    pub centre: Point2,
    pub radius: f64,
    /// Midpoints within tolerance of the fitted circle.
    pub support: usize,
}

/// Kasa algebraic fit: minimises Σ(x² + y² + Dx + Ey + F)².
fn kasa(points: &[Point2]) -> Option<(Point2, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Point2::zeros(), |a, p| a + p) / n;
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for p in points {
        let q = p - mean;
        let row = Vector3::new(q.x, q.y, 1.0);
        let z = -(q.x * q.x + q.y * q.y);
        a += row * row.transpose();
        b += row * z;
    }
    let sol = a.lu().solve(&b)?;
    let c = Point2::new(-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = c.norm_squared() - sol[2];
    if !(r2 > 0.0) || !r2.is_finite() {
        return None;
    }
    Some((c + mean, r2.sqrt()))
}

/// Circle through three points, `None` when they are collinear.
fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<(Point2, f64)> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if d.abs() < 1e-9 {
        return None;
    }
    let (a2, b2, c2) = (a.norm_squared(), b.norm_squared(), c.norm_squared());
    let centre = Point2::new(
        (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
        (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d,
    );
    Some((centre, (a - centre).norm()))
}

/// Most segments considered; the longest are kept.
const MAX_SEGMENTS: usize = 60;

/// Fits a circle through the midpoints of short segments.
///
/// Every midpoint triple proposes a circle; the proposal with the most
/// midpoints within `circle_tol_px` seeds an algebraic refit over those
/// inliers. Chord midpoints sit inside the circle at `sqrt(r² − (L/2)²)` from
/// its centre, so the radius is corrected by the mean half-chord length.
pub fn detect_centre_circle(short_segments: &[LineSegment2D], cfg: &VisionSection) -> Option<CircleDetection> {
    let min_support = (cfg.circle_min_support as usize).max(3);
    if short_segments.len() < min_support {
        return None;
    }
    let mut segs = short_segments.to_vec();
    segs.sort_by(|a, b| b.length.total_cmp(&a.length));
    segs.truncate(MAX_SEGMENTS);
    let mids: Vec<Point2> = segs.iter().map(|s| s.midpoint()).collect();
    let tol = cfg.circle_tol_px;
    let inliers = |c: Point2, r: f64| -> Vec<usize> {
        (0..mids.len())
            .filter(|&k| ((mids[k] - c).norm() - r).abs() <= tol)
            .collect()
    };

    let n = mids.len();
    let mut best: Vec<usize> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let Some((c, r)) = circumcircle(mids[i], mids[j], mids[k]) else {
                    continue;
                };
                if r > cfg.circle_max_radius_px * 2.0 {
                    continue;
                }
                let inl = inliers(c, r);
                if inl.len() > best.len() {
                    best = inl;
                }
            }
        }
    }
    if best.len() < min_support {
        return None;
    }
    let pts: Vec<Point2> = best.iter().map(|&k| mids[k]).collect();
    let (centre, rm) = kasa(&pts)?;
    let support = inliers(centre, rm);
    if support.len() < min_support {
        return None;
    }
    let half = support.iter().map(|&k| (segs[k].length / 2.0).powi(2)).sum::<f64>() / support.len() as f64;
    let radius = (rm * rm + half).sqrt();
    if radius < cfg.circle_min_radius_px || radius > cfg.circle_max_radius_px {
        return None;
    }
    Some(CircleDetection {
        centre,
        radius,
        support: support.len(),
    })
}
