use std::f64::consts::PI;

use kidsize_core::config::VisionSection;
use kidsize_core::{Point2, Segment2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mask::Mask;

/// Image-space segment between two continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment2D {
    pub p0: Point2,
    pub p1: Point2,
    pub length: f64,
    /// Undirected orientation in `[0, π)`.
    pub angle: f64,
}

impl LineSegment2D {
    /// Endpoints are ordered so that the output does not depend on the walk
    /// direction. Returns `None` for a zero-length segment.
    pub fn new(a: Point2, b: Point2) -> Option<Self> {
        let (p0, p1) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
        let d = p1 - p0;
        let length = d.norm();
        if !(length > 0.0) {
            return None;
        }
        let mut angle = d.y.atan2(d.x);
        if angle < 0.0 {
            angle += PI;
        }
        if angle >= PI {
            angle -= PI;
        }
        Some(Self { p0, p1, length, angle })
    }

    pub fn midpoint(&self) -> Point2 {
        (self.p0 + self.p1) / 2.0
    }

    pub fn direction(&self) -> Point2 {
        (self.p1 - self.p0) / self.length
    }

    pub fn as_segment(&self) -> Segment2 {
        Segment2::new(self.p0, self.p1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LineDetection {
    /// Merged segments at least `min_line_len_px` long.
    pub lines: Vec<LineSegment2D>,
    /// Merged segments below the length cut, kept for circle fitting.
    pub short: Vec<LineSegment2D>,
}

/// Progressive probabilistic Hough transform over the set pixels of `mask`.
///
/// Pixels are visited in a seeded random order. Each votes into a
/// (θ, ρ) accumulator; when a bin reaches `hough_threshold` the corridor
/// through the pixel is walked in both directions, tolerating up to
/// `hough_max_gap_px` missing pixels. The walked pixels are removed from the
/// mask (and their votes withdrawn) and the corridor becomes a segment if
/// its extent reaches `hough_min_len_px`.
pub fn detect_segments(mask: &Mask, cfg: &VisionSection) -> Vec<LineSegment2D> {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let bins = cfg.hough_theta_bins.max(1) as usize;
    let num_rho = (2 * (w + h) + 1) as usize;
    let rho_off = (num_rho as i64 - 1) / 2;
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..bins)
        .map(|n| {
            let t = n as f64 * PI / bins as f64;
            (t.cos(), t.sin())
        })
        .unzip();

    let mut points: Vec<(i64, i64)> = Vec::with_capacity(mask.count() as usize);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x as u32, y as u32) {
                points.push((x, y));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.hough_seed);
    points.shuffle(&mut rng);

    let idx = |x: i64, y: i64| (y * w + x) as usize;
    // 0 = clear, 1 = set but not yet voted, 2 = voted
    let mut state: Vec<u8> = mask.data.iter().map(|&v| (v != 0) as u8).collect();
    let mut acc = vec![0i32; bins * num_rho];
    let rho_bin = |n: usize, x: i64, y: i64| -> usize {
        ((x as f64 * cos_t[n] + y as f64 * sin_t[n]).round() as i64 + rho_off) as usize
    };
    let threshold = cfg.hough_threshold as i32;
    let max_gap = cfg.hough_max_gap_px as i64;
    let min_len = cfg.hough_min_len_px as i64;
    let mut out = Vec::new();

    for &(x0, y0) in &points {
        if state[idx(x0, y0)] != 1 {
            continue;
        }
        state[idx(x0, y0)] = 2;
        let mut best = (0i32, 0usize);
        for n in 0..bins {
            let r = rho_bin(n, x0, y0);
            let cell = &mut acc[n * num_rho + r];
            *cell += 1;
            if *cell > best.0 {
                best = (*cell, n);
            }
        }
        if best.0 < threshold {
            continue;
        }

        // Walk along the line direction, stepping one pixel on the major axis.
        let n = best.1;
        let (a, b) = (-sin_t[n], cos_t[n]);
        let (dx, dy) = if a.abs() > b.abs() {
            (a.signum(), b / a.abs())
        } else {
            (a / b.abs(), b.signum())
        };
        let mut ends = [(x0, y0); 2];
        for (k, end) in ends.iter_mut().enumerate() {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let (mut fx, mut fy) = (x0 as f64, y0 as f64);
            let mut gap = 0;
            loop {
                fx += sign * dx;
                fy += sign * dy;
                let (px, py) = (fx.round() as i64, fy.round() as i64);
                if px < 0 || px >= w || py < 0 || py >= h {
                    break;
                }
                if state[idx(px, py)] != 0 {
                    gap = 0;
                    *end = (px, py);
                } else {
                    gap += 1;
                    if gap > max_gap {
                        break;
                    }
                }
            }
        }
        let good = (ends[1].0 - ends[0].0).abs() >= min_len || (ends[1].1 - ends[0].1).abs() >= min_len;

        for (k, end) in ends.iter().enumerate() {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let (mut fx, mut fy) = (x0 as f64, y0 as f64);
            loop {
                let (px, py) = (fx.round() as i64, fy.round() as i64);
                let i = idx(px, py);
                if state[i] != 0 {
                    if good && state[i] == 2 {
                        for m in 0..bins {
                            acc[m * num_rho + rho_bin(m, px, py)] -= 1;
                        }
                    }
                    state[i] = 0;
                }
                if (px, py) == *end {
                    break;
                }
                fx += sign * dx;
                fy += sign * dy;
            }
        }

        if good {
            let c = |p: (i64, i64)| Point2::new(p.0 as f64 + 0.5, p.1 as f64 + 0.5);
            if let Some(s) = LineSegment2D::new(c(ends[0]), c(ends[1])) {
                out.push(s);
            }
        }
    }
    out
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % PI;
    d.min(PI - d)
}

fn mergeable(s: &LineSegment2D, t: &LineSegment2D, cfg: &VisionSection) -> bool {
    if angle_diff(s.angle, t.angle) > cfg.merge_angle_rad {
        return false;
    }
    let ss = s.as_segment();
    let ts = t.as_segment();
    let perp = ss
        .line_distance(&t.p0)
        .max(ss.line_distance(&t.p1))
        .min(ts.line_distance(&s.p0).max(ts.line_distance(&s.p1)));
    if perp > cfg.merge_dist_px {
        return false;
    }
    let u = s.direction();
    let (s0, s1) = (0.0, s.length);
    let a = (t.p0 - s.p0).dot(&u);
    let b = (t.p1 - s.p0).dot(&u);
    let (t0, t1) = (a.min(b), a.max(b));
    let gap = (t0 - s1).max(s0 - t1);
    gap <= cfg.merge_gap_px
}

/// Total least-squares fit over points sampled along both segments; the
/// merged endpoints are the extreme projections of the four originals.
fn refit(s: &LineSegment2D, t: &LineSegment2D) -> Option<LineSegment2D> {
    let mut pts: Vec<Point2> = Vec::new();
    for seg in [s, t] {
        let n = seg.length.ceil().max(1.0) as usize;
        for k in 0..=n {
            pts.push(seg.p0 + (seg.p1 - seg.p0) * (k as f64 / n as f64));
        }
    }
    let m = pts.len() as f64;
    let mean = pts.iter().fold(Point2::zeros(), |acc, p| acc + p) / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let u = Point2::new(theta.cos(), theta.sin());
    let proj: Vec<f64> = [s.p0, s.p1, t.p0, t.p1].iter().map(|p| (p - mean).dot(&u)).collect();
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    LineSegment2D::new(mean + u * lo, mean + u * hi)
}

fn canonical_order(v: &mut [LineSegment2D]) {
    v.sort_by(|a, b| {
        b.length
            .total_cmp(&a.length)
            .then(a.p0.x.total_cmp(&b.p0.x))
            .then(a.p0.y.total_cmp(&b.p0.y))
            .then(a.p1.x.total_cmp(&b.p1.x))
            .then(a.p1.y.total_cmp(&b.p1.y))
    });
}

/// Merges near-collinear segments until no pair satisfies the angle,
/// perpendicular-distance and gap predicates. Output is in canonical order
/// (longest first), so applying the merge twice gives the same result.
pub fn merge_segments(segments: &[LineSegment2D], cfg: &VisionSection) -> Vec<LineSegment2D> {
    let mut v = segments.to_vec();
    canonical_order(&mut v);
    loop {
        let mut changed = false;
        'scan: for i in 0..v.len() {
            for j in i + 1..v.len() {
                if mergeable(&v[i], &v[j], cfg) {
                    if let Some(m) = refit(&v[i], &v[j]) {
                        v[i] = m;
                        v.remove(j);
                        changed = true;
                        break 'scan;
                    }
                }
            }
        }
        if !changed {
            break;
        }
        canonical_order(&mut v);
    }
    v
}

/// Hough detection on the edges of `mask`, merged and split at
/// `min_line_len_px`.
pub fn detect_line_sets(mask: &Mask, cfg: &VisionSection) -> LineDetection {
    let raw = detect_segments(&mask.edges(), cfg);
    let (lines, short) = merge_segments(&raw, cfg)
        .into_iter()
        .partition(|s| s.length >= cfg.min_line_len_px);
    LineDetection { lines, short }
}

pub fn detect_lines(mask: &Mask, cfg: &VisionSection) -> Vec<LineSegment2D> {
    detect_line_sets(mask, cfg).lines
}
