use kidsize_core::config::VisionSection;
use serde::{Deserialize, Serialize};

use crate::boundary::FieldBoundary;
use crate::integral::IntegralImage;

/// Axis-aligned pixel rectangle; covers columns `x..x+w` and rows `y..y+h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl PixelBox {
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// True when the boxes share at least one pixel.
    pub fn overlaps(&self, o: &PixelBox) -> bool {
        self.x < o.right() && o.x < self.right() && self.y < o.bottom() && o.y < self.bottom()
    }

    pub fn union(&self, o: &PixelBox) -> PixelBox {
        let x = self.x.min(o.x);
        let y = self.y.min(o.y);
        PixelBox {
            x,
            y,
            w: self.right().max(o.right()) - x,
            h: self.bottom().max(o.bottom()) - y,
        }
    }

    /// Continuous image coordinates of the box centre.
    pub fn centre(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Tight bounding box of the white pixels in the proposal region.
    pub bbox: PixelBox,
    pub white_pixel_count: u64,
    pub area: u64,
    pub fill_ratio: f64,
}

impl Candidate {
    pub fn from_box(ii: &IntegralImage, bbox: PixelBox) -> Self {
        let white_pixel_count = ii.rect_sum(bbox.x, bbox.y, bbox.w, bbox.h);
        let area = bbox.area();
        Self {
            bbox,
            white_pixel_count,
            area,
            fill_ratio: if area > 0 {
                white_pixel_count as f64 / area as f64
            } else {
                0.0
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDetection {
    /// Continuous image coordinates.
    pub centre: (f64, f64),
    pub radius: f64,
    pub score: f64,
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Shrinks `b` to the tight bounding box of its set pixels.
fn tighten(ii: &IntegralImage, mut b: PixelBox) -> Option<PixelBox> {
    if ii.rect_sum(b.x, b.y, b.w, b.h) == 0 {
        return None;
    }
    while ii.rect_sum(b.x, b.y, 1, b.h) == 0 {
        b.x += 1;
        b.w -= 1;
    }
    while ii.rect_sum(b.right() - 1, b.y, 1, b.h) == 0 {
        b.w -= 1;
    }
    while ii.rect_sum(b.x, b.y, b.w, 1) == 0 {
        b.y += 1;
        b.h -= 1;
    }
    while ii.rect_sum(b.x, b.bottom() - 1, b.w, 1) == 0 {
        b.h -= 1;
    }
    Some(b)
}

/// Sliding-window proposal over a white-pixel integral image.
///
/// Windows of each configured size slide with half-window stride; a window
/// whose white density exceeds `density_min` is kept. Kept windows that
/// overlap are merged into the union of their boxes, each union is tightened
/// to its white pixels, and the result is sorted by white pixel count
/// (descending).
pub fn select_candidates(ii: &IntegralImage, boundary: &FieldBoundary, cfg: &VisionSection) -> Vec<Candidate> {
    let (width, height) = (ii.width, ii.height);
    let scales: Vec<u32> = cfg
        .window_scales
        .iter()
        .copied()
        .filter(|&s| s >= 1 && s <= width && s <= height)
        .collect();
    if scales.is_empty() || ii.total() == 0 {
        return Vec::new();
    }
    let cell = scales.iter().map(|&s| (s / 2).max(1)).fold(0, gcd).max(1);
    let cols = width.div_ceil(cell) as usize;
    let rows = height.div_ceil(cell) as usize;
    let mut owner = vec![usize::MAX; cols * rows];
    let mut windows: Vec<PixelBox> = Vec::new();
    let mut sets = DisjointSet(Vec::new());

    for &s in &scales {
        let stride = (s / 2).max(1) as usize;
        let threshold = cfg.density_min * (s as f64 * s as f64);
        for y in (0..=height - s).step_by(stride) {
            for x in (0..=width - s).step_by(stride) {
                // Skip windows lying wholly above the field boundary.
                let top = boundary.rows[x as usize..(x + s) as usize]
                    .iter()
                    .copied()
                    .min()
                    .unwrap_or(height);
                if y + s <= top {
                    continue;
                }
                if (ii.rect_sum(x, y, s, s) as f64) <= threshold {
                    continue;
                }
                let id = windows.len();
                windows.push(PixelBox { x, y, w: s, h: s });
                sets.0.push(id);
                for cy in (y / cell) as usize..(y + s).div_ceil(cell) as usize {
                    for cx in (x / cell) as usize..(x + s).div_ceil(cell) as usize {
                        let slot = &mut owner[cy * cols + cx];
                        if *slot == usize::MAX {
                            *slot = id;
                        } else {
                            let other = *slot;
                            sets.union(other, id);
                        }
                    }
                }
            }
        }
    }

    let mut groups: Vec<Option<PixelBox>> = vec![None; windows.len()];
    for (i, w) in windows.iter().enumerate() {
        let r = sets.find(i);
        groups[r] = Some(match groups[r] {
            Some(b) => b.union(w),
            None => *w,
        });
    }
    let mut boxes: Vec<PixelBox> = groups.into_iter().flatten().collect();

    // Unions of disjoint window groups may still overlap each other.
    loop {
        let mut merged = false;
        'outer: for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    boxes[i] = boxes[i].union(&boxes[j]);
                    boxes.swap_remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }

    let mut out: Vec<Candidate> = boxes
        .into_iter()
        .filter_map(|b| tighten(ii, b))
        .map(|b| Candidate::from_box(ii, b))
        .collect();
    out.sort_by(|a, b| {
        b.white_pixel_count
            .cmp(&a.white_pixel_count)
            .then(a.bbox.y.cmp(&b.bbox.y))
            .then(a.bbox.x.cmp(&b.bbox.x))
    });
    out
}

/// Margin of `v` inside `[lo, hi]`, mapped to `(0.5, 1]` when inside and
/// `None` outside.
fn margin(v: f64, lo: f64, hi: f64) -> Option<f64> {
    if !(v >= lo && v <= hi) {
        return None;
    }
    let half = (hi - lo) / 2.0;
    let m = if half > 0.0 {
        ((v - lo).min(hi - v) / half).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Some(0.5 + 0.5 * m)
}

/// Three-filter ball test: white pixel count, fill ratio and area must each
/// lie in their configured ranges. The score is the product of the three
/// margins, boosted by closeness to the previous detection, capped at 1.
pub fn classify_ball(c: &Candidate, prev: Option<&BallDetection>, cfg: &VisionSection) -> Option<BallDetection> {
    if c.white_pixel_count == 0 {
        return None;
    }
    let count = margin(c.white_pixel_count as f64, cfg.count_min as f64, cfg.count_max as f64)?;
    let ratio = margin(c.fill_ratio, cfg.ratio_min, cfg.ratio_max)?;
    let area = margin(c.area as f64, cfg.area_min as f64, cfg.area_max as f64)?;
    let centre = c.bbox.centre();
    let mut score = count * ratio * area;
    if let Some(p) = prev {
        let d = ((centre.0 - p.centre.0).powi(2) + (centre.1 - p.centre.1).powi(2)).sqrt();
        score *= (1.0 - d / cfg.track_radius_px).max(0.0) + 1.0;
    }
    Some(BallDetection {
        centre,
        radius: (c.bbox.w + c.bbox.h) as f64 / 4.0,
        score: score.min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::FieldBoundary;
    use crate::integral::build_integral;
    use crate::mask::Mask;
    use kidsize_core::Config;
    use proptest::prelude::*;

    fn full_boundary(w: u32, h: u32) -> FieldBoundary {
        FieldBoundary::from_rows(w, h, vec![0; w as usize])
    }

    fn fill_rect(m: &mut Mask, x0: u32, y0: u32, w: u32, h: u32) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                m.set(x, y, true);
            }
        }
    }

    fn disc(m: &mut Mask, cx: f64, cy: f64, r: f64) {
        for y in 0..m.height {
            for x in 0..m.width {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    m.set(x, y, true);
                }
            }
        }
    }

    /// Exhaustive oracle: every window position at every configured scale,
    /// stride 1, reporting which pixels are covered by a dense window.
    fn dense_cover(m: &Mask, cfg: &VisionSection) -> Mask {
        let mut cover = Mask::new(m.width, m.height);
        for &s in &cfg.window_scales {
            for y in 0..=m.height - s {
                for x in 0..=m.width - s {
                    let mut n = 0;
                    for yy in y..y + s {
                        for xx in x..x + s {
                            n += m.get(xx, yy) as u32;
                        }
                    }
                    if n as f64 > cfg.density_min * (s * s) as f64 {
                        fill_rect(&mut cover, x, y, s, s);
                    }
                }
            }
        }
        cover
    }

    #[test]
    fn empty_mask_has_no_candidates() {
        let cfg = Config::default().vision;
        let m = Mask::new(64, 48);
        assert!(select_candidates(&build_integral(&m), &full_boundary(64, 48), &cfg).is_empty());
    }

    #[test]
    fn single_square_gives_one_candidate() {
        let cfg = Config::default().vision;
        let mut m = Mask::new(160, 120);
        fill_rect(&mut m, 50, 37, 20, 20);
        let oracle = dense_cover(&m, &cfg);
        assert!(oracle.get(55, 40), "oracle sees the square");
        let c = select_candidates(&build_integral(&m), &full_boundary(160, 120), &cfg);
        assert_eq!(c.len(), 1);
        assert_eq!(
            c[0].bbox,
            PixelBox {
                x: 50,
                y: 37,
                w: 20,
                h: 20
            }
        );
        assert_eq!(c[0].white_pixel_count, 400);
        assert_eq!(c[0].fill_ratio, 1.0);
    }

    #[test]
    fn two_blobs_far_apart() {
        let cfg = Config::default().vision;
        let mut m = Mask::new(320, 120);
        fill_rect(&mut m, 40, 40, 20, 20);
        fill_rect(&mut m, 160, 40, 20, 20);
        let c = select_candidates(&build_integral(&m), &full_boundary(320, 120), &cfg);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.white_pixel_count == 400));
    }

    #[test]
    fn above_boundary_is_ignored() {
        let cfg = Config::default().vision;
        let mut m = Mask::new(160, 120);
        fill_rect(&mut m, 50, 10, 20, 20);
        let b = FieldBoundary::from_rows(160, 120, vec![60; 160]);
        assert!(select_candidates(&build_integral(&m), &b, &cfg).is_empty());
    }

    fn candidate(count: u64, area: u64) -> Candidate {
        Candidate {
            bbox: PixelBox {
                x: 10,
                y: 10,
                w: 30,
                h: 30,
            },
            white_pixel_count: count,
            area,
            fill_ratio: count as f64 / area as f64,
        }
    }

    #[test]
    fn classifier_rejections() {
        let cfg = Config::default().vision;
        assert!(classify_ball(&candidate(0, 900), None, &cfg).is_none());
        let big = cfg.area_max as u64 + 1;
        assert!(classify_ball(&candidate(big * 3 / 4, big), None, &cfg).is_none());
        assert!(classify_ball(&candidate(700, 900), None, &cfg).is_some());
        // Fill ratio too low: a sparse line fragment.
        assert!(classify_ball(&candidate(200, 900), None, &cfg).is_none());
    }

    #[test]
    fn circle_detected_at_centre() {
        let cfg = Config::default().vision;
        let mut m = Mask::new(200, 150);
        let (cx, cy) = (83.0, 71.0);
        disc(&mut m, cx, cy, 15.0);
        // Centroid oracle over the rasterized disc.
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in 0..150 {
            for x in 0..200 {
                if m.get(x, y) {
                    sx += x as f64 + 0.5;
                    sy += y as f64 + 0.5;
                    n += 1.0;
                }
            }
        }
        let (ox, oy) = (sx / n, sy / n);
        assert!((ox - cx).abs() < 0.5 && (oy - cy).abs() < 0.5);
        let ii = build_integral(&m);
        let cands = select_candidates(&ii, &full_boundary(200, 150), &cfg);
        assert_eq!(cands.len(), 1);
        let d = classify_ball(&cands[0], None, &cfg).expect("ball");
        assert!((d.centre.0 - ox).abs() <= 1.0 && (d.centre.1 - oy).abs() <= 1.0);
        assert!((d.radius - 15.0).abs() <= 1.0);
        assert!(d.score > 0.0 && d.score <= 1.0);
    }

    #[test]
    fn proximity_bonus_raises_score() {
        let cfg = Config::default().vision;
        let c = candidate(700, 900);
        let plain = classify_ball(&c, None, &cfg).unwrap();
        let near = BallDetection {
            centre: (25.0, 25.0),
            radius: 15.0,
            score: 0.5,
        };
        let far = BallDetection {
            centre: (400.0, 25.0),
            radius: 15.0,
            score: 0.5,
        };
        assert!(classify_ball(&c, Some(&near), &cfg).unwrap().score > plain.score);
        assert_eq!(classify_ball(&c, Some(&far), &cfg).unwrap().score, plain.score);
    }

    proptest! {
        #[test]
        fn count_below_min_rejects(area in 100u64..2000, ratio in 0.7f64..0.85) {
            let cfg = Config::default().vision;
            let count = (area as f64 * ratio) as u64;
            let c = candidate(count, area);
            let mut shrunk = c;
            shrunk.white_pixel_count = cfg.count_min as u64 - 1;
            prop_assert!(classify_ball(&shrunk, None, &cfg).is_none());
        }

        #[test]
        fn candidate_boxes_stay_inside(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let cfg = Config::default().vision;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = Mask::new(128, 96);
            for _ in 0..4 {
                let x = rng.random_range(0..108);
                let y = rng.random_range(0..76);
                fill_rect(&mut m, x, y, rng.random_range(1..20), rng.random_range(1..20));
            }
            let ii = build_integral(&m);
            for c in select_candidates(&ii, &full_boundary(128, 96), &cfg) {
                prop_assert!(c.bbox.right() <= 128 && c.bbox.bottom() <= 96);
                prop_assert!((c.fill_ratio - c.white_pixel_count as f64 / c.area as f64).abs() < 1e-12);
            }
        }
    }
}
