use kidsize_core::config::VisionSection;

use crate::color::{is_green, HsvImage};
use crate::mask::Mask;

/// Per-column top of the playing field and the derived below-boundary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldBoundary {
    /// Topmost field row for each column; `height` when the column has no field.
    pub rows: Vec<u32>,
    pub mask: Mask,
}

impl FieldBoundary {
    pub fn from_rows(width: u32, height: u32, rows: Vec<u32>) -> Self {
        let mut mask = Mask::new(width, height);
        for y in 0..height {
            let line = &mut mask.data[(y * width) as usize..((y + 1) * width) as usize];
            for (px, &top) in line.iter_mut().zip(&rows) {
                *px = (y >= top) as u8;
            }
        }
        Self { rows, mask }
    }

    pub fn is_empty(&self) -> bool {
        self.mask.data.iter().all(|&v| v == 0)
    }

    /// Convex envelope of the boundary. The field is convex, so its image is
    /// too; objects standing on it (the ball near the far edge, say) only push
    /// single columns down, and the envelope restores them. Columns without
    /// any field keep no field.
    pub fn convex(&self) -> FieldBoundary {
        let h = self.mask.height;
        let pts: Vec<(i64, i64)> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, &r)| r < h)
            .map(|(x, &r)| (x as i64, r as i64))
            .collect();
        let mut hull: Vec<(i64, i64)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
                if cross <= 0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let mut rows = self.rows.clone();
        for seg in hull.windows(2) {
            let ((x0, r0), (x1, r1)) = (seg[0], seg[1]);
            for x in x0..=x1 {
                let num = r0 * (x1 - x0) + (r1 - r0) * (x - x0);
                let den = x1 - x0;
                rows[x as usize] = num.div_euclid(den) as u32 + (num.rem_euclid(den) != 0) as u32;
            }
        }
        FieldBoundary::from_rows(self.mask.width, h, rows)
    }
}

/// Field-edge scan: in each column the boundary is the topmost row that starts
/// a run of at least `min_green_run` green pixels.
pub fn field_edge_filter(img: &HsvImage, cfg: &VisionSection) -> FieldBoundary {
    field_edge_filter_with_horizon(img, cfg, None)
}

/// As [`field_edge_filter`], additionally discarding everything above a known
/// horizon row.
pub fn field_edge_filter_with_horizon(img: &HsvImage, cfg: &VisionSection, horizon_row: Option<f64>) -> FieldBoundary {
    let (w, h) = (img.width as usize, img.height as usize);
    let need = cfg.min_green_run.max(1);
    let mut run = vec![0u32; w];
    let mut rows = vec![img.height; w];
    let mut open = w;
    // Row-major sweep keeps memory access sequential.
    for y in 0..h {
        if open == 0 {
            break;
        }
        let line = &img.pixels[y * w..(y + 1) * w];
        for (x, p) in line.iter().enumerate() {
            if rows[x] != img.height {
                continue;
            }
            if is_green(p, cfg) {
                run[x] += 1;
                if run[x] >= need {
                    rows[x] = (y + 1) as u32 - need;
                    open -= 1;
                }
            } else {
                run[x] = 0;
            }
        }
    }
    if let Some(hz) = horizon_row {
        let floor = hz.ceil().clamp(0.0, img.height as f64) as u32;
        for r in rows.iter_mut() {
            *r = (*r).max(floor);
        }
    }
    FieldBoundary::from_rows(img.width, img.height, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Hsv;
    use kidsize_core::Config;
    use proptest::prelude::*;

    const GREEN: Hsv = Hsv {
        h: 120.0,
        s: 0.7,
        v: 0.6,
    };
    const GREY: Hsv = Hsv { h: 0.0, s: 0.0, v: 0.4 };

    fn image(w: u32, h: u32, f: impl Fn(u32, u32) -> Hsv) -> HsvImage {
        let mut pixels = Vec::new();
        for y in 0..h {
            for x in 0..w {
                pixels.push(f(x, y));
            }
        }
        HsvImage {
            width: w,
            height: h,
            pixels,
        }
    }

    /// Column-wise linear scan, independent of the row sweep above.
    fn oracle_rows(img: &HsvImage, cfg: &VisionSection) -> Vec<u32> {
        let need = cfg.min_green_run;
        (0..img.width)
            .map(|x| {
                (0..img.height)
                    .find(|&y| y + need <= img.height && (y..y + need).all(|yy| is_green(&img.get(x, yy), cfg)))
                    .unwrap_or(img.height)
            })
            .collect()
    }

    #[test]
    fn all_green_is_row_zero() {
        let cfg = Config::default().vision;
        let b = field_edge_filter(&image(16, 12, |_, _| GREEN), &cfg);
        assert!(b.rows.iter().all(|&r| r == 0));
        assert_eq!(b.mask.count(), 16 * 12);
    }

    #[test]
    fn half_green_is_half_height() {
        let cfg = Config::default().vision;
        let img = image(20, 40, |_, y| if y < 20 { GREY } else { GREEN });
        let b = field_edge_filter(&img, &cfg);
        assert_eq!(b.rows, oracle_rows(&img, &cfg));
        assert!(b.rows.iter().all(|&r| r == 20));
    }

    #[test]
    fn convex_envelope_fills_dips() {
        let rows = vec![10, 10, 11, 30, 31, 12, 12, 480, 480, 13];
        let b = FieldBoundary::from_rows(10, 480, rows).convex();
        assert_eq!(b.rows[3], 11);
        assert_eq!(b.rows[4], 12);
        assert_eq!(b.rows[7], 13);
        assert!(b.rows.iter().all(|&r| r <= 13));
        let none = FieldBoundary::from_rows(4, 20, vec![20; 4]);
        assert_eq!(none.convex(), none);
    }

    #[test]
    fn no_green_is_empty() {
        let cfg = Config::default().vision;
        let b = field_edge_filter(&image(8, 8, |_, _| GREY), &cfg);
        assert!(b.rows.iter().all(|&r| r == 8));
        assert!(b.is_empty());
    }

    #[test]
    fn horizon_clips_boundary() {
        let cfg = Config::default().vision;
        let b = field_edge_filter_with_horizon(&image(8, 30, |_, _| GREEN), &cfg, Some(9.2));
        assert!(b.rows.iter().all(|&r| r == 10));
    }

    proptest! {
        #[test]
        fn convex_never_lowers_boundary(rows in proptest::collection::vec(0u32..=40, 1..30)) {
            let b = FieldBoundary::from_rows(rows.len() as u32, 40, rows.clone());
            let c = b.convex();
            for (x, (&r, &e)) in rows.iter().zip(&c.rows).enumerate() {
                prop_assert!(e <= r, "column {}", x);
            }
            // Convex: second differences of the envelope are non-negative
            // up to rounding, wherever three consecutive columns have field.
            for x in 1..rows.len().saturating_sub(1) {
                if rows[x - 1] < 40 && rows[x] < 40 && rows[x + 1] < 40 {
                    let d2 = c.rows[x - 1] as i64 + c.rows[x + 1] as i64 - 2 * c.rows[x] as i64;
                    prop_assert!(d2 >= -2);
                }
            }
        }

        #[test]
        fn matches_oracle_and_mask_is_below(bits in proptest::collection::vec(0u8..4, 24 * 30)) {
            let cfg = Config::default().vision;
            let img = image(24, 30, |x, y| if bits[(y * 24 + x) as usize] > 0 { GREEN } else { GREY });
            let b = field_edge_filter(&img, &cfg);
            prop_assert_eq!(&b.rows, &oracle_rows(&img, &cfg));
            for y in 0..30 {
                for x in 0..24 {
                    prop_assert_eq!(b.mask.get(x, y), y >= b.rows[x as usize]);
                }
            }
        }
    }
}
