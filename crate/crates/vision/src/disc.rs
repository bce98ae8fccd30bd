//! Inscribed-disc hypotheses inside a candidate region.
//!
//! The squared Euclidean distance transform of the white mask peaks at the
//! centre of any round blob, with the peak value the blob's radius squared.
//! Straight lines only reach half their width, and a line touching the ball
//! does not move the ball's peak, so the peaks make clean ball boxes even
//! where the white mask joins the ball to the field markings.

use serde::{Deserialize, Serialize};

use crate::candidates::PixelBox;
use crate::mask::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscHypothesis {
    /// Continuous image coordinates.
    pub centre: (f64, f64),
    pub radius: f64,
    /// Square box of side about `2 * radius` around the centre.
    pub bbox: PixelBox,
}

/// Stand-in for infinity; large against any squared in-image distance yet
/// small enough that differences of it stay exact.
const FAR: f64 = 1e12;

/// One-dimensional squared distance transform of a sampled function
/// (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let mut s;
        loop {
            let pf = v[k] as f64;
            s = ((f[q] + qf * qf) - (f[v[k]] + pf * pf)) / (2.0 * (qf - pf));
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from each pixel of `region` to the nearest unset pixel;
/// pixels outside the region count as unset. Row-major over the region.
pub fn squared_distance(mask: &Mask, region: &PixelBox) -> Vec<f64> {
    let (w, h) = (region.w as usize + 2, region.h as usize + 2);
    let mut g = vec![0.0; w * h];
    for y in 0..region.h as usize {
        for x in 0..region.w as usize {
            if mask.get(region.x + x as u32, region.y + y as u32) {
                g[(y + 1) * w + x + 1] = FAR;
            }
        }
    }
    let n = w.max(h);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..w {
        for y in 0..h {
            f[y] = g[y * w + x];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            g[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&g[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        g[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    let mut res = Vec::with_capacity(region.area() as usize);
    for y in 1..h - 1 {
        res.extend_from_slice(&g[y * w + 1..y * w + w - 1]);
    }
    res
}

/// Up to `max` disc hypotheses in `region`, largest first. Peaks closer to
/// an accepted one than its radius are suppressed; radii below `min_radius`
/// are ignored.
pub fn disc_hypotheses(mask: &Mask, region: &PixelBox, min_radius: f64, max: usize) -> Vec<DiscHypothesis> {
    if region.w == 0 || region.h == 0 || max == 0 {
        return Vec::new();
    }
    let dt = squared_distance(mask, region);
    let (w, h) = (region.w as usize, region.h as usize);
    let floor = (min_radius + 0.5).powi(2);
    let mut peaks: Vec<(f64, usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = dt[y * w + x];
            if v < floor {
                continue;
            }
            let mut is_max = true;
            'n: for ny in y.saturating_sub(1)..(y + 2).min(h) {
                for nx in x.saturating_sub(1)..(x + 2).min(w) {
                    if dt[ny * w + nx] > v {
                        is_max = false;
                        break 'n;
                    }
                }
            }
            if is_max {
                peaks.push((v, y, x));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut out: Vec<DiscHypothesis> = Vec::new();
    let mut accepted: Vec<(f64, f64, f64)> = Vec::new();
    for (v, py, px) in peaks {
        if out.len() >= max {
            break;
        }
        let d = v.sqrt();
        let (fx, fy) = (px as f64, py as f64);
        if accepted.iter().any(|&(ax, ay, ad)| (ax - fx).hypot(ay - fy) < ad) {
            continue;
        }
        accepted.push((fx, fy, d));
        // Centroid of the near-peak plateau.
        let lo = (d - 1.0).max(0.0).powi(2);
        let reach = d.ceil() as usize;
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in py.saturating_sub(reach)..(py + reach + 1).min(h) {
            for x in px.saturating_sub(reach)..(px + reach + 1).min(w) {
                let (dx, dy) = (x as f64 - fx, y as f64 - fy);
                if dx * dx + dy * dy <= v && dt[y * w + x] >= lo {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1.0;
                }
            }
        }
        let cx = region.x as f64 + sx / n + 0.5;
        let cy = region.y as f64 + sy / n + 0.5;
        let radius = d - 0.5;
        let side = (2.0 * radius).round().max(1.0);
        let x0 = (cx - side / 2.0)
            .round()
            .clamp(0.0, (mask.width as f64 - side).max(0.0));
        let y0 = (cy - side / 2.0)
            .round()
            .clamp(0.0, (mask.height as f64 - side).max(0.0));
        out.push(DiscHypothesis {
            centre: (cx, cy),
            radius,
            bbox: PixelBox {
                x: x0 as u32,
                y: y0 as u32,
                w: (side as u32).min(mask.width),
                h: (side as u32).min(mask.height),
            },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disc(m: &mut Mask, cx: f64, cy: f64, r: f64) {
        for y in 0..m.height {
            for x in 0..m.width {
                if (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= r * r {
                    m.set(x, y, true);
                }
            }
        }
    }

    fn brute(mask: &Mask, r: &PixelBox) -> Vec<f64> {
        let mut zeros = Vec::new();
        for y in -1..=r.h as i64 {
            for x in -1..=r.w as i64 {
                let inside = x >= 0 && y >= 0 && x < r.w as i64 && y < r.h as i64;
                if !inside || !mask.get(r.x + x as u32, r.y + y as u32) {
                    zeros.push((x, y));
                }
            }
        }
        let mut out = Vec::new();
        for y in 0..r.h as i64 {
            for x in 0..r.w as i64 {
                let best = zeros
                    .iter()
                    .map(|&(zx, zy)| ((zx - x).pow(2) + (zy - y).pow(2)) as f64)
                    .fold(f64::INFINITY, f64::min);
                out.push(best);
            }
        }
        out
    }

    #[test]
    fn disc_centre_and_radius() {
        let mut m = Mask::new(120, 100);
        disc(&mut m, 50.3, 40.7, 15.0);
        let hs = disc_hypotheses(
            &m,
            &PixelBox {
                x: 0,
                y: 0,
                w: 120,
                h: 100,
            },
            2.0,
            4,
        );
        let h = hs[0];
        assert!(
            (h.centre.0 - 50.3).abs() < 0.6 && (h.centre.1 - 40.7).abs() < 0.6,
            "{h:?}"
        );
        assert!((h.radius - 15.0).abs() < 1.0);
        assert!((h.bbox.w as f64 - 30.0).abs() <= 2.0);
    }

    #[test]
    fn line_does_not_move_ball_peak() {
        let mut m = Mask::new(160, 100);
        disc(&mut m, 80.0, 50.0, 14.0);
        for y in 0..100 {
            for x in 0..160 {
                if (y as f64 + 0.5 - 52.0).abs() <= 4.0 {
                    m.set(x, y, true);
                }
            }
        }
        let h = disc_hypotheses(
            &m,
            &PixelBox {
                x: 0,
                y: 0,
                w: 160,
                h: 100,
            },
            2.0,
            8,
        )[0];
        assert!((h.centre.0 - 80.0).hypot(h.centre.1 - 50.0) < 1.0, "{h:?}");
    }

    proptest! {
        #[test]
        fn transform_matches_brute_force(bits in proptest::collection::vec(any::<bool>(), 12 * 9), rx in 0u32..4, ry in 0u32..3) {
            let mut m = Mask::new(12, 9);
            for (i, b) in bits.iter().enumerate() {
                m.set(i as u32 % 12, i as u32 / 12, *b);
            }
            let r = PixelBox { x: rx, y: ry, w: 12 - rx - 1, h: 9 - ry - 1 };
            prop_assert_eq!(squared_distance(&m, &r), brute(&m, &r));
        }
    }
}
