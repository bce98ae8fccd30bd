use crate::frame::CameraFrame;
use crate::pipeline::VisionResult;

fn put(rgb: &mut [u8], w: u32, h: u32, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < w && (y as u32) < h {
        let i = ((y as u32 * w + x as u32) * 3) as usize;
        rgb[i..i + 3].copy_from_slice(&c);
    }
}

fn line(rgb: &mut [u8], w: u32, h: u32, a: (f64, f64), b: (f64, f64), c: [u8; 3]) {
    let n = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0) as usize;
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let x = a.0 + (b.0 - a.0) * t;
        let y = a.1 + (b.1 - a.1) * t;
        put(rgb, w, h, x.floor() as i64, y.floor() as i64, c);
    }
}

/// RGB debug overlay: boundary in yellow, lines in red, short segments in
/// orange, candidates in blue, ball and circle in magenta.
pub fn annotate(frame: &CameraFrame, r: &VisionResult) -> Vec<u8> {
    let (w, h) = (frame.width, frame.height);
    let mut rgb = frame.to_rgb();
    for (x, &row) in r.boundary.iter().enumerate() {
        put(&mut rgb, w, h, x as i64, row as i64, [255, 255, 0]);
    }
    for c in &r.candidates {
        let b = c.bbox;
        let (x0, y0, x1, y1) = (b.x as f64, b.y as f64, b.right() as f64 - 1.0, b.bottom() as f64 - 1.0);
        for (p, q) in [
            ((x0, y0), (x1, y0)),
            ((x1, y0), (x1, y1)),
            ((x1, y1), (x0, y1)),
            ((x0, y1), (x0, y0)),
        ] {
            line(&mut rgb, w, h, p, q, [0, 80, 255]);
        }
    }
    for s in &r.short_segments {
        line(&mut rgb, w, h, (s.p0.x, s.p0.y), (s.p1.x, s.p1.y), [255, 140, 0]);
    }
    for s in &r.lines {
        line(&mut rgb, w, h, (s.p0.x, s.p0.y), (s.p1.x, s.p1.y), [255, 0, 0]);
    }
    let mut ring = |cx: f64, cy: f64, rad: f64| {
        let n = (rad * 8.0).ceil().max(16.0) as usize;
        for k in 0..n {
            let a = k as f64 * std::f64::consts::TAU / n as f64;
            put(
                &mut rgb,
                w,
                h,
                (cx + rad * a.cos()).floor() as i64,
                (cy + rad * a.sin()).floor() as i64,
                [255, 0, 255],
            );
        }
    };
    if let Some(b) = &r.ball {
        ring(b.centre.0, b.centre.1, b.radius);
    }
    if let Some(c) = &r.circle {
        ring(c.centre.x, c.centre.y, c.radius);
    }
    rgb
}
