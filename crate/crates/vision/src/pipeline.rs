use std::time::Instant;

use kidsize_core::config::VisionSection;
use serde::{Deserialize, Serialize};

use crate::boundary::field_edge_filter_with_horizon;
use crate::candidates::{classify_ball, select_candidates, BallDetection, Candidate, PixelBox};
use crate::circle::{detect_centre_circle, CircleDetection};
use crate::color::yuyv_to_hsv;
use crate::disc::disc_hypotheses;
use crate::frame::{CameraFrame, FrameError};
use crate::integral::build_integral;
use crate::lines::{detect_line_sets, LineSegment2D};

/// Everything the pipeline extracts from one frame. Contains no timing data,
/// so equal inputs give equal results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionResult {
    pub timestamp_ns: u64,
    pub ball: Option<BallDetection>,
    pub candidates: Vec<Candidate>,
    pub lines: Vec<LineSegment2D>,
    pub short_segments: Vec<LineSegment2D>,
    pub circle: Option<CircleDetection>,
    /// Per-column field boundary rows.
    pub boundary: Vec<u32>,
    pub field_pixels: u64,
}

/// Wall time per stage, milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub hsv_ms: f64,
    pub boundary_ms: f64,
    pub integral_ms: f64,
    pub candidates_ms: f64,
    pub classify_ms: f64,
    pub lines_ms: f64,
    pub circle_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub result: VisionResult,
    pub timings: StageTimings,
}

/// Pixels cleared around a detected ball before line detection.
const BALL_MARGIN_PX: u32 = 2;
const MIN_BALL_RADIUS_PX: f64 = 2.0;
const MAX_HYPOTHESES: usize = 256;
const MAX_HYPOTHESES_PER_REGION: usize = 128;

pub fn run_pipeline(
    frame: &CameraFrame,
    prev: Option<&BallDetection>,
    cfg: &VisionSection,
) -> Result<PipelineOutput, FrameError> {
    run_pipeline_with_horizon(frame, prev, cfg, None)
}

/// Full frame pipeline. `horizon_row` comes from the head kinematics when
/// known and is ignored unless `use_horizon` is set.
pub fn run_pipeline_with_horizon(
    frame: &CameraFrame,
    prev: Option<&BallDetection>,
    cfg: &VisionSection,
    horizon_row: Option<f64>,
) -> Result<PipelineOutput, FrameError> {
    let start = Instant::now();
    let mut t = StageTimings::default();
    let mut lap = Instant::now();
    let mut tick = |slot: &mut f64| {
        let now = Instant::now();
        *slot = (now - lap).as_secs_f64() * 1e3;
        lap = now;
    };

    let hsv = yuyv_to_hsv(frame)?;
    tick(&mut t.hsv_ms);

    let horizon = if cfg.use_horizon { horizon_row } else { None };
    let boundary = field_edge_filter_with_horizon(&hsv, cfg, horizon).convex();
    // The ball may poke above the field edge, so its search uses the full
    // white mask; line detection keeps to the field.
    let white_all = hsv.white_mask(cfg);
    let mut white = white_all.and(&boundary.mask);
    tick(&mut t.boundary_ms);

    let ii = build_integral(&white_all);
    tick(&mut t.integral_ms);

    let candidates = select_candidates(&ii, &boundary, cfg);
    tick(&mut t.candidates_ms);

    let mut ball: Option<BallDetection> = None;
    let mut ball_box = None;
    let pad = cfg.window_scales.iter().copied().max().unwrap_or(0) / 2;
    let mut budget = MAX_HYPOTHESES;
    for c in &candidates {
        if budget == 0 {
            break;
        }
        let b = c.bbox;
        let x0 = b.x.saturating_sub(pad);
        let y0 = b.y.saturating_sub(pad);
        let region = PixelBox {
            x: x0,
            y: y0,
            w: (b.right() + pad).min(white.width) - x0,
            h: (b.bottom() + pad).min(white.height) - y0,
        };
        let hyps = disc_hypotheses(
            &white_all,
            &region,
            MIN_BALL_RADIUS_PX,
            budget.min(MAX_HYPOTHESES_PER_REGION),
        );
        budget -= hyps.len();
        for h in hyps {
            // The ground contact point lies on the field.
            let col = (h.centre.0 as usize).min(boundary.rows.len() - 1);
            if h.centre.1 + h.radius + 1.0 < boundary.rows[col] as f64 {
                continue;
            }
            let cand = Candidate::from_box(&ii, h.bbox);
            if let Some(mut d) = classify_ball(&cand, prev, cfg) {
                d.centre = h.centre;
                d.radius = h.radius;
                if ball.is_none_or(|b| d.score > b.score) {
                    ball = Some(d);
                    ball_box = Some(h.bbox);
                }
            }
        }
    }
    tick(&mut t.classify_ms);

    if let Some(b) = ball_box {
        let x0 = b.x.saturating_sub(BALL_MARGIN_PX);
        let y0 = b.y.saturating_sub(BALL_MARGIN_PX);
        let x1 = (b.right() + BALL_MARGIN_PX).min(white.width);
        let y1 = (b.bottom() + BALL_MARGIN_PX).min(white.height);
        for y in y0..y1 {
            for x in x0..x1 {
                white.set(x, y, false);
            }
        }
    }
    let sets = detect_line_sets(&white, cfg);
    tick(&mut t.lines_ms);

    let circle = detect_centre_circle(&sets.short, cfg);
    tick(&mut t.circle_ms);
    t.total_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok(PipelineOutput {
        result: VisionResult {
            timestamp_ns: frame.timestamp_ns,
            ball,
            candidates,
            lines: sets.lines,
            short_segments: sets.short,
            circle,
            field_pixels: boundary.mask.count(),
            boundary: boundary.rows,
        },
        timings: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kidsize_core::Config;

    #[test]
    fn black_frame_is_empty() {
        let cfg = Config::default().vision;
        let f = CameraFrame::filled(640, 480, 0, 128, 128).unwrap();
        let out = run_pipeline(&f, None, &cfg).unwrap();
        let r = out.result;
        assert!(r.ball.is_none());
        assert!(r.lines.is_empty());
        assert_eq!(r.field_pixels, 0);
        assert!(r.boundary.iter().all(|&b| b == 480));
    }

    #[test]
    fn ball_on_green_found_and_deterministic() {
        let cfg = Config::default().vision;
        let (w, h) = (320u32, 240u32);
        let (cx, cy, r) = (150.3, 170.7, 12.0);
        let mut rgb = Vec::with_capacity((w * h * 3) as usize);
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                let px = if dx * dx + dy * dy <= r * r {
                    [240, 240, 240]
                } else if y < 40 {
                    [110, 110, 110]
                } else {
                    [40, 150, 40]
                };
                rgb.extend_from_slice(&px);
            }
        }
        let f = CameraFrame::from_rgb(w, h, &rgb, 7).unwrap();
        let a = run_pipeline(&f, None, &cfg).unwrap().result;
        let b = run_pipeline(&f, None, &cfg).unwrap().result;
        assert_eq!(a, b);
        let ball = a.ball.expect("ball");
        assert!(
            (ball.centre.0 - cx).abs() < 1.5 && (ball.centre.1 - cy).abs() < 1.5,
            "{ball:?}"
        );
        assert!(a.boundary.iter().all(|&row| row == 40));
    }
}
