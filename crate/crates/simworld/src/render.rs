//! Flat-shaded pinhole rendering of the field from a robot's head camera.

use kidsize_core::config::SimSection;
use kidsize_core::{CameraModel, CameraPose, FieldModel, Point2, Segment2};
use kidsize_vision::CameraFrame;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::world::{derived_rng, WorldState};

pub type CameraIntrinsics = CameraModel;

pub const GRASS: [u8; 3] = [40, 150, 40];
pub const LINE: [u8; 3] = [235, 235, 235];
pub const BALL: [u8; 3] = [245, 245, 245];
pub const BACKGROUND: [u8; 3] = [110, 110, 110];

/// Analytic image of the ball: projected centre and radius in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallTruth {
    pub u: f64,
    pub v: f64,
    pub radius_px: f64,
    pub depth: f64,
}

impl BallTruth {
    /// True when the whole disc lies inside the image.
    pub fn fully_inside(&self, cam: &CameraModel) -> bool {
        self.u - self.radius_px >= 0.0
            && self.v - self.radius_px >= 0.0
            && self.u + self.radius_px <= cam.width as f64
            && self.v + self.radius_px <= cam.height as f64
    }
}

/// Per-frame photometric jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub brightness: f64,
    pub hue_deg: f64,
}

impl Jitter {
    pub const NONE: Jitter = Jitter {
        brightness: 1.0,
        hue_deg: 0.0,
    };

    pub fn sample(w: &WorldState, robot: usize, cfg: &SimSection) -> Self {
        let mut rng = derived_rng(w, robot, 1);
        let b = cfg.brightness_jitter;
        let h = cfg.hue_jitter_deg;
        Self {
            brightness: if b > 0.0 { 1.0 + rng.random_range(-b..=b) } else { 1.0 },
            hue_deg: if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 },
        }
    }

    /// Applies brightness then a hue rotation about the grey axis.
    pub fn apply(&self, c: [u8; 3]) -> [u8; 3] {
        let (s, co) = self.hue_deg.to_radians().sin_cos();
        let m = Matrix3::new(
            0.299 + 0.701 * co + 0.168 * s,
            0.587 - 0.587 * co + 0.330 * s,
            0.114 - 0.114 * co - 0.497 * s,
            0.299 - 0.299 * co - 0.328 * s,
            0.587 + 0.413 * co + 0.035 * s,
            0.114 - 0.114 * co + 0.292 * s,
            0.299 - 0.300 * co + 1.250 * s,
            0.587 - 0.588 * co - 1.050 * s,
            0.114 + 0.886 * co - 0.203 * s,
        );
        let v = m * Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64) * self.brightness;
        [0, 1, 2].map(|i| v[i].round().clamp(0.0, 255.0) as u8)
    }
}

pub fn camera_pose(w: &WorldState, robot: usize, cam: &CameraModel, cfg: &SimSection) -> CameraPose {
    let r = &w.robots[robot];
    let (torso, _) = w.torso_pitch(robot, cfg);
    cam.pose_for(&r.pose, r.pan, r.tilt + torso)
}

pub fn project_ball(
    w: &WorldState,
    robot: usize,
    cam: &CameraModel,
    radius_m: f64,
    cfg: &SimSection,
) -> Option<BallTruth> {
    let b = w.ball?;
    let pose = camera_pose(w, robot, cam, cfg);
    let p = cam.project(&pose, &Vector3::new(b.position.x, b.position.y, radius_m))?;
    if p.depth <= radius_m {
        return None;
    }
    Some(BallTruth {
        u: p.u,
        v: p.v,
        radius_px: cam.focal_px() * radius_m / p.depth,
        depth: p.depth,
    })
}

/// Field paint lookup with bounding-box rejection; agrees with
/// [`FieldModel::is_line`].
struct Paint {
    half_width: f64,
    ring: (f64, f64),
    lines: Vec<(Point2, Point2, Segment2)>,
}

impl Paint {
    fn new(field: &FieldModel) -> Self {
        let hw = field.line_width_m / 2.0;
        let r = field.centre_circle_radius_m;
        let lines = field
            .line_segments
            .iter()
            .map(|s| {
                let lo = Point2::new(s.a.x.min(s.b.x) - hw, s.a.y.min(s.b.y) - hw);
                let hi = Point2::new(s.a.x.max(s.b.x) + hw, s.a.y.max(s.b.y) + hw);
                (lo, hi, *s)
            })
            .collect();
        Self {
            half_width: hw,
            ring: ((r - hw).max(0.0).powi(2), (r + hw).powi(2)),
            lines,
        }
    }

    fn is_line(&self, p: &Point2) -> bool {
        let r2 = p.norm_squared();
        if r2 >= self.ring.0 && r2 <= self.ring.1 {
            return true;
        }
        self.lines.iter().any(|(lo, hi, s)| {
            p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && s.distance_to_point(p) <= self.half_width
        })
    }
}

/// Renders RGB24 with the given jitter.
pub fn render_rgb(
    w: &WorldState,
    robot: usize,
    cam: &CameraModel,
    field: &FieldModel,
    ball_radius_m: f64,
    jitter: Jitter,
    cfg: &SimSection,
) -> Vec<u8> {
    let pose = camera_pose(w, robot, cam, cfg);
    let [grass, line, ball, bg] = [GRASS, LINE, BALL, BACKGROUND].map(|c| jitter.apply(c));
    let truth = project_ball(w, robot, cam, ball_radius_m, cfg);
    let paint = Paint::new(field);
    let (wd, ht) = (cam.width as usize, cam.height as usize);
    let mut out = vec![0u8; wd * ht * 3];
    for j in 0..ht {
        let v = j as f64 + 0.5;
        // The camera has no roll, so along a row the ground point is affine
        // in u (or the whole row misses the ground).
        let row = cam
            .ground_point(&pose, 0.5, v, 0.0)
            .zip(cam.ground_point(&pose, 1.5, v, 0.0));
        for i in 0..wd {
            let u = i as f64 + 0.5;
            let c = match truth {
                Some(t) if (u - t.u).powi(2) + (v - t.v).powi(2) <= t.radius_px * t.radius_px => ball,
                _ => match row {
                    Some((g0, g1)) => {
                        let g = g0 + (g1 - g0) * i as f64;
                        if !field.on_carpet(&g) {
                            bg
                        } else if paint.is_line(&g) {
                            line
                        } else {
                            grass
                        }
                    }
                    None => bg,
                },
            };
            out[(j * wd + i) * 3..][..3].copy_from_slice(&c);
        }
    }
    out
}

/// YUYV422 frame from robot `robot`'s camera, with seeded per-frame jitter.
pub fn render_camera(
    w: &WorldState,
    robot: usize,
    cam: &CameraModel,
    field: &FieldModel,
    ball_radius_m: f64,
    cfg: &SimSection,
) -> CameraFrame {
    let jitter = Jitter::sample(w, robot, cfg);
    let rgb = render_rgb(w, robot, cam, field, ball_radius_m, jitter, cfg);
    CameraFrame::from_rgb(cam.width, cam.height, &rgb, w.time_ns).expect("camera width is even")
}
