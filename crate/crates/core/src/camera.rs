//! Pinhole camera geometry shared by the renderer and the vision-to-ground
//! projection.
//!
//! Image coordinates are continuous with the origin at the top-left corner;
//! pixel `(i, j)` covers `[i, i+1) x [j, j+1)` and its centre is at
//! `(i + 0.5, j + 0.5)`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::angle::Pose2D;
use crate::config::Config;
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fov_h_rad: f64,
    pub width: u32,
    pub height: u32,
    /// Optical centre height above the ground when standing.
    pub height_m: f64,
    /// Downward pitch of the optical axis at zero head tilt.
    pub mount_pitch_rad: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            fov_h_rad: 1.05,
            width: 640,
            height: 480,
            height_m: 0.45,
            mount_pitch_rad: 0.35,
        }
    }
}

/// World placement of the camera: optical centre plus yaw and downward pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub yaw: f64,
    pub pitch: f64,
    forward: Vector3<f64>,
    left: Vector3<f64>,
    up: Vector3<f64>,
}

impl CameraPose {
    pub fn new(position: Vector3<f64>, yaw: f64, pitch: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        Self {
            position,
            yaw,
            pitch,
            forward: Vector3::new(cy * cp, sy * cp, -sp),
            left: Vector3::new(-sy, cy, 0.0),
            up: Vector3::new(cy * sp, sy * sp, cp),
        }
    }

    /// Expresses a world point in camera axes (forward, left, up).
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let r = p - self.position;
        Vector3::new(r.dot(&self.forward), r.dot(&self.left), r.dot(&self.up))
    }
}

/// Image position and depth of a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl CameraModel {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            fov_h_rad: cfg.camera.fov_h_rad,
            width: cfg.camera.width,
            height: cfg.camera.height,
            height_m: cfg.camera.height_m,
            mount_pitch_rad: cfg.camera.mount_pitch_rad,
        }
    }

    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov_h_rad / 2.0).tan()
    }

    pub fn centre(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Camera pose for a robot at `robot` with the given head pan and tilt.
    pub fn pose_for(&self, robot: &Pose2D, pan: f64, tilt: f64) -> CameraPose {
        CameraPose::new(
            Vector3::new(robot.x, robot.y, self.height_m),
            robot.theta + pan,
            self.mount_pitch_rad + tilt,
        )
    }

    pub fn project(&self, pose: &CameraPose, p: &Vector3<f64>) -> Option<Projection> {
        let c = pose.to_camera(p);
        if c.x <= 1e-6 {
            return None;
        }
        let f = self.focal_px();
        let (cx, cy) = self.centre();
        Some(Projection {
            u: cx - f * c.y / c.x,
            v: cy - f * c.z / c.x,
            depth: c.x,
        })
    }

    /// World-frame (unnormalized) ray direction through image point `(u, v)`.
    pub fn ray(&self, pose: &CameraPose, u: f64, v: f64) -> Vector3<f64> {
        let f = self.focal_px();
        let (cx, cy) = self.centre();
        pose.forward + pose.left * ((cx - u) / f) + pose.up * ((cy - v) / f)
    }

    /// Intersection of the ray through `(u, v)` with the horizontal plane at
    /// height `plane_z`, or `None` when the ray does not descend onto it.
    pub fn ground_point(&self, pose: &CameraPose, u: f64, v: f64, plane_z: f64) -> Option<Point2> {
        let d = self.ray(pose, u, v);
        let dz = plane_z - pose.position.z;
        if d.z >= -1e-9 || dz > 0.0 {
            return None;
        }
        let t = dz / d.z;
        Some(Point2::new(pose.position.x + t * d.x, pose.position.y + t * d.y))
    }

    /// Image row of the horizon (rays above it never reach the ground).
    pub fn horizon_row(&self, pose: &CameraPose) -> f64 {
        self.centre().1 - self.focal_px() * pose.pitch.tan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_axis_point_projects_to_centre() {
        let cam = CameraModel::default();
        let pose = CameraPose::new(Vector3::new(0.0, 0.0, 0.45), 0.0, 0.0);
        let p = cam.project(&pose, &Vector3::new(2.0, 0.0, 0.45)).unwrap();
        assert!((p.u - 320.0).abs() < 1e-9 && (p.v - 240.0).abs() < 1e-9);
        assert!((p.depth - 2.0).abs() < 1e-12);
        assert!(cam.project(&pose, &Vector3::new(-1.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn ground_point_inverts_projection() {
        let cam = CameraModel::default();
        let pose = cam.pose_for(&Pose2D::new(1.0, -0.5, 0.7), 0.3, 0.2);
        let g = Vector3::new(2.1, 0.4, 0.0);
        let p = cam.project(&pose, &g).unwrap();
        let back = cam.ground_point(&pose, p.u, p.v, 0.0).unwrap();
        assert!((back - g.xy()).norm() < 1e-9);
    }

    #[test]
    fn horizon_row_matches_pitch() {
        let cam = CameraModel::default();
        let level = cam.pose_for(&Pose2D::default(), 0.0, -cam.mount_pitch_rad);
        assert!((cam.horizon_row(&level) - 240.0).abs() < 1e-9);
        let down = cam.pose_for(&Pose2D::default(), 0.0, 0.0);
        assert!(cam.horizon_row(&down) < 240.0);
    }
}
