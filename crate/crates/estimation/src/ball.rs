//! Constant-velocity ball tracker in the robot frame.

use kidsize_core::config::BallSection;
use kidsize_core::{Point2, Pose2D};
use nalgebra::{Matrix2x4, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFilter {
    /// `(x, y, vx, vy)` relative to the robot.
    pub state: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub last_seen_ns: Option<u64>,
}

impl Default for BallFilter {
    fn default() -> Self {
        Self {
            state: Vector4::zeros(),
            cov: Matrix4::identity(),
            last_seen_ns: None,
        }
    }
}

impl BallFilter {
    pub fn position(&self) -> Option<Point2> {
        self.last_seen_ns.map(|_| Point2::new(self.state[0], self.state[1]))
    }

    pub fn velocity(&self) -> Point2 {
        Point2::new(self.state[2], self.state[3])
    }

    /// Seconds since the last sighting; infinite if never seen.
    pub fn age_s(&self, now_ns: u64) -> f64 {
        match self.last_seen_ns {
            Some(t) => now_ns.saturating_sub(t) as f64 * 1e-9,
            None => f64::INFINITY,
        }
    }

    /// Propagates the ball by `dt` and re-expresses it after the robot moved
    /// by `odom` (robot frame).
    pub fn predict(&mut self, dt: f64, odom: &Pose2D, cfg: &BallSection) {
        if self.last_seen_ns.is_none() || !(dt >= 0.0) || !odom.is_finite() {
            return;
        }
        let mut f = Matrix4::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        let (dt2, dt3, dt4) = (dt * dt, dt * dt * dt / 2.0, dt * dt * dt * dt / 4.0);
        let a = cfg.accel_var;
        let q = Matrix4::new(
            dt4, 0.0, dt3, 0.0, 0.0, dt4, 0.0, dt3, dt3, 0.0, dt2, 0.0, 0.0, dt3, 0.0, dt2,
        ) * a;
        self.state = f * self.state;
        self.cov = f * self.cov * f.transpose() + q;

        // Robot motion: p' = R(−dθ)(p − t), v' = R(−dθ)v.
        let (s, c) = odom.theta.sin_cos();
        let mut g = Matrix4::zeros();
        g[(0, 0)] = c;
        g[(0, 1)] = s;
        g[(1, 0)] = -s;
        g[(1, 1)] = c;
        g[(2, 2)] = c;
        g[(2, 3)] = s;
        g[(3, 2)] = -s;
        g[(3, 3)] = c;
        let shifted = Vector4::new(
            self.state[0] - odom.x,
            self.state[1] - odom.y,
            self.state[2],
            self.state[3],
        );
        self.state = g * shifted;
        self.cov = g * self.cov * g.transpose();
    }

    pub fn update(&mut self, observed: &Point2, now_ns: u64, cfg: &BallSection) {
        if !(observed.x.is_finite() && observed.y.is_finite()) {
            return;
        }
        if self.last_seen_ns.is_none() {
            self.state = Vector4::new(observed.x, observed.y, 0.0, 0.0);
            self.cov = Matrix4::from_diagonal(&Vector4::new(cfg.meas_var, cfg.meas_var, 1.0, 1.0));
            self.last_seen_ns = Some(now_ns);
            return;
        }
        let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let r = nalgebra::Matrix2::identity() * cfg.meas_var;
        let s = h * self.cov * h.transpose() + r;
        let Some(si) = s.try_inverse() else { return };
        let k = self.cov * h.transpose() * si;
        let innovation = observed - h * self.state;
        self.state += k * innovation;
        let ikh = Matrix4::identity() - k * h;
        self.cov = ikh * self.cov * ikh.transpose() + k * r * k.transpose();
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
        self.last_seen_ns = Some(now_ns);
    }
}
