//! Extended Kalman filter over the robot pose `(x, y, θ)` in the field frame.

use kidsize_core::config::EkfSection;
use kidsize_core::{wrap_angle, FieldModel, Point2, Pose2D, Segment2};
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EkfError {
    #[error("odometry is not finite")]
    NonFiniteOdometry,
    #[error("time step {0} must be positive and finite")]
    BadDt(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub mean: Pose2D,
    pub cov: Matrix3<f64>,
    pub confidence: f64,
    pub last_update_ns: u64,
}

impl BeliefState {
    pub fn new(mean: Pose2D, var_xy: f64, var_theta: f64, confidence: f64) -> Self {
        Self {
            mean,
            cov: Matrix3::from_diagonal(&Vector3::new(var_xy, var_xy, var_theta)),
            confidence: confidence.clamp(0.0, 1.0),
            last_update_ns: 0,
        }
    }

    /// Broad prior around `mean` using the configured initial variances.
    pub fn initial(mean: Pose2D, cfg: &EkfSection) -> Self {
        Self::new(mean, cfg.initial_var_xy, cfg.initial_var_theta, 0.0)
    }

    /// Tight belief at the kick-off pose, used on high-confidence events.
    pub fn kickoff(pose: Pose2D, cfg: &EkfSection) -> Self {
        Self::new(pose, cfg.kickoff_var_xy, cfg.kickoff_var_theta, 1.0)
    }

    pub fn std_dev(&self) -> Vector3<f64> {
        Vector3::new(
            self.cov[(0, 0)].max(0.0).sqrt(),
            self.cov[(1, 1)].max(0.0).sqrt(),
            self.cov[(2, 2)].max(0.0).sqrt(),
        )
    }

    /// Smallest covariance eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.cov
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_valid(&self) -> bool {
        self.mean.is_finite()
            && self.cov.iter().all(|v| v.is_finite())
            && (self.cov - self.cov.transpose()).abs().max() <= 1e-12 * (1.0 + self.cov.abs().max())
            && self.min_eigenvalue() >= -1e-12
            && (0.0..=1.0).contains(&self.confidence)
    }

    /// The same belief expressed for the point-symmetric field half:
    /// `(x, y, θ) → (−x, −y, θ + π)`.
    pub fn mirrored(&self) -> Self {
        let j = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        Self {
            mean: self.mean.mirrored(),
            cov: j * self.cov * j,
            ..self.clone()
        }
    }
}

fn symmetrize(p: Matrix3<f64>) -> Matrix3<f64> {
    (p + p.transpose()) * 0.5
}

/// Motion model: odometry `delta` applied in the robot frame.
pub fn motion_model(mean: &Pose2D, delta: &Pose2D) -> Pose2D {
    mean.compose(delta)
}

/// Jacobian of [`motion_model`] with respect to the state.
pub fn motion_jacobian(mean: &Pose2D, delta: &Pose2D) -> Matrix3<f64> {
    let (s, c) = mean.theta.sin_cos();
    Matrix3::new(
        1.0,
        0.0,
        -delta.x * s - delta.y * c,
        0.0,
        1.0,
        delta.x * c - delta.y * s,
        0.0,
        0.0,
        1.0,
    )
}

pub fn ekf_predict(b: &BeliefState, odom: &Pose2D, dt: f64, cfg: &EkfSection) -> Result<BeliefState, EkfError> {
    if !odom.is_finite() {
        return Err(EkfError::NonFiniteOdometry);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EkfError::BadDt(dt));
    }
    let f = motion_jacobian(&b.mean, odom);
    let q = Matrix3::from_diagonal(&Vector3::new(cfg.q_x, cfg.q_y, cfg.q_theta)) * dt;
    Ok(BeliefState {
        mean: motion_model(&b.mean, odom),
        cov: symmetrize(f * b.cov * f.transpose() + q),
        confidence: (b.confidence * (-cfg.conf_decay * dt).exp()).clamp(0.0, 1.0),
        last_update_ns: b.last_update_ns,
    })
}

/// Joseph-form update for a measurement of dimension `N`.
fn update<const N: usize>(
    b: &BeliefState,
    innovation: nalgebra::SVector<f64, N>,
    h: nalgebra::SMatrix<f64, N, 3>,
    r: nalgebra::SMatrix<f64, N, N>,
) -> Option<BeliefState> {
    let p = b.cov;
    let s = h * p * h.transpose() + r;
    let k = p * h.transpose() * s.try_inverse()?;
    let dx = k * innovation;
    let ikh = Matrix3::identity() - k * h;
    let cov = symmetrize(ikh * p * ikh.transpose() + k * r * k.transpose());
    let mean = Pose2D::new(b.mean.x + dx[0], b.mean.y + dx[1], wrap_angle(b.mean.theta + dx[2]));
    if !mean.is_finite() || !cov.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(BeliefState { mean, cov, ..b.clone() })
}

/// Scalar update of θ from an absolute heading measurement.
pub fn ekf_update_heading(b: &BeliefState, z: f64, cfg: &EkfSection) -> BeliefState {
    if !z.is_finite() {
        return b.clone();
    }
    let innovation = nalgebra::SVector::<f64, 1>::new(wrap_angle(z - b.mean.theta));
    let h = nalgebra::SMatrix::<f64, 1, 3>::new(0.0, 0.0, 1.0);
    let r = nalgebra::SMatrix::<f64, 1, 1>::new(cfg.heading_var);
    update(b, innovation, h, r).unwrap_or_else(|| b.clone())
}

/// A field line in normal form: points `p` with `n·p = c`, `|n| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineModel {
    pub segment: Segment2,
    pub normal: Point2,
    pub offset: f64,
}

impl LineModel {
    pub fn from_segment(s: Segment2) -> Self {
        let d = s.direction();
        let normal = Point2::new(-d.y, d.x);
        Self {
            segment: s,
            normal,
            offset: normal.dot(&s.a),
        }
    }
}

/// Predicted `(distance, normal bearing)` of a field line from `pose`; the
/// normal is oriented from the robot towards the line. Also returns the
/// measurement Jacobian.
pub fn line_measurement(pose: &Pose2D, line: &LineModel) -> (Vector2<f64>, Matrix2x3<f64>) {
    let mut n = line.normal;
    let mut c = line.offset;
    if c - n.dot(&pose.position()) < 0.0 {
        n = -n;
        c = -c;
    }
    let d = c - n.dot(&pose.position());
    let gamma = n.y.atan2(n.x);
    let z = Vector2::new(d, wrap_angle(gamma - pose.theta));
    let h = Matrix2x3::new(-n.x, -n.y, 0.0, 0.0, 0.0, -1.0);
    (z, h)
}

/// Distance and normal bearing of an observed robot-frame segment's carrier
/// line; `None` when the robot stands on it.
pub fn observed_line(s: &Segment2) -> Option<Vector2<f64>> {
    let t = s.project_param(&Point2::zeros());
    let foot = s.a + (s.b - s.a) * t;
    let d = foot.norm();
    if !(d > 1e-3) || !(s.length() > 0.0) {
        return None;
    }
    Some(Vector2::new(d, foot.y.atan2(foot.x)))
}

fn undirected_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b).abs();
    d.min(std::f64::consts::PI - d)
}

/// Index of the model line an observation (already in the field frame) is
/// associated with, or `None` when every line fails the gates.
pub fn associate(obs_field: &Segment2, lines: &[LineModel], cfg: &EkfSection) -> Option<usize> {
    let mid = obs_field.midpoint();
    let mut best: Option<(usize, f64)> = None;
    for (i, l) in lines.iter().enumerate() {
        if undirected_diff(obs_field.angle(), l.segment.angle()) > cfg.assoc_angle_rad {
            continue;
        }
        let dist = l
            .segment
            .line_distance(&obs_field.a)
            .max(l.segment.line_distance(&obs_field.b));
        if dist > cfg.assoc_dist_m {
            continue;
        }
        // The observation must overlap the model segment, allowing some slack.
        let len = l.segment.length();
        let ta = l.segment.project_param(&obs_field.a) * len;
        let tb = l.segment.project_param(&obs_field.b) * len;
        let (lo, hi) = (ta.min(tb), ta.max(tb));
        if hi < -cfg.assoc_overlap_m || lo > len + cfg.assoc_overlap_m {
            continue;
        }
        let score = l.segment.line_distance(&mid);
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// Sequential line updates, longest observation first. Observations beyond
/// `max_line_range_m` or failing association are skipped; each match nudges
/// confidence up by `conf_match_gain`.
pub fn ekf_update_lines(b: &BeliefState, observed: &[Segment2], field: &FieldModel, cfg: &EkfSection) -> BeliefState {
    let lines: Vec<LineModel> = field
        .line_segments
        .iter()
        .map(|s| LineModel::from_segment(*s))
        .collect();
    let mut order: Vec<&Segment2> = observed
        .iter()
        .filter(|s| s.length() > 0.0 && s.midpoint().norm() <= cfg.max_line_range_m)
        .collect();
    order.sort_by(|a, b| b.length().total_cmp(&a.length()));
    let r = Matrix2::from_diagonal(&Vector2::new(cfg.line_dist_var, cfg.line_angle_var));
    let mut out = b.clone();
    for s in order {
        let Some(z) = observed_line(s) else { continue };
        let in_field = Segment2::new(out.mean.to_field(&s.a), out.mean.to_field(&s.b));
        let Some(i) = associate(&in_field, &lines, cfg) else {
            continue;
        };
        let (pred, h) = line_measurement(&out.mean, &lines[i]);
        let innovation = Vector2::new(z[0] - pred[0], wrap_angle(z[1] - pred[1]));
        if let Some(next) = update(&out, innovation, h, r) {
            out = next;
            out.confidence += cfg.conf_match_gain * (1.0 - out.confidence);
        }
    }
    out
}

/// Update from a point landmark seen at `observed` in the robot frame.
pub fn ekf_update_point(b: &BeliefState, observed: &Point2, landmark: &Point2, var: f64) -> BeliefState {
    let (pred, h) = point_measurement(&b.mean, landmark);
    let innovation = observed - pred;
    let r = Matrix2::identity() * var;
    update(b, innovation, h, r).unwrap_or_else(|| b.clone())
}

/// Robot-frame position of a field point and its Jacobian.
pub fn point_measurement(pose: &Pose2D, landmark: &Point2) -> (Vector2<f64>, Matrix2x3<f64>) {
    let (s, c) = pose.theta.sin_cos();
    let dx = landmark.x - pose.x;
    let dy = landmark.y - pose.y;
    let z = Vector2::new(c * dx + s * dy, -s * dx + c * dy);
    let h = Matrix2x3::new(-c, -s, -s * dx + c * dy, s, -c, -c * dx - s * dy);
    (z, h)
}
