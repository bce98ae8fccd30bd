//! Six-joint leg kinematics.
//!
//! Chain from the pelvis centre: hip offset `(0, ±o, 0)`, hip yaw (z), hip
//! roll (x), hip pitch (y), thigh `(0, 0, -t)`, knee (y), shank `(0, 0, -s)`,
//! ankle pitch (y), ankle roll (x).

use kidsize_core::{JointError, JointId, JointModel, Side};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IkError {
    #[error("target is not finite")]
    NonFinite,
    #[error("target at {distance:.4} m from the hip is outside [{min:.4}, {max:.4}]")]
    Unreachable { distance: f64, min: f64, max: f64 },
    #[error(transparent)]
    Limits(#[from] JointError),
}

/// Foot sole pose relative to the pelvis centre. Orientation is applied as
/// yaw, then pitch, then roll (`Rz·Ry·Rx`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootPose {
    pub position: Vector3<f64>,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl FootPose {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            position: Vector3::new(x, y, z),
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        rz(self.yaw) * ry(self.pitch) * rx(self.roll)
    }

    pub fn from_rotation(position: Vector3<f64>, r: &Matrix3<f64>) -> Self {
        Self {
            position,
            roll: r[(2, 1)].atan2(r[(2, 2)]),
            pitch: (-r[(2, 0)]).clamp(-1.0, 1.0).asin(),
            yaw: r[(1, 0)].atan2(r[(0, 0)]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.roll.is_finite()
            && self.pitch.is_finite()
            && self.yaw.is_finite()
    }

    /// Angle of the relative rotation between two poses.
    pub fn orientation_error(&self, other: &FootPose) -> f64 {
        // ‖R1 − R2‖_F = 2√2·sin(θ/2), well conditioned near zero.
        let f = (self.rotation() - other.rotation()).norm();
        2.0 * (f / (2.0 * std::f64::consts::SQRT_2)).min(1.0).asin()
    }
}

/// Joint angles of one leg in chain order: hip yaw, hip roll, hip pitch,
/// knee, ankle pitch, ankle roll.
pub type LegAngles = [f64; 6];

fn rx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn ry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn hip(side: Side, model: &JointModel) -> Vector3<f64> {
    Vector3::new(0.0, side.sign() * model.hip_offset_m, 0.0)
}

fn check(q: &LegAngles, side: Side, model: &JointModel) -> Result<(), JointError> {
    for (id, &a) in JointId::leg(side).iter().zip(q) {
        model.check_angle(*id, a)?;
    }
    Ok(())
}

/// Forward kinematics without limit checks.
pub fn leg_fk_unchecked(q: &LegAngles, side: Side, model: &JointModel) -> FootPose {
    let [yaw, roll, pitch, knee, a_pitch, a_roll] = *q;
    let r_hip = rz(yaw) * rx(roll) * ry(pitch);
    let thigh = Vector3::new(0.0, 0.0, -model.thigh_m);
    let shank = Vector3::new(0.0, 0.0, -model.shank_m);
    let position = hip(side, model) + r_hip * (thigh + ry(knee) * shank);
    let r_foot = r_hip * ry(knee) * ry(a_pitch) * rx(a_roll);
    FootPose::from_rotation(position, &r_foot)
}

pub fn leg_fk(q: &LegAngles, side: Side, model: &JointModel) -> Result<FootPose, JointError> {
    check(q, side, model)?;
    Ok(leg_fk_unchecked(q, side, model))
}

/// Closed-form inverse kinematics without limit checks.
///
/// The knee comes from the hip-to-ankle distance; the ankle angles from the
/// hip position seen in the foot frame; the hip angles from the remaining
/// rotation `Rz(yaw)·Rx(roll)·Ry(pitch)`.
pub fn leg_ik_unchecked(target: &FootPose, side: Side, model: &JointModel) -> Result<LegAngles, IkError> {
    if !target.is_finite() {
        return Err(IkError::NonFinite);
    }
    let (t, s) = (model.thigh_m, model.shank_m);
    let rf = target.rotation();
    let p = target.position - hip(side, model);
    let r = rf.transpose() * -p;
    let d = r.norm();
    let (min, max) = ((t - s).abs(), t + s);
    let slack = 1e-12 * max;
    if d > max + slack || d < min - slack {
        return Err(IkError::Unreachable { distance: d, min, max });
    }
    let knee = ((d * d - t * t - s * s) / (2.0 * t * s)).clamp(-1.0, 1.0).acos();

    let a_roll = r.y.atan2(r.z);
    let ux = t * knee.sin();
    let uz = -t * knee.cos() - s;
    let wx = -r.x;
    let wz = -(r.y * r.y + r.z * r.z).sqrt();
    let a_pitch = wx.atan2(-wz) - ux.atan2(-uz);

    let m = rf * rx(-a_roll) * ry(-(knee + a_pitch));
    let roll = m[(2, 1)].clamp(-1.0, 1.0).asin();
    let yaw = (-m[(0, 1)]).atan2(m[(1, 1)]);
    let pitch = (-m[(2, 0)]).atan2(m[(2, 2)]);
    Ok([yaw, roll, pitch, knee, kidsize_core::wrap_angle(a_pitch), a_roll])
}

pub fn leg_ik(target: &FootPose, side: Side, model: &JointModel) -> Result<LegAngles, IkError> {
    let q = leg_ik_unchecked(target, side, model)?;
    check(&q, side, model)?;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> JointModel {
        JointModel::new(0.11, 0.11, 0.035).unwrap()
    }

    #[test]
    fn zero_pose() {
        let m = model();
        for side in [Side::Left, Side::Right] {
            let f = leg_fk(&[0.0; 6], side, &m).unwrap();
            let want = Vector3::new(0.0, side.sign() * 0.035, -0.22);
            assert!((f.position - want).norm() < 1e-15);
            let q = leg_ik(&f, side, &m).unwrap();
            assert!(q.iter().all(|a| a.abs() < 1e-7), "{q:?}");
        }
    }

    #[test]
    fn knee_right_angle() {
        let m = model();
        let f = leg_fk(&[0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0], Side::Left, &m).unwrap();
        assert!((f.position.z + 0.11).abs() < 1e-12);
        assert!((f.position.x.abs() - 0.11).abs() < 1e-12);
    }

    #[test]
    fn raised_foot() {
        let m = model();
        let target = FootPose::new(0.0, 0.035, -0.20);
        let q = leg_ik(&target, Side::Left, &m).unwrap();
        assert!(q[3] > 0.0);
        assert!(q[2] < 0.0 && q[4] < 0.0);
        let f = leg_fk(&q, Side::Left, &m).unwrap();
        assert!((f.position - target.position).norm() < 1e-9);
        assert!(f.orientation_error(&target) < 1e-9);
    }

    #[test]
    fn out_of_reach() {
        let m = model();
        let far = FootPose::new(0.0, 0.035, -0.44);
        assert!(matches!(leg_ik(&far, Side::Left, &m), Err(IkError::Unreachable { .. })));
        let nan = FootPose::new(f64::NAN, 0.0, -0.2);
        assert_eq!(leg_ik(&nan, Side::Left, &m), Err(IkError::NonFinite));
    }

    #[test]
    fn fk_rejects_limits() {
        let m = model();
        assert!(leg_fk(&[0.0, 0.0, 0.0, -0.1, 0.0, 0.0], Side::Left, &m).is_err());
    }

    proptest! {
        #[test]
        fn ik_fk_round_trip(
            x in -0.06f64..0.06, y in -0.04f64..0.04, z in -0.21f64..-0.13,
            roll in -0.3f64..0.3, pitch in -0.3f64..0.3, yaw in -0.5f64..0.5,
            left in any::<bool>(),
        ) {
            let m = model();
            let side = if left { Side::Left } else { Side::Right };
            let mut target = FootPose::new(x, side.sign() * 0.035 + y, z);
            target.roll = roll;
            target.pitch = pitch;
            target.yaw = yaw;
            let q = leg_ik_unchecked(&target, side, &m).unwrap();
            let f = leg_fk_unchecked(&q, side, &m);
            prop_assert!((f.position - target.position).norm() < 1e-9);
            prop_assert!(f.orientation_error(&target) < 1e-9);
        }
    }
}
