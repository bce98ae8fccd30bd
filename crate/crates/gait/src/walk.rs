//! Oscillatory walk engine.
//!
//! One gait cycle holds two steps. Each foot has its own phase (the right
//! foot runs half a cycle behind the left) split into a swing part
//! `[0, 1 - support_ratio)` and a support part. During support the foot
//! slides linearly under the torso; during swing it returns along a cubic
//! Hermite curve whose end slopes match the support motion, so velocities
//! stay continuous. The torso sways sideways over whichever foot supports it.

use std::f64::consts::TAU;

use kidsize_core::config::WalkSection;
use kidsize_core::{JointId, JointModel, JointTargets, Pose2D, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{leg_ik, FootPose, IkError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),
    #[error("tick length {0} s outside (0, 0.1]")]
    BadDt(f64),
    #[error("no leg solution at phase {phase:.4} for the {side:?} foot: {source}")]
    Ik {
        phase: f64,
        side: Side,
        #[source]
        source: IkError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub frequency_hz: f64,
    /// Forward travel per step.
    pub step_m: f64,
    pub lateral_m: f64,
    pub turn_rad: f64,
    /// Peak foot lift during swing.
    pub rise_m: f64,
    /// Lateral torso sway amplitude.
    pub swing_m: f64,
    pub support_ratio: f64,
    pub stand_height_m: f64,
    /// Added to the solved joint angles, indexed by [`JointId::index`].
    pub trim_offsets: [f64; 20],
    pub enabled: bool,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self::from_section(&kidsize_core::Config::default().walk)
    }
}

impl WalkParams {
    pub fn from_section(w: &WalkSection) -> Self {
        Self {
            frequency_hz: w.frequency_hz,
            step_m: w.step_m,
            lateral_m: w.lateral_m,
            turn_rad: w.turn_rad,
            rise_m: w.rise_m,
            swing_m: w.swing_m,
            support_ratio: w.support_ratio,
            stand_height_m: w.stand_height_m,
            trim_offsets: [0.0; 20],
            enabled: true,
        }
    }

    /// Same parameters with the motion terms zeroed.
    pub fn standing(&self) -> Self {
        Self {
            step_m: 0.0,
            lateral_m: 0.0,
            turn_rad: 0.0,
            rise_m: 0.0,
            swing_m: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        let bad = |m: &str| Err(WalkError::InvalidParams(m.to_string()));
        let all = [
            self.frequency_hz,
            self.step_m,
            self.lateral_m,
            self.turn_rad,
            self.rise_m,
            self.swing_m,
            self.support_ratio,
            self.stand_height_m,
        ];
        if !all.iter().chain(&self.trim_offsets).all(|v| v.is_finite()) {
            return bad("non-finite value");
        }
        if self.frequency_hz <= 0.0 {
            return bad("frequency must be positive");
        }
        if self.rise_m < 0.0 {
            return bad("rise must be non-negative");
        }
        if !(0.5..1.0).contains(&self.support_ratio) {
            return bad("support ratio must lie in [0.5, 1)");
        }
        if self.stand_height_m <= 0.0 {
            return bad("stand height must be positive");
        }
        Ok(())
    }
}

/// Position within one two-step cycle, kept in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GaitPhase(f64);

impl GaitPhase {
    pub fn new(p: f64) -> Self {
        let w = p.rem_euclid(1.0);
        Self(if w >= 1.0 { 0.0 } else { w })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn advance(self, delta: f64) -> Self {
        Self::new(self.0 + delta)
    }
}

/// Offsets of one foot from its standing position, at foot phase `psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootOffset {
    pub x: f64,
    pub y: f64,
    /// Height above the ground; exactly zero during support.
    pub z: f64,
    pub yaw: f64,
}

/// Linear slide during support, Hermite return during swing. `amp` is the
/// distance travelled by the torso per step; the foot sweeps `±amp·r`.
fn sweep(amp: f64, psi: f64, r: f64) -> f64 {
    let a = amp * r;
    let swing = 1.0 - r;
    if psi < swing {
        let s = psi / swing;
        let slope = -2.0 * a / r * swing;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * -a + h10 * slope + h01 * a + h11 * slope
    } else {
        a - 2.0 * a * (psi - swing) / r
    }
}

pub fn foot_offset(params: &WalkParams, psi: f64) -> FootOffset {
    let r = params.support_ratio;
    let swing = 1.0 - r;
    let psi = psi.rem_euclid(1.0);
    let z = if psi < swing {
        let s = psi / swing;
        params.rise_m * 64.0 * (s * (1.0 - s)).powi(3)
    } else {
        0.0
    };
    FootOffset {
        x: sweep(params.step_m, psi, r),
        y: sweep(params.lateral_m, psi, r),
        z,
        yaw: sweep(params.turn_rad, psi, r),
    }
}

/// Lateral torso position; the torso is over the right foot while the left
/// swings and vice versa.
pub fn torso_sway(params: &WalkParams, phase: f64) -> f64 {
    let mid = (1.0 - params.support_ratio) / 2.0;
    -params.swing_m * (TAU * (phase - mid)).cos()
}

pub fn foot_phase(phase: f64, side: Side) -> f64 {
    match side {
        Side::Left => phase.rem_euclid(1.0),
        Side::Right => (phase + 0.5).rem_euclid(1.0),
    }
}

/// Target pose of one foot relative to the pelvis centre.
pub fn foot_target(params: &WalkParams, phase: f64, side: Side, model: &JointModel) -> FootPose {
    let o = foot_offset(params, foot_phase(phase, side));
    let sway = torso_sway(params, phase);
    let mut pose = FootPose::new(
        o.x,
        side.sign() * model.hip_offset_m + o.y - sway,
        -params.stand_height_m + o.z,
    );
    pose.yaw = o.yaw;
    pose
}

fn solve(params: &WalkParams, phase: f64, model: &JointModel) -> Result<JointTargets, WalkError> {
    let mut targets = JointTargets::default();
    for side in [Side::Left, Side::Right] {
        let pose = foot_target(params, phase, side, model);
        let q = leg_ik(&pose, side, model).map_err(|source| WalkError::Ik { phase, side, source })?;
        for (id, a) in JointId::leg(side).iter().zip(q) {
            targets.set(*id, a);
        }
    }
    for id in JointId::ALL {
        targets.set(id, targets.get(id) + params.trim_offsets[id.index()]);
    }
    Ok(targets)
}

/// Standing pose: both feet level under the hips at stand height, plus trims.
pub fn stand_pose(params: &WalkParams, model: &JointModel) -> Result<JointTargets, WalkError> {
    solve(&params.standing(), 0.0, model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOutput {
    pub targets: JointTargets,
    pub phase: GaitPhase,
    /// Commanded torso displacement over this tick, robot frame.
    pub odometry: Pose2D,
}

/// Advances the gait by `dt` and returns the joint targets at the new phase.
/// A disabled walk holds the standing pose without advancing.
pub fn walk_tick(params: &WalkParams, phase: GaitPhase, dt: f64, model: &JointModel) -> Result<WalkOutput, WalkError> {
    params.validate()?;
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(WalkError::BadDt(dt));
    }
    if !params.enabled {
        return Ok(WalkOutput {
            targets: stand_pose(params, model)?,
            phase,
            odometry: Pose2D::new(0.0, 0.0, 0.0),
        });
    }
    let delta = params.frequency_hz * dt;
    let next = phase.advance(delta);
    let targets = solve(params, next.value(), model)?;
    Ok(WalkOutput {
        targets,
        phase: next,
        odometry: Pose2D::new(
            2.0 * params.step_m * delta,
            2.0 * params.lateral_m * delta,
            2.0 * params.turn_rad * delta,
        ),
    })
}

/// Targets at an explicit phase without advancing, for dumps and tests.
pub fn targets_at(params: &WalkParams, phase: f64, model: &JointModel) -> Result<JointTargets, WalkError> {
    params.validate()?;
    solve(params, GaitPhase::new(phase).value(), model)
}
