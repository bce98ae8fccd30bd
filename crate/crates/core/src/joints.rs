//! The 20-joint body model.
//!
//! Sign conventions (right-hand rule about the listed axis, parent frame
//! x forward, y left, z up):
//!
//! | joint kind | axis | positive direction                               |
//! |------------|------|--------------------------------------------------|
//! | yaw / pan  | z    | distal link turns left                           |
//! | roll       | x    | distal link swings toward +y                     |
//! | pitch      | y    | torso tips forward over the distal link          |
//! | knee       | y    | knee bends forward, shank folds back (>= 0)      |
//! | head tilt  | y    | camera looks down                                |
//!
//! A pitch rotation by `a` maps a link hanging straight down, `(0, 0, -L)`,
//! to `(-L sin a, 0, -L cos a)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JointError {
    #[error("expected 20 joints, found {0}")]
    WrongCount(usize),
    #[error("leg {0:?} has {1} joints, expected 6")]
    WrongLegCount(Side, usize),
    #[error("joint {0} has an empty limit range")]
    BadLimits(JointId),
    #[error("link length of {0} must be positive")]
    BadLength(&'static str),
    #[error("joint {joint} angle {angle} outside [{min}, {max}]")]
    OutOfLimits {
        joint: JointId,
        angle: f64,
        min: f64,
        max: f64,
    },
    #[error("joint {0} stiffness {1} outside [0, 1]")]
    BadStiffness(JointId, f64),
    #[error("unknown joint name `{0}`")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// +1 for the left side, -1 for the right.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

macro_rules! joint_ids {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Joint identifiers in canonical order (left leg, right leg, left arm,
        /// right arm, neck).
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum JointId { $($variant),* }

        impl JointId {
            pub const ALL: [JointId; 20] = [$(JointId::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(JointId::$variant => $name),* }
            }

            pub fn from_name(name: &str) -> Option<JointId> {
                match name { $($name => Some(JointId::$variant),)* _ => None }
            }
        }
    };
}

joint_ids! {
    LHipYaw => "l_hip_yaw",
    LHipRoll => "l_hip_roll",
    LHipPitch => "l_hip_pitch",
    LKnee => "l_knee",
    LAnklePitch => "l_ankle_pitch",
    LAnkleRoll => "l_ankle_roll",
    RHipYaw => "r_hip_yaw",
    RHipRoll => "r_hip_roll",
    RHipPitch => "r_hip_pitch",
    RKnee => "r_knee",
    RAnklePitch => "r_ankle_pitch",
    RAnkleRoll => "r_ankle_roll",
    LShoulderPitch => "l_shoulder_pitch",
    LShoulderRoll => "l_shoulder_roll",
    LElbow => "l_elbow",
    RShoulderPitch => "r_shoulder_pitch",
    RShoulderRoll => "r_shoulder_roll",
    RElbow => "r_elbow",
    HeadPan => "head_pan",
    HeadTilt => "head_tilt",
}

impl JointId {
    pub fn index(self) -> usize {
        self as usize
    }

    /// The six leg joints of `side` in chain order hip yaw, hip roll, hip
    /// pitch, knee, ankle pitch, ankle roll.
    pub fn leg(side: Side) -> [JointId; 6] {
        use JointId::*;
        match side {
            Side::Left => [LHipYaw, LHipRoll, LHipPitch, LKnee, LAnklePitch, LAnkleRoll],
            Side::Right => [RHipYaw, RHipRoll, RHipPitch, RKnee, RAnklePitch, RAnkleRoll],
        }
    }

    pub fn side(self) -> Option<Side> {
        match self.name().as_bytes()[0] {
            b'l' => Some(Side::Left),
            b'r' => Some(Side::Right),
            _ => None,
        }
    }

    pub fn is_leg(self) -> bool {
        self.index() < 12
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub id: JointId,
    pub axis: Axis,
    pub parent: &'static str,
    /// Length of the link this joint drives, metres.
    pub link_length_m: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    pub joints: Vec<JointSpec>,
    pub thigh_m: f64,
    pub shank_m: f64,
    /// Lateral distance from the pelvis centre to each hip joint.
    pub hip_offset_m: f64,
}

impl JointModel {
    pub fn new(thigh_m: f64, shank_m: f64, hip_offset_m: f64) -> Result<Self, JointError> {
        use JointId::*;
        for (v, n) in [(thigh_m, "thigh"), (shank_m, "shank"), (hip_offset_m, "hip offset")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(JointError::BadLength(n));
            }
        }
        let spec = |id, axis, parent, len, min, max| JointSpec {
            id,
            axis,
            parent,
            link_length_m: len,
            min,
            max,
        };
        let mut joints = Vec::with_capacity(20);
        for side in [Side::Left, Side::Right] {
            let [yaw, roll, pitch, knee, apitch, aroll] = JointId::leg(side);
            joints.push(spec(yaw, Axis::Yaw, "pelvis", 0.0, -1.0, 1.0));
            joints.push(spec(roll, Axis::Roll, "hip_yaw_link", 0.0, -0.8, 0.8));
            joints.push(spec(pitch, Axis::Pitch, "hip_roll_link", thigh_m, -2.0, 1.2));
            joints.push(spec(knee, Axis::Pitch, "thigh", shank_m, 0.0, 2.5));
            joints.push(spec(apitch, Axis::Pitch, "shank", 0.0, -1.4, 1.4));
            joints.push(spec(aroll, Axis::Roll, "ankle_pitch_link", 0.0, -0.8, 0.8));
        }
        for (sp, sr, el) in [
            (LShoulderPitch, LShoulderRoll, LElbow),
            (RShoulderPitch, RShoulderRoll, RElbow),
        ] {
            joints.push(spec(sp, Axis::Pitch, "torso", 0.0, -3.0, 3.0));
            joints.push(spec(sr, Axis::Roll, "shoulder_link", 0.09, -1.6, 1.6));
            joints.push(spec(el, Axis::Pitch, "upper_arm", 0.10, -2.5, 0.5));
        }
        joints.push(spec(HeadPan, Axis::Yaw, "torso", 0.0, -2.0, 2.0));
        joints.push(spec(HeadTilt, Axis::Pitch, "neck", 0.05, -0.8, 1.2));
        let model = Self {
            joints,
            thigh_m,
            shank_m,
            hip_offset_m,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_config(cfg: &Config) -> Result<Self, JointError> {
        Self::new(cfg.robot.thigh_m, cfg.robot.shank_m, cfg.robot.hip_offset_m)
    }

    pub fn validate(&self) -> Result<(), JointError> {
        if self.joints.len() != 20 {
            return Err(JointError::WrongCount(self.joints.len()));
        }
        for side in [Side::Left, Side::Right] {
            let n = self
                .joints
                .iter()
                .filter(|j| j.id.is_leg() && j.id.side() == Some(side))
                .count();
            if n != 6 {
                return Err(JointError::WrongLegCount(side, n));
            }
        }
        for (i, j) in self.joints.iter().enumerate() {
            if j.id.index() != i || !(j.min < j.max) {
                return Err(JointError::BadLimits(j.id));
            }
        }
        Ok(())
    }

    pub fn spec(&self, id: JointId) -> &JointSpec {
        &self.joints[id.index()]
    }

    pub fn leg_length(&self) -> f64 {
        self.thigh_m + self.shank_m
    }

    pub fn check_angle(&self, id: JointId, angle: f64) -> Result<(), JointError> {
        let s = self.spec(id);
        if angle.is_finite() && angle >= s.min && angle <= s.max {
            Ok(())
        } else {
            Err(JointError::OutOfLimits {
                joint: id,
                angle,
                min: s.min,
                max: s.max,
            })
        }
    }
}

impl Default for JointModel {
    fn default() -> Self {
        Self::new(0.11, 0.11, 0.035).expect("default link lengths are valid")
    }
}

/// Commanded angle and stiffness for every joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTargets {
    pub angles: [f64; 20],
    /// 0 = relaxed, 1 = full holding torque.
    pub stiffness: [f64; 20],
}

impl Default for JointTargets {
    fn default() -> Self {
        Self {
            angles: [0.0; 20],
            stiffness: [1.0; 20],
        }
    }
}

impl JointTargets {
    pub fn get(&self, id: JointId) -> f64 {
        self.angles[id.index()]
    }

    pub fn set(&mut self, id: JointId, angle: f64) {
        self.angles[id.index()] = angle;
    }

    pub fn stiffness_of(&self, id: JointId) -> f64 {
        self.stiffness[id.index()]
    }

    pub fn set_by_name(&mut self, name: &str, angle: f64) -> Result<(), JointError> {
        let id = JointId::from_name(name).ok_or_else(|| JointError::UnknownName(name.into()))?;
        self.set(id, angle);
        Ok(())
    }

    pub fn relax_all(&mut self) {
        self.stiffness = [0.0; 20];
    }

    pub fn is_relaxed(&self) -> bool {
        self.stiffness.iter().all(|&s| s == 0.0)
    }

    /// Clamps every angle into its limit range and every stiffness into [0, 1].
    pub fn clamp_to(&mut self, model: &JointModel) {
        for (a, spec) in self.angles.iter_mut().zip(&model.joints) {
            *a = a.clamp(spec.min, spec.max);
        }
        for s in self.stiffness.iter_mut() {
            *s = s.clamp(0.0, 1.0);
        }
    }

    pub fn validate(&self, model: &JointModel) -> Result<(), JointError> {
        for id in JointId::ALL {
            model.check_angle(id, self.get(id))?;
            let s = self.stiffness_of(id);
            if !(0.0..=1.0).contains(&s) {
                return Err(JointError::BadStiffness(id, s));
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (JointId, f64)> + '_ {
        JointId::ALL.iter().map(move |&id| (id, self.get(id)))
    }
}
