//! Walk engine, leg kinematics, IMU balance trims and scripted motions.

pub mod balance;
pub mod kinematics;
pub mod motion;
pub mod walk;

pub use balance::{balance_offsets, BalanceFilter, BalanceOffsets};
pub use kinematics::{leg_fk, leg_ik, FootPose, IkError, LegAngles};
pub use motion::{play_motion, Motion, MotionError, MotionLibrary};
pub use walk::{stand_pose, walk_tick, GaitPhase, WalkError, WalkOutput, WalkParams};
