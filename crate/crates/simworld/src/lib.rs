//! Desk-scale kinematic simulator: robots move by commanded odometry, the
//! ball rolls under uniform friction, and each robot's camera and IMU are
//! synthesised from the exact state.

pub mod imu;
pub mod render;
pub mod scenario;
pub mod world;

pub use imu::sample_imu;
pub use render::{camera_pose, project_ball, render_camera, render_rgb, BallTruth, CameraIntrinsics, Jitter};
pub use scenario::{PlayerSpec, Scenario, ScenarioError, ScriptedFall};
pub use world::{
    roll_ball, step_world, BallState, FallDirection, GoalSide, Posture, RobotCommand, RobotState, SimError, WorldEvent,
    WorldState,
};
