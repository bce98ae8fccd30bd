//! Shared building blocks for the kid-size soccer stack: poses and angles,
//! planar geometry, the field model, the 20-joint body model, pinhole camera
//! geometry and the flat `key = value` configuration.

pub mod angle;
pub mod camera;
pub mod config;
pub mod field;
pub mod geometry;
pub mod imu;
pub mod joints;

pub use angle::{normalize_angle, wrap_angle, AngleError, Pose2D};
pub use camera::{CameraModel, CameraPose};
pub use config::{load_config, Config, ConfigError};
pub use field::{FieldError, FieldModel};
pub use geometry::{Point2, Segment2};
pub use imu::ImuSample;
pub use joints::{Axis, JointError, JointId, JointModel, JointSpec, JointTargets, Side};
