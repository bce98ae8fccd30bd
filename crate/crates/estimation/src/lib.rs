//! State estimation: pose EKF with heading and field-line updates, team
//! symmetry consensus, ball tracking and fall detection.

pub mod ball;
pub mod ekf;
pub mod fall;
pub mod replay;
pub mod team;

pub use ball::BallFilter;
pub use ekf::{ekf_predict, ekf_update_heading, ekf_update_lines, ekf_update_point, BeliefState, EkfError};
pub use fall::{fall_step, FallAction, FallPhase, FallState};
pub use team::{fuse_team, TeammateReport};
