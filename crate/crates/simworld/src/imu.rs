use kidsize_core::config::SimSection;
use kidsize_core::ImuSample;
use rand_distr::{Distribution, Normal};

use crate::world::{derived_rng, WorldState};

/// Accelerometer and gyro reading for robot `robot`, noise seeded from the
/// world state. Gyro axes are roll, pitch and yaw rate.
pub fn sample_imu(w: &WorldState, robot: usize, cfg: &SimSection) -> ImuSample {
    let (pitch, pitch_rate) = w.torso_pitch(robot, cfg);
    let mut s = ImuSample::at_rest(pitch, 0.0, w.time_ns);
    s.gyro = [0.0, pitch_rate, w.robots[robot].yaw_rate];
    let mut rng = derived_rng(w, robot, 2);
    if cfg.accel_noise > 0.0 {
        let n = Normal::new(0.0, cfg.accel_noise).expect("finite sigma");
        s.accel.iter_mut().for_each(|a| *a += n.sample(&mut rng));
    }
    if cfg.gyro_noise > 0.0 {
        let n = Normal::new(0.0, cfg.gyro_noise).expect("finite sigma");
        s.gyro.iter_mut().for_each(|g| *g += n.sample(&mut rng));
    }
    s
}
