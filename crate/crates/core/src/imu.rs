use serde::{Deserialize, Serialize};

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

/// One inertial sample in the torso frame (x forward, y left, z up).
///
/// `accel` reports the gravity direction, so an upright, resting torso reads
/// `(0, 0, -9.81)` and a torso lying face down reads `(+9.81, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImuSample {
    /// Angular rate about x, y, z in rad/s.
    pub gyro: [f64; 3],
    pub accel: [f64; 3],
    pub timestamp_ns: u64,
}

impl ImuSample {
    pub fn upright(timestamp_ns: u64) -> Self {
        Self {
            gyro: [0.0; 3],
            accel: [0.0, 0.0, -GRAVITY],
            timestamp_ns,
        }
    }

    /// Sample of a torso at rest with the given pitch (forward lean positive)
    /// and roll (lean toward -y positive).
    pub fn at_rest(pitch: f64, roll: f64, timestamp_ns: u64) -> Self {
        Self {
            gyro: [0.0; 3],
            accel: [
                GRAVITY * pitch.sin() * roll.cos(),
                -GRAVITY * roll.sin(),
                -GRAVITY * pitch.cos() * roll.cos(),
            ],
            timestamp_ns,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.gyro.iter().chain(&self.accel).all(|v| v.is_finite())
    }

    /// Pitch implied by the gravity direction alone.
    pub fn accel_pitch(&self) -> f64 {
        let [ax, _, az] = self.accel;
        ax.atan2(-az)
    }

    /// Roll implied by the gravity direction alone.
    pub fn accel_roll(&self) -> f64 {
        let [ax, ay, az] = self.accel;
        (-ay).atan2(ax.hypot(az))
    }

    pub fn accel_norm(&self) -> f64 {
        self.accel.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn gyro_norm(&self) -> f64 {
        self.gyro.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
