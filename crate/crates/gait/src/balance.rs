use kidsize_core::config::BalanceSection;
use kidsize_core::{ImuSample, JointId, JointTargets};
use serde::{Deserialize, Serialize};

/// Trim adjustments applied to both legs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BalanceOffsets {
    pub hip_pitch: f64,
    pub ankle_pitch: f64,
    pub hip_roll: f64,
    pub ankle_roll: f64,
}

impl BalanceOffsets {
    pub fn joint_offsets(&self) -> [(JointId, f64); 8] {
        use JointId::*;
        [
            (LHipPitch, self.hip_pitch),
            (RHipPitch, self.hip_pitch),
            (LAnklePitch, self.ankle_pitch),
            (RAnklePitch, self.ankle_pitch),
            (LHipRoll, self.hip_roll),
            (RHipRoll, self.hip_roll),
            (LAnkleRoll, self.ankle_roll),
            (RAnkleRoll, self.ankle_roll),
        ]
    }

    pub fn apply(&self, targets: &mut JointTargets) {
        for (id, d) in self.joint_offsets() {
            targets.set(id, targets.get(id) + d);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.joint_offsets().iter().all(|(_, d)| *d == 0.0)
    }
}

/// Complementary filter over gyro-integrated and gravity-derived tilt.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BalanceFilter {
    pub pitch: f64,
    pub roll: f64,
    last_ns: Option<u64>,
}

impl BalanceFilter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Filter already settled on the tilt of `imu`.
    pub fn settled(imu: &ImuSample) -> Self {
        Self {
            pitch: imu.accel_pitch(),
            roll: imu.accel_roll(),
            last_ns: Some(imu.timestamp_ns),
        }
    }

    pub fn update(&mut self, imu: &ImuSample, cfg: &BalanceSection) -> BalanceOffsets {
        if !imu.is_finite() {
            return self.offsets(cfg);
        }
        let dt = match self.last_ns {
            Some(t) if imu.timestamp_ns > t => (imu.timestamp_ns - t) as f64 * 1e-9,
            _ => 0.0,
        };
        self.last_ns = Some(imu.timestamp_ns);
        let a = cfg.filter_alpha;
        self.roll = a * (self.roll + imu.gyro[0] * dt) + (1.0 - a) * imu.accel_roll();
        self.pitch = a * (self.pitch + imu.gyro[1] * dt) + (1.0 - a) * imu.accel_pitch();
        self.offsets(cfg)
    }

    /// Proportional trims opposing the estimated lean, clamped.
    pub fn offsets(&self, cfg: &BalanceSection) -> BalanceOffsets {
        let m = cfg.max_trim_rad;
        let pitch = (-cfg.pitch_gain * self.pitch).clamp(-m, m);
        let roll = (-cfg.roll_gain * self.roll).clamp(-m, m);
        BalanceOffsets {
            hip_pitch: pitch,
            ankle_pitch: pitch,
            hip_roll: roll,
            ankle_roll: roll,
        }
    }
}

/// Offsets for a torso held steadily at the tilt reported by `imu`: the
/// fixed point of the filter under that sample.
pub fn balance_offsets(imu: &ImuSample, cfg: &BalanceSection) -> BalanceOffsets {
    if !imu.is_finite() {
        return BalanceOffsets::default();
    }
    BalanceFilter::settled(imu).offsets(cfg)
}
