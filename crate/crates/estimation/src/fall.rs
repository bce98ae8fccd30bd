//! Fall detection state machine.
//!
//! ```text
//! Upright ──tilt > correct──▶ Correcting ──tilt > brace or rate > brace_rate──▶ Bracing
//!    ▲                           │                                              │ at rest for settle_s
//!    └──tilt < 0.8·correct───────┘                                              ▼
//!    ▲                                                               FallenFront / FallenBack
//!    └──tilt < 0.5·correct for stable_s── GettingUp ◀──emits get-up action──────┘
//! ```

use kidsize_core::config::FallSection;
use kidsize_core::imu::GRAVITY;
use kidsize_core::ImuSample;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FallPhase {
    Upright,
    Correcting,
    Bracing,
    FallenFront,
    FallenBack,
    GettingUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FallAction {
    None,
    ApplyCorrection,
    Brace,
    PlayGetupFront,
    PlayGetupBack,
}

/// Fall detector state, including the tilt filter memory, so that
/// [`fall_step`] is a pure function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallState {
    pub phase: FallPhase,
    pub entered_at_ns: u64,
    /// Filtered torso pitch (forward lean positive) and roll.
    pub pitch: f64,
    pub roll: f64,
    pub last_ns: Option<u64>,
    /// Start of the current at-rest (Bracing) or stable (GettingUp) stretch.
    pub since_ns: Option<u64>,
}

impl Default for FallState {
    fn default() -> Self {
        Self::new()
    }
}

impl FallState {
    pub fn new() -> Self {
        Self {
            phase: FallPhase::Upright,
            entered_at_ns: 0,
            pitch: 0.0,
            roll: 0.0,
            last_ns: None,
            since_ns: None,
        }
    }

    pub fn tilt(&self) -> f64 {
        self.pitch.hypot(self.roll)
    }

    pub fn is_fallen(&self) -> bool {
        !matches!(self.phase, FallPhase::Upright | FallPhase::Correcting)
    }

    fn enter(mut self, phase: FallPhase, now: u64) -> Self {
        self.phase = phase;
        self.entered_at_ns = now;
        self.since_ns = None;
        self
    }
}

fn at_rest(imu: &ImuSample, cfg: &FallSection) -> bool {
    (imu.accel_norm() - GRAVITY).abs() <= cfg.rest_accel_tol && imu.gyro_norm() <= cfg.rest_gyro
}

/// Advances the detector by one IMU sample. Samples that are not finite or
/// go back in time leave the state unchanged.
pub fn fall_step(fs: &FallState, imu: &ImuSample, cfg: &FallSection) -> (FallState, FallAction) {
    if !imu.is_finite() || fs.last_ns.is_some_and(|t| imu.timestamp_ns < t) {
        return (*fs, FallAction::None);
    }
    let now = imu.timestamp_ns;
    let mut s = *fs;
    match fs.last_ns {
        None => {
            s.pitch = imu.accel_pitch();
            s.roll = imu.accel_roll();
        }
        Some(t) => {
            let dt = (now - t) as f64 * 1e-9;
            let a = cfg.filter_alpha;
            s.pitch = a * (s.pitch + imu.gyro[1] * dt) + (1.0 - a) * imu.accel_pitch();
            s.roll = a * (s.roll + imu.gyro[0] * dt) + (1.0 - a) * imu.accel_roll();
        }
    }
    s.last_ns = Some(now);
    let tilt = s.tilt();
    let rate = imu.gyro[0].hypot(imu.gyro[1]);
    let held = |s: &mut FallState, cond: bool, need_s: f64| -> bool {
        if !cond {
            s.since_ns = None;
            return false;
        }
        let start = *s.since_ns.get_or_insert(now);
        (now - start) as f64 * 1e-9 >= need_s
    };

    match s.phase {
        FallPhase::Upright => {
            if tilt > cfg.correct_rad {
                (s.enter(FallPhase::Correcting, now), FallAction::ApplyCorrection)
            } else {
                (s, FallAction::None)
            }
        }
        FallPhase::Correcting => {
            if tilt > cfg.brace_rad || rate > cfg.brace_rate {
                (s.enter(FallPhase::Bracing, now), FallAction::Brace)
            } else if tilt < cfg.correct_rad * 0.8 {
                (s.enter(FallPhase::Upright, now), FallAction::None)
            } else {
                (s, FallAction::ApplyCorrection)
            }
        }
        FallPhase::Bracing => {
            if held(&mut s, at_rest(imu, cfg), cfg.settle_s) {
                let phase = if imu.accel_pitch() >= 0.0 {
                    FallPhase::FallenFront
                } else {
                    FallPhase::FallenBack
                };
                (s.enter(phase, now), FallAction::None)
            } else {
                (s, FallAction::None)
            }
        }
        FallPhase::FallenFront => (s.enter(FallPhase::GettingUp, now), FallAction::PlayGetupFront),
        FallPhase::FallenBack => (s.enter(FallPhase::GettingUp, now), FallAction::PlayGetupBack),
        FallPhase::GettingUp => {
            if held(&mut s, tilt < cfg.correct_rad * 0.5, cfg.stable_s) {
                (s.enter(FallPhase::Upright, now), FallAction::None)
            } else {
                (s, FallAction::None)
            }
        }
    }
}
