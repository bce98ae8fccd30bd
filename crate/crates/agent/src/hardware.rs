//! The fast loop: fall detection, gyro heading, gait or motion playback,
//! balance trims and head control.

use std::f64::consts::TAU;

use kidsize_behaviour::{Action, ActionKind, HeadMode, WalkCommand};
use kidsize_core::{Config, ImuSample, JointId, JointModel, JointTargets, Pose2D};
use kidsize_estimation::{fall_step, FallAction, FallPhase, FallState};
use kidsize_gait::motion::{BRACE, GET_UP_BACK, GET_UP_FRONT, KICK};
use kidsize_gait::{play_motion, stand_pose, walk_tick, BalanceFilter, GaitPhase, MotionLibrary, WalkParams};
use log::warn;
use serde::{Deserialize, Serialize};

/// What the vision loop publishes for the hardware loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    /// Head pan and tilt toward the tracked ball, when known.
    pub look: Option<(f64, f64)>,
    /// Vision cycle that produced this decision; 0 for the cold-start value.
    pub seq: u64,
}

impl Decision {
    /// Cold-start decision: search for the ball.
    pub fn initial(cfg: &Config) -> Self {
        let walk = WalkCommand {
            turn: cfg.behaviour.search_turn_rad.min(cfg.walk.max_turn_rad),
            ..WalkCommand::default()
        };
        Self {
            action: Action {
                kind: ActionKind::FindBall,
                walk: Some(walk),
                head: HeadMode::SpiralScan,
            },
            look: None,
            seq: 0,
        }
    }
}

/// Joint-level result of one hardware cycle plus the side effects a body
/// (simulated or real) needs.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareOutput {
    pub targets: JointTargets,
    /// Commanded torso displacement this cycle, robot frame.
    pub odometry: Pose2D,
    /// Foot contact moment of a kick.
    pub kick: bool,
    pub head: (f64, f64),
    /// Get-up motion in progress.
    pub get_up: bool,
    pub fall: FallPhase,
    /// The action kind the body is actually executing.
    pub executing: ActionKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ActiveMotion {
    name: &'static str,
    elapsed: f64,
    contact_sent: bool,
}

pub const PAN_LIMIT: f64 = 1.5;
pub const TILT_MIN: f64 = -0.5;
pub const TILT_MAX: f64 = 1.0;

/// Head angles for the scan patterns, `t` seconds into the pattern.
pub fn head_pattern(mode: HeadMode, t: f64) -> (f64, f64) {
    match mode {
        HeadMode::Centre | HeadMode::TrackBall => (0.0, 0.0),
        HeadMode::SpiralScan => {
            // Pan amplitude widens over 9 s, then restarts.
            let amp = 0.4 + 1.0 * (t % 9.0) / 9.0;
            let pan = amp * (TAU * t / 3.0).sin();
            let tilt = 0.15 - 0.15 * (TAU * t / 6.0).cos();
            (pan, tilt)
        }
        HeadMode::GoalScan => (1.2 * (TAU * t / 4.0).sin(), -0.25),
    }
}

pub struct HardwareLoop {
    cfg: Config,
    model: JointModel,
    base: WalkParams,
    motions: MotionLibrary,
    phase: GaitPhase,
    pub fall: FallState,
    balance: BalanceFilter,
    /// Gyro-integrated heading since start, rad.
    pub heading: f64,
    motion: Option<ActiveMotion>,
    last: JointTargets,
    head_mode: HeadMode,
    head_t: f64,
}

impl HardwareLoop {
    pub fn new(cfg: &Config, model: JointModel, motions: MotionLibrary) -> Self {
        let base = WalkParams::from_section(&cfg.walk);
        let mut last = stand_pose(&base.standing(), &model).unwrap_or_default();
        last.clamp_to(&model);
        Self {
            cfg: cfg.clone(),
            model,
            base,
            motions,
            phase: GaitPhase::new(0.0),
            fall: FallState::new(),
            balance: BalanceFilter::new(),
            heading: 0.0,
            motion: None,
            last,
            head_mode: HeadMode::Centre,
            head_t: 0.0,
        }
    }

    pub fn last_targets(&self) -> &JointTargets {
        &self.last
    }

    fn stand(&mut self) -> JointTargets {
        self.phase = GaitPhase::new(0.0);
        stand_pose(&self.base.standing(), &self.model).unwrap_or(self.last)
    }

    fn motion_targets(&mut self, name: &'static str, dt: f64) -> (JointTargets, bool, bool) {
        let m = match self.motion {
            Some(m) if m.name == name => ActiveMotion {
                elapsed: m.elapsed + dt,
                ..m
            },
            _ => ActiveMotion {
                name,
                elapsed: 0.0,
                contact_sent: false,
            },
        };
        let mut contact = false;
        let mut m = m;
        if name == KICK && !m.contact_sent && m.elapsed >= self.cfg.agent.kick_contact_s {
            m.contact_sent = true;
            contact = true;
        }
        let (targets, done) = match self.motions.get(name) {
            Ok(motion) => (
                play_motion(&self.motions, name, m.elapsed).unwrap_or(self.last),
                m.elapsed >= motion.duration(),
            ),
            Err(e) => {
                warn!("motion {name}: {e}");
                (self.last, true)
            }
        };
        self.motion = if done && name != BRACE { None } else { Some(m) };
        (targets, contact, done)
    }

    /// One control step at `dt` seconds.
    pub fn cycle(&mut self, decision: &Decision, imu: &ImuSample, dt: f64) -> HardwareOutput {
        let dt = if dt.is_finite() && dt > 0.0 { dt } else { 0.0 };
        let (fall, fall_action) = fall_step(&self.fall, imu, &self.cfg.fall);
        self.fall = fall;
        if imu.is_finite() {
            self.heading = kidsize_core::wrap_angle(self.heading + imu.gyro[2] * dt);
        }
        let offsets = self.balance.update(imu, &self.cfg.balance);

        let action = decision.action;
        let mut odometry = Pose2D::new(0.0, 0.0, 0.0);
        let mut kick = false;
        let mut get_up = false;
        let active = self.motion.map(|m| m.name);

        let (mut targets, executing) = match fall.phase {
            FallPhase::Bracing | FallPhase::FallenFront | FallPhase::FallenBack => {
                let (mut t, _, _) = self.motion_targets(BRACE, dt);
                t.relax_all();
                (t, ActionKind::Brace)
            }
            FallPhase::GettingUp => {
                let name = match (fall_action, active) {
                    (FallAction::PlayGetupBack, _) | (_, Some(GET_UP_BACK)) => GET_UP_BACK,
                    _ => GET_UP_FRONT,
                };
                if fall_action != FallAction::None || active == Some(name) {
                    get_up = true;
                    let (t, _, _) = self.motion_targets(name, dt);
                    (t, ActionKind::GetUp)
                } else {
                    (self.stand(), ActionKind::GetUp)
                }
            }
            FallPhase::Correcting => {
                self.motion = None;
                (self.stand(), ActionKind::Stand)
            }
            FallPhase::Upright => {
                if matches!(active, Some(BRACE | GET_UP_FRONT | GET_UP_BACK)) {
                    self.motion = None;
                }
                if action.kind == ActionKind::Kick || self.motion.is_some_and(|m| m.name == KICK) {
                    let (t, contact, _) = self.motion_targets(KICK, dt);
                    kick = contact;
                    (t, ActionKind::Kick)
                } else if let (Some(w), true) = (action.walk, dt > 0.0) {
                    let params = WalkParams {
                        step_m: w.step,
                        lateral_m: w.lateral,
                        turn_rad: w.turn,
                        ..self.base.clone()
                    };
                    match walk_tick(&params, self.phase, dt, &self.model) {
                        Ok(out) => {
                            self.phase = out.phase;
                            odometry = out.odometry;
                            (out.targets, action.kind)
                        }
                        Err(e) => {
                            warn!("walk: {e}");
                            (self.stand(), ActionKind::Stand)
                        }
                    }
                } else {
                    (self.stand(), action.kind)
                }
            }
        };

        let relaxed = targets.is_relaxed();
        if !relaxed {
            offsets.apply(&mut targets);
            if action.head != self.head_mode {
                self.head_mode = action.head;
                self.head_t = 0.0;
            } else {
                self.head_t += dt;
            }
            let (pan, tilt) = match (action.head, decision.look) {
                (HeadMode::TrackBall, Some(look)) => look,
                (mode, _) => head_pattern(mode, self.head_t),
            };
            targets.set(JointId::HeadPan, pan.clamp(-PAN_LIMIT, PAN_LIMIT));
            targets.set(JointId::HeadTilt, tilt.clamp(TILT_MIN, TILT_MAX));
            let max = self.cfg.walk.max_joint_step_rad;
            for i in 0..20 {
                let prev = self.last.angles[i];
                targets.angles[i] = prev + (targets.angles[i] - prev).clamp(-max, max);
            }
        }
        targets.clamp_to(&self.model);
        self.last = targets;
        HardwareOutput {
            targets,
            odometry,
            kick,
            head: (targets.get(JointId::HeadPan), targets.get(JointId::HeadTilt)),
            get_up,
            fall: fall.phase,
            executing,
        }
    }
}
