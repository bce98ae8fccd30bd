//! The camera-rate loop: perception, estimation and the behaviour decision.

use kidsize_behaviour::{
    tick, update_game_state, BehaviourMemory, GameEvent, GameState, HeadMode, Timed, WorldSnapshot,
};
use kidsize_core::{wrap_angle, CameraModel, Config, FieldModel, Point2, Pose2D, Segment2};
use kidsize_estimation::{
    ekf_predict, ekf_update_heading, ekf_update_lines, fuse_team, BallFilter, BeliefState, FallState, TeammateReport,
};
use kidsize_netcomm::{BallReport, TeamMessage};
use kidsize_vision::candidates::BallDetection;
use kidsize_vision::{run_pipeline_with_horizon, CameraFrame, StageTimings, VisionResult};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::hardware::{Decision, PAN_LIMIT, TILT_MAX, TILT_MIN};

/// Hardware-side state sampled by the vision loop once per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSnapshot {
    /// Odometry accumulated since the previous vision cycle, robot frame.
    pub odometry: Pose2D,
    /// Gyro-integrated heading, rad.
    pub gyro_heading: f64,
    pub fall: FallState,
    /// Head pan and tilt currently commanded.
    pub head: (f64, f64),
    pub timestamp_ns: u64,
}

impl Default for SensorSnapshot {
    fn default() -> Self {
        Self {
            odometry: Pose2D::new(0.0, 0.0, 0.0),
            gyro_heading: 0.0,
            fall: FallState::new(),
            head: (0.0, 0.0),
            timestamp_ns: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisionOutput {
    pub decision: Decision,
    /// `None` when the pipeline rejected the frame.
    pub result: Option<VisionResult>,
    pub timings: Option<StageTimings>,
    /// Ball position in the robot frame after this frame's update.
    pub ball_local: Option<Point2>,
    pub team_message: TeamMessage,
}

/// Ball sightings closer than this are trusted for team fusion.
const FRESH_BALL_S: f64 = 0.5;
const MAX_BALL_RANGE_M: f64 = 8.0;

pub struct VisionLoop {
    cfg: Config,
    field: FieldModel,
    cam: CameraModel,
    robot_id: u8,
    pub belief: BeliefState,
    pub ball: BallFilter,
    pub game: GameState,
    pub memory: BehaviourMemory,
    prev_ball: Option<BallDetection>,
    /// Added to the gyro heading to give a field heading.
    heading_offset: Option<f64>,
    last_frame_ns: Option<u64>,
    goal_confident_ns: Option<u64>,
    teammates: Vec<TeammateReport>,
    decision: Decision,
}

impl VisionLoop {
    pub fn new(cfg: &Config, field: FieldModel, start: Pose2D, robot_id: u8) -> Self {
        Self {
            cfg: cfg.clone(),
            field,
            cam: CameraModel::from_config(cfg),
            robot_id,
            belief: BeliefState::kickoff(start, &cfg.ekf),
            ball: BallFilter::default(),
            game: GameState::default(),
            memory: BehaviourMemory::default(),
            prev_ball: None,
            heading_offset: None,
            last_frame_ns: None,
            goal_confident_ns: None,
            teammates: Vec::new(),
            decision: Decision::initial(cfg),
        }
    }

    pub fn decision(&self) -> &Decision {
        &self.decision
    }

    pub fn handle_game_event(&mut self, ev: &GameEvent) {
        self.game = update_game_state(&self.game, ev, &self.cfg.net);
    }

    /// Teammate reports used by the next cycle.
    pub fn set_teammates(&mut self, reports: Vec<TeammateReport>) {
        self.teammates = reports;
    }

    fn team_message(&self, now_ns: u64, fallen: bool) -> TeamMessage {
        let mut m = TeamMessage::new(self.robot_id, &self.belief.mean, self.belief.confidence);
        m.fallen = fallen;
        m.timestamp_ms = (now_ns / 1_000_000) as u32;
        if let Some(p) = self.ball.position() {
            let age_ms = (self.ball.age_s(now_ns) * 1e3).min(60_000.0) as u16;
            let f = self.belief.mean.to_field(&p);
            m.ball = Some(BallReport {
                x: f.x as f32,
                y: f.y as f32,
                age_ms,
            });
        }
        m
    }

    /// Head angles that centre the ball at `local` (robot frame).
    pub fn look_at(&self, local: &Point2) -> (f64, f64) {
        let d = local.norm().max(0.05);
        let r = self.cfg.ball.radius_m;
        let pan = local.y.atan2(local.x).clamp(-PAN_LIMIT, PAN_LIMIT);
        let tilt = (self.cam.height_m - r).atan2(d) - self.cam.mount_pitch_rad;
        (pan, tilt.clamp(TILT_MIN, TILT_MAX))
    }

    /// Lines seen in the image, projected onto the ground in the robot frame.
    fn ground_lines(&self, result: &VisionResult, cam_pose: &kidsize_core::CameraPose) -> Vec<Segment2> {
        let range = self.cfg.ekf.max_line_range_m;
        result
            .lines
            .iter()
            .filter_map(|l| {
                let a = self.cam.ground_point(cam_pose, l.p0.x, l.p0.y, 0.0)?;
                let b = self.cam.ground_point(cam_pose, l.p1.x, l.p1.y, 0.0)?;
                (a.norm() <= range && b.norm() <= range).then(|| Segment2::new(a, b))
            })
            .collect()
    }

    /// Processes one camera frame.
    pub fn cycle(&mut self, frame: &CameraFrame, sensor: &SensorSnapshot) -> VisionOutput {
        let now = frame.timestamp_ns;
        let dt = self.last_frame_ns.map_or(0.0, |t| now.saturating_sub(t) as f64 * 1e-9);
        self.last_frame_ns = Some(now);
        let ekf = &self.cfg.ekf;

        if dt > 0.0 {
            match ekf_predict(&self.belief, &sensor.odometry, dt, ekf) {
                Ok(b) => self.belief = b,
                Err(e) => warn!("ekf predict: {e}"),
            }
        }
        self.ball.predict(dt, &sensor.odometry, &self.cfg.ball);
        let offset = *self
            .heading_offset
            .get_or_insert(wrap_angle(self.belief.mean.theta - sensor.gyro_heading));
        self.belief = ekf_update_heading(&self.belief, wrap_angle(sensor.gyro_heading + offset), ekf);

        let (pan, tilt) = sensor.head;
        let cam_pose = self
            .cam
            .pose_for(&Pose2D::new(0.0, 0.0, 0.0), pan, tilt + sensor.fall.pitch);
        let horizon = self.cam.horizon_row(&cam_pose);
        let out = match run_pipeline_with_horizon(frame, self.prev_ball.as_ref(), &self.cfg.vision, Some(horizon)) {
            Ok(o) => o,
            Err(e) => {
                warn!("vision pipeline: {e}; keeping previous action");
                return VisionOutput {
                    decision: self.decision,
                    result: None,
                    timings: None,
                    ball_local: self.ball.position(),
                    team_message: self.team_message(now, sensor.fall.is_fallen()),
                };
            }
        };
        if out.timings.total_ms > self.cfg.agent.vision_budget_ms {
            warn!("vision cycle over budget: {:?}", out.timings);
        }
        let result = out.result;
        self.prev_ball = result.ball;

        let lines = self.ground_lines(&result, &cam_pose);
        if !lines.is_empty() {
            self.belief = ekf_update_lines(&self.belief, &lines, &self.field, ekf);
        }
        if let Some(det) = &result.ball {
            let r = self.cfg.ball.radius_m;
            match self.cam.ground_point(&cam_pose, det.centre.0, det.centre.1, r) {
                Some(p) if p.norm() <= MAX_BALL_RANGE_M => self.ball.update(&p, now, &self.cfg.ball),
                _ => {}
            }
        }

        let ball_age = self.ball.age_s(now);
        let own_ball = self.ball.position().filter(|_| ball_age <= FRESH_BALL_S);
        let before = self.belief.mean.theta;
        self.belief = fuse_team(&self.belief, own_ball.as_ref(), &self.teammates, &self.cfg.team);
        if wrap_angle(self.belief.mean.theta - before).abs() > std::f64::consts::FRAC_PI_2 {
            self.heading_offset = Some(wrap_angle(offset + std::f64::consts::PI));
        }

        let goal_bearing = {
            let g = self.field.opponent_goal() - self.belief.mean.position();
            let bearing = wrap_angle(g.y.atan2(g.x) - self.belief.mean.theta);
            if self.belief.confidence >= self.cfg.behaviour.goal_conf_min {
                self.goal_confident_ns = Some(now);
            }
            self.goal_confident_ns.map(|t| Timed {
                value: bearing,
                age_s: now.saturating_sub(t) as f64 * 1e-9,
            })
        };
        let snapshot = WorldSnapshot {
            belief: self.belief.clone(),
            ball_field: self.ball.position().map(|p| Timed {
                value: self.belief.mean.to_field(&p),
                age_s: ball_age,
            }),
            goal_bearing,
            fall: sensor.fall,
        };
        let (action, memory) = tick(&snapshot, &self.game, &self.memory, &self.cfg);
        self.memory = memory;
        let look = match (action.head, self.ball.position()) {
            (HeadMode::TrackBall, Some(p)) => Some(self.look_at(&p)),
            _ => None,
        };
        self.decision = Decision {
            action,
            look,
            seq: self.decision.seq + 1,
        };
        VisionOutput {
            decision: self.decision,
            timings: Some(out.timings),
            ball_local: self.ball.position(),
            team_message: self.team_message(now, sensor.fall.is_fallen()),
            result: Some(result),
        }
    }
}
