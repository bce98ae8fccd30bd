use std::sync::Arc;

use kidsize_behaviour::GameEvent;
use kidsize_core::{Config, FieldError, FieldModel, ImuSample, JointError, JointModel, Pose2D};
use kidsize_gait::{MotionError, MotionLibrary};
use kidsize_vision::CameraFrame;
use thiserror::Error;

use crate::hardware::{Decision, HardwareLoop, HardwareOutput};
use crate::slots::Slot;
use crate::vision_loop::{SensorSnapshot, VisionLoop, VisionOutput};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("joint model: {0}")]
    Joints(#[from] JointError),
    #[error("field model: {0}")]
    Field(#[from] FieldError),
    #[error("motions: {0}")]
    Motions(#[from] MotionError),
}

/// The two slots crossing between the loops.
#[derive(Debug)]
pub struct Shared {
    pub decision: Slot<Decision>,
    pub sensor: Slot<SensorSnapshot>,
}

/// Runs one hardware cycle: reads the latest decision, steps the loop and
/// publishes the sensor side for the vision loop.
pub fn hardware_cycle(hw: &mut HardwareLoop, shared: &Shared, imu: &ImuSample, dt: f64) -> HardwareOutput {
    let decision = shared.decision.load();
    let out = hw.cycle(&decision, imu, dt);
    let (fall, heading) = (hw.fall, hw.heading);
    shared.sensor.update(|s| {
        s.odometry = s.odometry.compose(&out.odometry);
        s.gyro_heading = heading;
        s.fall = fall;
        s.head = out.head;
        s.timestamp_ns = imu.timestamp_ns;
    });
    out
}

/// Runs one vision cycle on `frame`, consuming the accumulated odometry and
/// publishing the new decision.
pub fn vision_cycle(vis: &mut VisionLoop, shared: &Shared, frame: &CameraFrame) -> VisionOutput {
    let sensor = shared.sensor.update(|s| {
        let snap = *s;
        s.odometry = Pose2D::new(0.0, 0.0, 0.0);
        snap
    });
    let out = vis.cycle(frame, &sensor);
    shared.decision.store(out.decision);
    out
}

/// Both loop contexts of one robot, driven by the caller.
pub struct Agent {
    pub hardware: HardwareLoop,
    pub vision: VisionLoop,
    pub shared: Arc<Shared>,
}

impl Agent {
    pub fn new(cfg: &Config, start: Pose2D, robot_id: u8) -> Result<Self, AgentError> {
        let model = JointModel::from_config(cfg)?;
        let field = FieldModel::from_config(cfg)?;
        let motions = if cfg.agent.motions_dir.is_empty() {
            MotionLibrary::builtin()
        } else {
            MotionLibrary::with_dir(&cfg.agent.motions_dir)?
        };
        let vision = VisionLoop::new(cfg, field, start, robot_id);
        let shared = Arc::new(Shared {
            decision: Slot::new(*vision.decision()),
            sensor: Slot::new(SensorSnapshot::default()),
        });
        Ok(Self {
            hardware: HardwareLoop::new(cfg, model, motions),
            vision,
            shared,
        })
    }

    pub fn hardware_cycle(&mut self, imu: &ImuSample, dt: f64) -> HardwareOutput {
        hardware_cycle(&mut self.hardware, &self.shared, imu, dt)
    }

    pub fn vision_cycle(&mut self, frame: &CameraFrame) -> VisionOutput {
        vision_cycle(&mut self.vision, &self.shared, frame)
    }

    pub fn handle_game_event(&mut self, ev: &GameEvent) {
        self.vision.handle_game_event(ev);
    }

    pub fn decision(&self) -> Decision {
        *self.shared.decision.load()
    }
}
