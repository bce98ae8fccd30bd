//! Agent runtime: a camera-rate vision loop and a fixed-rate hardware loop
//! exchanging the latest decision and sensor state through shared slots.
//!
//! [`Agent`] holds both loop contexts for callers that drive them directly
//! (the simulated match); [`AgentHandle`] runs them on their own threads.

pub mod agent;
pub mod cli;
pub mod corpus;
pub mod hardware;
pub mod runtime;
pub mod sim_match;
pub mod slots;
pub mod vision_loop;

pub use agent::{hardware_cycle, vision_cycle, Agent, AgentError, Shared};
pub use corpus::{sample_frames, write_corpus, BallLabel, LabelledFrame, TruthRecord};
pub use hardware::{head_pattern, Decision, HardwareLoop, HardwareOutput};
pub use runtime::{AgentHandle, FrameSource, ImuSource, JointSink, LoopPriority, RunReport};
pub use sim_match::{run_match, run_match_with, MatchError, MatchLog, MatchOptions, TickRecord};
pub use slots::Slot;
pub use vision_loop::{SensorSnapshot, VisionLoop, VisionOutput};
