//! Threaded runtime: the hardware loop on a fixed-rate deadline and the
//! vision loop as fast as frames arrive.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use kidsize_behaviour::GameEvent;
use kidsize_core::ImuSample;
use kidsize_netcomm::CommsService;
use kidsize_vision::CameraFrame;
use log::{debug, warn};

use crate::agent::{hardware_cycle, vision_cycle, Agent, Shared};
use crate::hardware::{HardwareLoop, HardwareOutput};
use crate::vision_loop::VisionLoop;

/// Camera driver boundary. Implementations return within `timeout`, with
/// `None` when no frame arrived.
pub trait FrameSource: Send + 'static {
    fn next_frame(&mut self, timeout: Duration) -> Option<CameraFrame>;
}

pub trait ImuSource: Send + 'static {
    fn read_imu(&mut self) -> ImuSample;
}

/// Motor driver boundary.
pub trait JointSink: Send + 'static {
    fn write(&mut self, out: &HardwareOutput);
}

const FRAME_WAIT: Duration = Duration::from_millis(20);
/// The hardware loop sleeps until this close to its deadline, then spins.
const SPIN_MARGIN: Duration = Duration::from_micros(1500);

/// Timing record returned when the loops stop.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    /// Start time of every hardware cycle, relative to loop start.
    pub hardware_starts: Vec<Duration>,
    pub vision_cycles: u64,
    pub hardware_period: Duration,
    pub hardware_priority: LoopPriority,
}

impl RunReport {
    /// Largest deviation of a hardware cycle interval from the period.
    pub fn max_jitter(&self) -> Duration {
        let p = self.hardware_period.as_secs_f64();
        let worst = self
            .hardware_starts
            .windows(2)
            .map(|w| ((w[1] - w[0]).as_secs_f64() - p).abs())
            .fold(0.0, f64::max);
        Duration::from_secs_f64(worst)
    }
}

pub struct AgentHandle {
    pub shared: Arc<Shared>,
    shutdown: Arc<AtomicBool>,
    hardware: Option<JoinHandle<(HardwareLoop, Vec<Duration>, LoopPriority)>>,
    vision: Option<JoinHandle<(VisionLoop, u64)>>,
    period: Duration,
}

const HARDWARE_RT_PRIORITY: i32 = 20;
const VISION_NICE: i32 = 10;

/// Scheduling the hardware loop obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopPriority {
    /// Real-time FIFO scheduling.
    RealTime,
    /// Normal scheduling with a negative nice value.
    Raised,
    #[default]
    Normal,
}

/// Puts the calling thread ahead of normal threads: real-time FIFO
/// scheduling if permitted (CAP_SYS_NICE or an rtprio limit), else a
/// negative nice value, else nothing.
#[cfg(target_os = "linux")]
fn raise_priority() -> LoopPriority {
    // SAFETY: plain syscalls on the calling thread with valid arguments.
    unsafe {
        let param = libc::sched_param {
            sched_priority: HARDWARE_RT_PRIORITY,
        };
        if libc::sched_setscheduler(0, libc::SCHED_FIFO, &param) == 0 {
            return LoopPriority::RealTime;
        }
        let tid = libc::syscall(libc::SYS_gettid) as libc::id_t;
        if libc::setpriority(libc::PRIO_PROCESS, tid, -10) == 0 {
            return LoopPriority::Raised;
        }
    }
    warn!("hardware loop runs at normal priority; expect timing jitter under load");
    LoopPriority::Normal
}

/// Lowers the calling thread's priority; needs no privileges.
#[cfg(target_os = "linux")]
fn lower_priority() {
    // SAFETY: as above.
    unsafe {
        let tid = libc::syscall(libc::SYS_gettid) as libc::id_t;
        libc::setpriority(libc::PRIO_PROCESS, tid, VISION_NICE);
    }
}

#[cfg(not(target_os = "linux"))]
fn raise_priority() -> LoopPriority {
    LoopPriority::Normal
}

#[cfg(not(target_os = "linux"))]
fn lower_priority() {}

fn sleep_until(deadline: Instant) {
    let now = Instant::now();
    if deadline > now + SPIN_MARGIN {
        thread::sleep(deadline - now - SPIN_MARGIN);
    }
    while Instant::now() < deadline {
        std::hint::spin_loop();
    }
}

impl AgentHandle {
    /// Starts both loops, the hardware loop at `hardware_hz`.
    pub fn spawn(
        agent: Agent,
        hardware_hz: f64,
        mut frames: impl FrameSource,
        mut imu: impl ImuSource,
        mut sink: impl JointSink,
        comms: Option<CommsService>,
    ) -> Self {
        let Agent {
            hardware: mut hw,
            vision: mut vis,
            shared,
        } = agent;
        let shutdown = Arc::new(AtomicBool::new(false));
        let period = Duration::from_secs_f64(1.0 / hardware_hz);

        let hardware = {
            let shared = Arc::clone(&shared);
            let shutdown = Arc::clone(&shutdown);
            thread::Builder::new()
                .name("hardware".into())
                .spawn(move || {
                    let priority = raise_priority();
                    let mut starts = Vec::new();
                    let start = Instant::now();
                    let mut k: u32 = 0;
                    let mut prev: Option<Instant> = None;
                    while !shutdown.load(Ordering::Relaxed) {
                        sleep_until(start + period * k);
                        let t = Instant::now();
                        starts.push(t - start);
                        let dt = prev.map_or(period, |p| t - p).as_secs_f64();
                        prev = Some(t);
                        let sample = imu.read_imu();
                        let out = hardware_cycle(&mut hw, &shared, &sample, dt);
                        sink.write(&out);
                        k += 1;
                        let behind = (Instant::now() - start).as_secs_f64() / period.as_secs_f64();
                        if behind > k as f64 {
                            warn!("hardware cycle overran its period");
                            k = behind.ceil() as u32;
                        }
                    }
                    (hw, starts, priority)
                })
                .expect("spawn hardware loop")
        };

        let vision = {
            let shared = Arc::clone(&shared);
            let shutdown = Arc::clone(&shutdown);
            thread::Builder::new()
                .name("vision".into())
                .spawn(move || {
                    lower_priority();
                    let mut cycles = 0u64;
                    let mut gc_seq = None;
                    while !shutdown.load(Ordering::Relaxed) {
                        if let Some(c) = &comms {
                            if let Some(gc) = c.latest_gc() {
                                if gc_seq != Some(gc.seq) {
                                    gc_seq = Some(gc.seq);
                                    vis.handle_game_event(&GameEvent::Gc(gc.packet));
                                }
                            }
                            vis.set_teammates(c.teammates().iter().map(|r| r.message.to_report(r.age_s)).collect());
                        }
                        let Some(frame) = frames.next_frame(FRAME_WAIT) else {
                            continue;
                        };
                        let out = vision_cycle(&mut vis, &shared, &frame);
                        if let Some(c) = &comms {
                            c.set_outgoing(Some(out.team_message));
                        }
                        cycles += 1;
                        debug!("vision cycle {cycles}: {:?}", out.decision.action.kind);
                    }
                    if let Some(c) = comms {
                        c.stop();
                    }
                    (vis, cycles)
                })
                .expect("spawn vision loop")
        };

        Self {
            shared,
            shutdown,
            hardware: Some(hardware),
            vision: Some(vision),
            period,
        }
    }

    pub fn request_shutdown(&self) {
        self.shutdown.store(true, Ordering::Relaxed);
    }

    /// Signals shutdown and joins both loops.
    pub fn stop(mut self) -> RunReport {
        self.request_shutdown();
        let (hardware_starts, hardware_priority) = self
            .hardware
            .take()
            .and_then(|h| h.join().ok())
            .map(|(_, s, p)| (s, p))
            .unwrap_or_default();
        let vision_cycles = self.vision.take().and_then(|h| h.join().ok()).map_or(0, |(_, n)| n);
        RunReport {
            hardware_starts,
            vision_cycles,
            hardware_period: self.period,
            hardware_priority,
        }
    }
}

impl Drop for AgentHandle {
    fn drop(&mut self) {
        self.request_shutdown();
        if let Some(h) = self.hardware.take() {
            let _ = h.join();
        }
        if let Some(h) = self.vision.take() {
            let _ = h.join();
        }
    }
}
