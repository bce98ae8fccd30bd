//! Deterministic matches: full agents against the simulated world.
//!
//! The world steps at `sim.world_hz`; every agent runs its hardware cycle on
//! each world step and its vision cycle on rendered frames at
//! `agent.vision_hz`. Both loops are driven by simulated time, so a run is a
//! pure function of the scenario and seed.
//!
//! # Match log
//!
//! JSON lines, one object per world step:
//!
//! | key | content |
//! |---|---|
//! | `tick` | step index, starting at 1 |
//! | `t` | simulated time after the step, s |
//! | `robots` | ground truth per robot: `x`, `y`, `theta`, `pan`, `tilt`, `fallen` |
//! | `ball` | ground truth `x`, `y`, `vx`, `vy`, or `null` |
//! | `agents` | per controlled robot, see below |
//! | `events` | world events raised by the step |
//!
//! Each agent entry holds `robot`, the decided `action` and `walk`, the
//! `executing` kind, `kick`, the `fall` phase, the `belief` (`x`, `y`,
//! `theta`, `confidence`) and the tracked ball in the robot frame
//! (`ball_local`). On steps with a vision cycle it also holds `vision`: the
//! ball detection (`u`, `v`, `radius`, or `null`) and the number of lines.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use kidsize_behaviour::{ActionKind, GameEvent, WalkCommand};
use kidsize_core::{CameraModel, FieldError, FieldModel, Point2};
use kidsize_estimation::{FallPhase, TeammateReport};
use kidsize_netcomm::{decode_team_message, encode_team_message, TeamMessage};
use kidsize_simworld::{
    render_camera, sample_imu, step_world, RobotCommand, Scenario, SimError, WorldEvent, WorldState,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, AgentError};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("world step: {0}")]
    Sim(#[from] SimError),
    #[error("player {0} does not exist")]
    NoSuchPlayer(usize),
}

#[derive(Debug, Clone, Default)]
pub struct MatchOptions {
    /// Replaces the scenario seed.
    pub seed: Option<u64>,
    /// Runs an agent for this player only; the others stand still.
    pub only_player: Option<usize>,
    /// Paces the run to wall-clock time.
    pub realtime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub pan: f64,
    pub tilt: f64,
    pub fallen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRecord {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefRecord {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub u: f64,
    pub v: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisionRecord {
    pub ball: Option<DetectionRecord>,
    pub lines: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub robot: usize,
    pub action: ActionKind,
    pub walk: Option<WalkCommand>,
    pub executing: ActionKind,
    pub kick: bool,
    pub fall: FallPhase,
    pub belief: BeliefRecord,
    pub ball_local: Option<Point2>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vision: Option<VisionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub t: f64,
    pub robots: Vec<RobotRecord>,
    pub ball: Option<BallRecord>,
    pub agents: Vec<AgentRecord>,
    pub events: Vec<WorldEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchLog {
    pub records: Vec<TickRecord>,
}

impl MatchLog {
    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Decided actions of `robot` with consecutive repeats collapsed.
    pub fn action_sequence(&self, robot: usize) -> Vec<ActionKind> {
        let mut seq: Vec<ActionKind> = Vec::new();
        for a in self
            .records
            .iter()
            .flat_map(|r| r.agents.iter().filter(|a| a.robot == robot))
        {
            if seq.last() != Some(&a.action) {
                seq.push(a.action);
            }
        }
        seq
    }

    /// Every world event with the time it was raised.
    pub fn events(&self) -> impl Iterator<Item = (f64, &WorldEvent)> {
        self.records.iter().flat_map(|r| r.events.iter().map(move |e| (r.t, e)))
    }
}

fn robot_records(w: &WorldState) -> Vec<RobotRecord> {
    w.robots
        .iter()
        .map(|r| RobotRecord {
            x: r.pose.x,
            y: r.pose.y,
            theta: r.pose.theta,
            pan: r.pan,
            tilt: r.tilt,
            fallen: r.fallen(),
        })
        .collect()
}

/// Runs the scenario with its own seed.
pub fn run_match(scenario: &Scenario) -> Result<MatchLog, MatchError> {
    run_match_with(scenario, &MatchOptions::default())
}

pub fn run_match_with(scenario: &Scenario, opts: &MatchOptions) -> Result<MatchLog, MatchError> {
    let cfg = &scenario.config;
    let field = FieldModel::from_config(cfg)?;
    let cam = CameraModel::from_config(cfg);
    let mut world = scenario.initial_world();
    if let Some(seed) = opts.seed {
        world = WorldState::new(world.robots, world.ball, seed);
    }
    let players: Vec<usize> = match opts.only_player {
        Some(p) if p >= scenario.players.len() => return Err(MatchError::NoSuchPlayer(p)),
        Some(p) => vec![p],
        None => (0..scenario.players.len()).collect(),
    };
    let mut agents = Vec::with_capacity(players.len());
    for &i in &players {
        let spec = &scenario.players[i];
        let mut c = cfg.clone();
        c.net.robot_id = spec.robot_id as u32;
        let mut a = Agent::new(&c, spec.pose, spec.robot_id)?;
        // No game controller in simulation: start playing as if the button
        // had been pressed.
        a.handle_game_event(&GameEvent::Button);
        agents.push(a);
    }

    let dt = 1.0 / cfg.sim.world_hz;
    let dt_ns = (dt * 1e9).round() as u64;
    let vision_period = 1e9 / cfg.agent.vision_hz;
    let team_period = 1e9 / cfg.net.team_hz;
    let steps = (scenario.duration_s / dt).round() as u64;
    let mut next_vision = 0.0f64;
    let mut next_team = 0.0f64;
    // Latest delivered message per player, with its send time.
    let mut inbox: Vec<Option<(TeamMessage, u64)>> = vec![None; players.len()];
    let mut outbox: Vec<Option<TeamMessage>> = vec![None; players.len()];
    let mut falls = scenario.falls.clone();
    let mut records = Vec::with_capacity(steps as usize);
    let wall_start = Instant::now();

    for tick in 1..=steps {
        let now = world.time_ns;
        let mut commands = vec![RobotCommand::default(); world.robots.len()];
        falls.retain(|f| {
            if (f.t_s * 1e9) as u64 <= now {
                commands[f.player].fall = Some(f.direction);
                false
            } else {
                true
            }
        });

        if now as f64 >= next_team {
            next_team += team_period;
            for (k, msg) in outbox.iter().enumerate() {
                let Some(m) = msg else { continue };
                // Round trip through the wire format, as a real link would.
                match encode_team_message(m).map(|b| decode_team_message(&b)) {
                    Ok(Ok(d)) => inbox[k] = Some((d, now)),
                    _ => log::warn!("team message from player {} not encodable", players[k]),
                }
            }
        }

        let mut agent_records = Vec::with_capacity(players.len());
        for (k, agent) in agents.iter_mut().enumerate() {
            let i = players[k];
            let imu = sample_imu(&world, i, &cfg.sim);
            let decision = agent.decision();
            let out = agent.hardware_cycle(&imu, dt);
            let c = &mut commands[i];
            c.odometry = Some(out.odometry);
            c.kick = out.kick;
            c.head = Some(out.head);
            c.get_up = out.get_up;
            let b = &agent.vision.belief;
            agent_records.push(AgentRecord {
                robot: i,
                action: decision.action.kind,
                walk: decision.action.walk,
                executing: out.executing,
                kick: out.kick,
                fall: out.fall,
                belief: BeliefRecord {
                    x: b.mean.x,
                    y: b.mean.y,
                    theta: b.mean.theta,
                    confidence: b.confidence,
                },
                ball_local: agent.vision.ball.position(),
                vision: None,
            });
        }

        // The frame is taken now; its decision reaches the hardware loop on
        // the next step.
        if now as f64 >= next_vision {
            next_vision += vision_period;
            for (k, agent) in agents.iter_mut().enumerate() {
                let reports: Vec<TeammateReport> = inbox
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .filter_map(|(_, m)| m.as_ref())
                    .map(|(m, sent)| m.to_report(now.saturating_sub(*sent) as f64 * 1e-9))
                    .collect();
                agent.vision.set_teammates(reports);
                let frame = render_camera(&world, players[k], &cam, &field, cfg.ball.radius_m, &cfg.sim);
                let out = agent.vision_cycle(&frame);
                outbox[k] = Some(out.team_message);
                agent_records[k].vision = Some(VisionRecord {
                    ball: out
                        .result
                        .as_ref()
                        .and_then(|r| r.ball.as_ref())
                        .map(|b| DetectionRecord {
                            u: b.centre.0,
                            v: b.centre.1,
                            radius: b.radius,
                        }),
                    lines: out.result.as_ref().map_or(0, |r| r.lines.len()),
                });
            }
        }

        world = step_world(&world, &commands, dt, &field, &cfg.sim)?;
        let goal = world.events.iter().any(|e| matches!(e, WorldEvent::Goal(_)));
        records.push(TickRecord {
            tick,
            t: world.time_s(),
            robots: robot_records(&world),
            ball: world.ball.map(|b| BallRecord {
                x: b.position.x,
                y: b.position.y,
                vx: b.velocity.x,
                vy: b.velocity.y,
            }),
            agents: agent_records,
            events: world.events.clone(),
        });
        if opts.realtime {
            let due = wall_start + Duration::from_nanos(tick * dt_ns);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        if goal {
            break;
        }
    }
    Ok(MatchLog { records })
}
