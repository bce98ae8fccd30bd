//! Scenario files: the configuration key format plus world setup keys.
//!
//! ```text
//! scenario.duration_s = 30
//! scenario.seed = 7
//! scenario.ball = true
//! scenario.ball_x = 0.5
//! scenario.ball_y = 0
//! player.0.x = 0
//! player.0.theta = 0
//! player.0.robot_id = 1
//! fall_event.0.player = 0
//! fall_event.0.t_s = 4.0
//! fall_event.0.direction = front
//! sim.kick_speed = 2.5
//! ```
//!
//! Any other key is a configuration override. Missing players default to a
//! single robot at the configured kick-off pose.

use std::collections::BTreeMap;
use std::path::Path;

use kidsize_core::config::{split_assignment, ConfigValue};
use kidsize_core::{Config, ConfigError, Point2, Pose2D};
use thiserror::Error;

use crate::world::{BallState, FallDirection, RobotState, WorldState};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("line {line}: unknown scenario key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSpec {
    pub pose: Pose2D,
    pub robot_id: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedFall {
    pub player: usize,
    pub t_s: f64,
    pub direction: FallDirection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: Config,
    pub duration_s: f64,
    pub seed: u64,
    pub ball: Option<BallState>,
    pub players: Vec<PlayerSpec>,
    pub falls: Vec<ScriptedFall>,
}

#[derive(Default)]
struct PlayerKeys {
    x: Option<f64>,
    y: Option<f64>,
    theta: Option<f64>,
    robot_id: Option<u8>,
}

#[derive(Default)]
struct FallKeys {
    player: Option<usize>,
    t_s: Option<f64>,
    direction: Option<FallDirection>,
}

fn value<T: ConfigValue>(raw: &str, line: usize, key: &str) -> Result<T, ScenarioError> {
    T::parse_value(raw).map_err(|message| ScenarioError::Value {
        line,
        key: key.to_string(),
        message,
    })
}

fn indexed<'a>(key: &'a str, prefix: &str) -> Option<(usize, &'a str)> {
    let rest = key.strip_prefix(prefix)?;
    let (idx, field) = rest.split_once('.')?;
    Some((idx.parse().ok()?, field))
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>, base: &Config) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, base)
    }

    /// Parses scenario text on top of `base`.
    pub fn parse(text: &str, base: &Config) -> Result<Self, ScenarioError> {
        let mut config = base.clone();
        let mut duration_s = 30.0;
        let mut seed = 0u64;
        let mut has_ball = true;
        let mut ball = BallState::at_rest(0.0, 0.0);
        let mut players: BTreeMap<usize, PlayerKeys> = BTreeMap::new();
        let mut falls: BTreeMap<usize, FallKeys> = BTreeMap::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let Some((key, v)) = split_assignment(raw, line)? else {
                continue;
            };
            let unknown = || ScenarioError::UnknownKey {
                line,
                key: key.to_string(),
            };
            if let Some(field) = key.strip_prefix("scenario.") {
                match field {
                    "duration_s" => duration_s = value(v, line, key)?,
                    "seed" => seed = value(v, line, key)?,
                    "ball" => has_ball = value(v, line, key)?,
                    "ball_x" => ball.position.x = value(v, line, key)?,
                    "ball_y" => ball.position.y = value(v, line, key)?,
                    "ball_vx" => ball.velocity.x = value(v, line, key)?,
                    "ball_vy" => ball.velocity.y = value(v, line, key)?,
                    _ => return Err(unknown()),
                }
            } else if let Some((idx, field)) = indexed(key, "player.") {
                let p = players.entry(idx).or_default();
                match field {
                    "x" => p.x = Some(value(v, line, key)?),
                    "y" => p.y = Some(value(v, line, key)?),
                    "theta" => p.theta = Some(value(v, line, key)?),
                    "robot_id" => {
                        let id: u32 = value(v, line, key)?;
                        p.robot_id = Some(u8::try_from(id).map_err(|_| ScenarioError::Value {
                            line,
                            key: key.to_string(),
                            message: "robot id must fit in a byte".into(),
                        })?);
                    }
                    _ => return Err(unknown()),
                }
            } else if let Some((idx, field)) = indexed(key, "fall_event.") {
                let f = falls.entry(idx).or_default();
                match field {
                    "player" => f.player = Some(value::<u32>(v, line, key)? as usize),
                    "t_s" => f.t_s = Some(value(v, line, key)?),
                    "direction" => {
                        f.direction = Some(match v {
                            "front" => FallDirection::Front,
                            "back" => FallDirection::Back,
                            _ => {
                                return Err(ScenarioError::Value {
                                    line,
                                    key: key.to_string(),
                                    message: format!("`{v}` is not `front` or `back`"),
                                })
                            }
                        })
                    }
                    _ => return Err(unknown()),
                }
            } else {
                config.set(key, v).map_err(|e| e.at(line, key))?;
            }
        }
        config.validate()?;

        let a = &config.agent;
        let players: Vec<PlayerSpec> = if players.is_empty() {
            vec![PlayerSpec {
                pose: Pose2D::new(a.kickoff_x_m, a.kickoff_y_m, a.kickoff_theta_rad),
                robot_id: config.net.robot_id.min(255) as u8,
            }]
        } else {
            if players.keys().copied().ne(0..players.len()) {
                return Err(ScenarioError::Invalid("player indices must run 0, 1, 2, ...".into()));
            }
            players
                .into_values()
                .enumerate()
                .map(|(i, p)| PlayerSpec {
                    pose: Pose2D::new(p.x.unwrap_or(0.0), p.y.unwrap_or(0.0), p.theta.unwrap_or(0.0)),
                    robot_id: p.robot_id.unwrap_or(i as u8 + 1),
                })
                .collect()
        };
        let falls = falls
            .into_iter()
            .map(|(i, f)| match (f.player, f.t_s) {
                (Some(player), Some(t_s)) if player < players.len() => Ok(ScriptedFall {
                    player,
                    t_s,
                    direction: f.direction.unwrap_or(FallDirection::Front),
                }),
                _ => Err(ScenarioError::Invalid(format!(
                    "fall_event.{i} needs a valid player and t_s"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !(duration_s > 0.0) {
            return Err(ScenarioError::Invalid("scenario.duration_s must be positive".into()));
        }
        let ball = has_ball.then_some(ball);
        if let Some(b) = &ball {
            let field = kidsize_core::FieldModel::from_config(&config).expect("validated config");
            if !field.contains(&Point2::new(b.position.x, b.position.y)) {
                return Err(ScenarioError::Invalid("ball starts outside the field".into()));
            }
        }
        Ok(Self {
            config,
            duration_s,
            seed,
            ball,
            players,
            falls,
        })
    }

    pub fn initial_world(&self) -> WorldState {
        let robots = self.players.iter().map(|p| RobotState::new(p.pose)).collect();
        WorldState::new(robots, self.ball, self.seed)
    }
}
