//! Fixed-priority gameplay tree.
//!
//! Fall handling first, then game-state gating, then the play leaves:
//! find ball, approach, find goal, align, kick.

use kidsize_core::{wrap_angle, Config, Point2};
use kidsize_estimation::{BeliefState, FallPhase, FallState};
use kidsize_netcomm::GamePhase;
use serde::{Deserialize, Serialize};

use crate::game::GameState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timed<T> {
    pub value: T,
    pub age_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub belief: BeliefState,
    /// Ball in field coordinates.
    pub ball_field: Option<Timed<Point2>>,
    /// Bearing of the opponent goal centre relative to the robot heading.
    pub goal_bearing: Option<Timed<f64>>,
    pub fall: FallState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Stand,
    FindBall,
    ApproachBall,
    FindGoal,
    AlignToGoal,
    Kick,
    GameLogicIdle,
    GetUp,
    Brace,
}

impl ActionKind {
    /// Kinds that never carry a walk command.
    pub fn is_static(self) -> bool {
        matches!(self, Self::Stand | Self::Kick | Self::GetUp | Self::Brace)
    }
}

/// Per-step walk request: forward and lateral step (m) and turn (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WalkCommand {
    pub step: f64,
    pub lateral: f64,
    pub turn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadMode {
    Centre,
    TrackBall,
    /// Widening pan sweep used while the ball is lost.
    SpiralScan,
    /// Level pan sweep for the goal.
    GoalScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub walk: Option<WalkCommand>,
    pub head: HeadMode,
}

impl Action {
    fn fixed(kind: ActionKind, head: HeadMode) -> Self {
        Self { kind, walk: None, head }
    }

    fn walking(kind: ActionKind, walk: WalkCommand, head: HeadMode) -> Self {
        Self {
            kind,
            walk: Some(walk),
            head,
        }
    }
}

/// Found/lost hysteresis carried between ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BehaviourMemory {
    pub ball_found: bool,
    pub goal_found: bool,
}

fn hysteresis(was: bool, age: Option<f64>, found_after: f64, lost_after: f64) -> bool {
    match age {
        None => false,
        Some(a) if a > lost_after => false,
        Some(a) if a < found_after => true,
        Some(_) => was,
    }
}

fn clamp(v: f64, limit: f64) -> f64 {
    v.clamp(-limit, limit)
}

pub fn tick(snap: &WorldSnapshot, game: &GameState, mem: &BehaviourMemory, cfg: &Config) -> (Action, BehaviourMemory) {
    let b = &cfg.behaviour;
    let w = &cfg.walk;
    let valid_age = |a: f64| if a.is_finite() && a >= 0.0 { Some(a) } else { None };
    let ball_age = snap.ball_field.as_ref().and_then(|t| valid_age(t.age_s));
    let goal_age = snap
        .goal_bearing
        .as_ref()
        .filter(|t| t.value.is_finite())
        .and_then(|t| valid_age(t.age_s));
    let next = BehaviourMemory {
        ball_found: hysteresis(mem.ball_found, ball_age, b.found_after_s, b.lost_after_s),
        goal_found: hysteresis(mem.goal_found, goal_age, b.found_after_s, b.lost_after_s),
    };

    use ActionKind::*;
    let action = match snap.fall.phase {
        FallPhase::Upright => None,
        FallPhase::Correcting => Some(Action::fixed(Stand, HeadMode::Centre)),
        FallPhase::Bracing => Some(Action::fixed(Brace, HeadMode::Centre)),
        FallPhase::FallenFront | FallPhase::FallenBack | FallPhase::GettingUp => {
            Some(Action::fixed(GetUp, HeadMode::Centre))
        }
    };
    if let Some(a) = action {
        return (a, next);
    }
    if game.penalized {
        return (Action::fixed(Stand, HeadMode::Centre), next);
    }
    if game.phase != GamePhase::Playing {
        return (Action::fixed(GameLogicIdle, HeadMode::Centre), next);
    }

    let pose = snap.belief.mean;
    let ball = match (&snap.ball_field, next.ball_found) {
        (Some(t), true) if t.value.iter().all(|v| v.is_finite()) && pose.is_finite() => pose.to_local(&t.value),
        _ => {
            let walk = WalkCommand {
                turn: b.search_turn_rad.min(w.max_turn_rad),
                ..WalkCommand::default()
            };
            return (Action::walking(FindBall, walk, HeadMode::SpiralScan), next);
        }
    };
    let dist = ball.norm();
    let bearing = ball.y.atan2(ball.x);

    if dist > b.near_dist_m {
        let step = (b.step_gain * dist).min(w.max_step_m) * bearing.cos().max(0.0);
        let walk = WalkCommand {
            step,
            lateral: 0.0,
            turn: clamp(b.turn_gain * bearing, w.max_turn_rad),
        };
        return (Action::walking(ApproachBall, walk, HeadMode::TrackBall), next);
    }

    let goal = match (&snap.goal_bearing, next.goal_found) {
        (Some(t), true) => wrap_angle(t.value),
        _ => {
            // Orbit the ball: sidestep while turning to keep it centred.
            let walk = WalkCommand {
                step: clamp(b.step_gain * (dist - b.kick_dist_m), w.max_step_m),
                lateral: 0.5 * w.max_lateral_m,
                turn: clamp(b.turn_gain * bearing, w.max_turn_rad),
            };
            return (Action::walking(FindGoal, walk, HeadMode::GoalScan), next);
        }
    };

    if dist <= b.kick_dist_m && goal.abs() < b.align_tol_rad && ball.y.abs() <= b.kick_lateral_m {
        return (Action::fixed(Kick, HeadMode::TrackBall), next);
    }
    let walk = WalkCommand {
        step: clamp(b.step_gain * (ball.x - 0.75 * b.kick_dist_m), w.max_step_m),
        lateral: clamp(b.lateral_gain * ball.y, w.max_lateral_m),
        turn: clamp(b.turn_gain * goal, w.max_turn_rad),
    };
    (Action::walking(AlignToGoal, walk, HeadMode::TrackBall), next)
}
