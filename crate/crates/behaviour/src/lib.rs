//! Gameplay behaviour: game-state tracking and the action tree.

pub mod game;
pub mod tree;

pub use game::{phase_transition_allowed, update_game_state, GameEvent, GameState};
pub use tree::{tick, Action, ActionKind, BehaviourMemory, HeadMode, Timed, WalkCommand, WorldSnapshot};
