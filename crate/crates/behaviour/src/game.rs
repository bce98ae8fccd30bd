use kidsize_core::config::NetSection;
use kidsize_netcomm::{decode_gc_packet, GamePhase, GcPacket};
use log::warn;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub phase: GamePhase,
    pub kickoff_ours: bool,
    pub penalized: bool,
    pub secs_remaining: f64,
}

impl Default for GameState {
    fn default() -> Self {
        Self {
            phase: GamePhase::Initial,
            kickoff_ours: false,
            penalized: false,
            secs_remaining: 0.0,
        }
    }
}

impl GameState {
    pub fn playing() -> Self {
        Self {
            phase: GamePhase::Playing,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameEvent {
    Gc(GcPacket),
    /// Undecoded datagram from the game controller.
    GcBytes(Vec<u8>),
    Button,
}

/// Whether the controller may move the game from `from` to `to`.
///
/// Phases advance in league order; the only steps back are a goal
/// (`Playing -> Ready`) and a new half (`Finished -> Initial`).
pub fn phase_transition_allowed(from: GamePhase, to: GamePhase) -> bool {
    use GamePhase::*;
    to >= from || matches!((from, to), (Playing, Ready) | (Finished, Initial))
}

pub fn update_game_state(game: &GameState, event: &GameEvent, net: &NetSection) -> GameState {
    let packet = match event {
        GameEvent::Button => {
            let mut g = *game;
            match game.phase {
                GamePhase::Initial => g.phase = GamePhase::Playing,
                GamePhase::Playing => g.phase = GamePhase::Initial,
                other => warn!("button press ignored in phase {other:?}"),
            }
            return g;
        }
        GameEvent::Gc(p) => *p,
        GameEvent::GcBytes(bytes) => match decode_gc_packet(bytes) {
            Ok(p) => p,
            Err(e) => {
                warn!("malformed game-controller packet ignored: {e}");
                return *game;
            }
        },
    };
    let mut g = *game;
    if phase_transition_allowed(game.phase, packet.phase) {
        g.phase = packet.phase;
    } else {
        warn!(
            "game-controller transition {:?} -> {:?} ignored",
            game.phase, packet.phase
        );
    }
    g.kickoff_ours = u32::from(packet.kickoff_team) == net.team_number;
    g.penalized = u8::try_from(net.robot_id).is_ok_and(|id| packet.is_penalized(id));
    g.secs_remaining = packet.secs_remaining as f64;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gc(phase: GamePhase) -> GameEvent {
        GameEvent::Gc(GcPacket {
            phase,
            kickoff_team: 1,
            penalties: [false; 8],
            secs_remaining: 300,
        })
    }

    #[test]
    fn league_sequence() {
        let net = NetSection::default();
        let mut g = GameState::default();
        for p in [
            GamePhase::Ready,
            GamePhase::Set,
            GamePhase::Playing,
            GamePhase::Finished,
        ] {
            g = update_game_state(&g, &gc(p), &net);
            assert_eq!(g.phase, p);
        }
        assert!(g.kickoff_ours);
        assert_eq!(g.secs_remaining, 300.0);
    }

    #[test]
    fn set_to_playing() {
        let g = GameState {
            phase: GamePhase::Set,
            ..GameState::default()
        };
        let g = update_game_state(&g, &gc(GamePhase::Playing), &NetSection::default());
        assert_eq!(g.phase, GamePhase::Playing);
    }

    #[test]
    fn button_toggles() {
        let net = NetSection::default();
        let g = update_game_state(&GameState::default(), &GameEvent::Button, &net);
        assert_eq!(g.phase, GamePhase::Playing);
        let g = update_game_state(&g, &GameEvent::Button, &net);
        assert_eq!(g.phase, GamePhase::Initial);
    }

    #[test]
    fn backward_steps() {
        let net = NetSection::default();
        let playing = GameState::playing();
        assert_eq!(
            update_game_state(&playing, &gc(GamePhase::Ready), &net).phase,
            GamePhase::Ready
        );
        assert_eq!(
            update_game_state(&playing, &gc(GamePhase::Initial), &net).phase,
            GamePhase::Playing
        );
        let fin = GameState {
            phase: GamePhase::Finished,
            ..GameState::default()
        };
        assert_eq!(
            update_game_state(&fin, &gc(GamePhase::Initial), &net).phase,
            GamePhase::Initial
        );
    }

    #[test]
    fn penalty_applies_to_own_id() {
        let net = NetSection {
            robot_id: 2,
            ..NetSection::default()
        };
        let mut p = GcPacket {
            phase: GamePhase::Playing,
            kickoff_team: 7,
            penalties: [false; 8],
            secs_remaining: 0,
        };
        p.penalties[1] = true;
        let g = update_game_state(&GameState::playing(), &GameEvent::Gc(p), &net);
        assert!(g.penalized);
        assert!(!g.kickoff_ours);
        p.penalties[1] = false;
        p.penalties[0] = true;
        assert!(!update_game_state(&g, &GameEvent::Gc(p), &net).penalized);
    }

    #[test]
    fn malformed_bytes_ignored() {
        let g = GameState::playing();
        let out = update_game_state(&g, &GameEvent::GcBytes(vec![1, 2, 3]), &NetSection::default());
        assert_eq!(out, g);
    }
}
