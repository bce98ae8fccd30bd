//! Team messages and game-controller packets: wire codecs and the UDP
//! service that moves them.

pub mod service;
pub mod wire;

pub use service::{CommsConfig, CommsError, CommsService, CommsStats, ReceivedGc, ReceivedTeam};
pub use wire::{
    decode_gc_packet, decode_team_message, encode_gc_packet, encode_team_message, BallReport, DecodeError, EncodeError,
    GamePhase, GcPacket, TeamMessage, GC_PACKET_LEN, TEAM_MESSAGE_LEN,
};
