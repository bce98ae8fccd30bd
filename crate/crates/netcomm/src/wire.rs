//! Fixed-size little-endian wire formats.
//!
//! Team message, 40 bytes:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `ESTM`                            |
//! | 4      | 1    | protocol version                        |
//! | 5      | 1    | robot id                                |
//! | 6      | 12   | pose x, y (m), theta (rad), f32         |
//! | 18     | 4    | pose confidence, f32 in [0, 1]          |
//! | 22     | 8    | ball x, y (field m), f32                |
//! | 30     | 2    | ball age ms, u16; `0xFFFF` = no ball    |
//! | 32     | 1    | fallen flag, 0 or 1                     |
//! | 33     | 4    | sender timestamp ms, u32                |
//! | 37     | 3    | zero padding                            |
//!
//! Game-controller packet, 24 bytes:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `ESGC`                            |
//! | 4      | 1    | phase: 0 initial .. 4 finished          |
//! | 5      | 1    | team number with kick-off               |
//! | 6      | 8    | penalty flag per robot id 1..=8         |
//! | 14     | 2    | seconds remaining, u16                  |
//! | 16     | 8    | zero padding                            |

use kidsize_core::{Point2, Pose2D};
use kidsize_estimation::TeammateReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TEAM_MAGIC: [u8; 4] = *b"ESTM";
pub const GC_MAGIC: [u8; 4] = *b"ESGC";
pub const TEAM_MESSAGE_LEN: usize = 40;
pub const GC_PACKET_LEN: usize = 24;
pub const PROTOCOL_VERSION: u8 = 1;
pub const NO_BALL: u16 = 0xFFFF;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("packet of {0} bytes is too short")]
    Short(usize),
    #[error("packet of {0} bytes is too long")]
    Long(usize),
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    Version(u8),
    #[error("field `{0}` is NaN")]
    Nan(&'static str),
    #[error("field `{0}` out of range")]
    Range(&'static str),
    #[error("unknown game phase byte {0:#04x}")]
    UnknownPhase(u8),
    #[error("non-zero padding")]
    Padding,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("field `{0}` out of range")]
    Range(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub x: f32,
    pub y: f32,
    /// At most `0xFFFE`.
    pub age_ms: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamMessage {
    pub version: u8,
    pub robot_id: u8,
    pub x: f32,
    pub y: f32,
    pub theta: f32,
    pub confidence: f32,
    pub ball: Option<BallReport>,
    pub fallen: bool,
    pub timestamp_ms: u32,
}

impl TeamMessage {
    pub fn new(robot_id: u8, pose: &Pose2D, confidence: f64) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            robot_id,
            x: pose.x as f32,
            y: pose.y as f32,
            theta: pose.theta as f32,
            confidence: confidence.clamp(0.0, 1.0) as f32,
            ball: None,
            fallen: false,
            timestamp_ms: 0,
        }
    }

    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x as f64, self.y as f64, self.theta as f64)
    }

    /// Teammate report as seen `age_s` after reception.
    pub fn to_report(&self, age_s: f64) -> TeammateReport {
        TeammateReport {
            robot_id: self.robot_id,
            pose: self.pose(),
            confidence: self.confidence as f64,
            ball_field: self.ball.map(|b| Point2::new(b.x as f64, b.y as f64)),
            age_s,
        }
    }
}

fn finite(v: f32, name: &'static str) -> Result<(), EncodeError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(EncodeError::Range(name))
    }
}

pub fn encode_team_message(m: &TeamMessage) -> Result<[u8; TEAM_MESSAGE_LEN], EncodeError> {
    finite(m.x, "x")?;
    finite(m.y, "y")?;
    finite(m.theta, "theta")?;
    if !(0.0..=1.0).contains(&m.confidence) {
        return Err(EncodeError::Range("confidence"));
    }
    let (bx, by, age) = match m.ball {
        Some(b) => {
            finite(b.x, "ball.x")?;
            finite(b.y, "ball.y")?;
            if b.age_ms == NO_BALL {
                return Err(EncodeError::Range("ball.age_ms"));
            }
            (b.x, b.y, b.age_ms)
        }
        None => (0.0, 0.0, NO_BALL),
    };
    let mut out = [0u8; TEAM_MESSAGE_LEN];
    out[0..4].copy_from_slice(&TEAM_MAGIC);
    out[4] = m.version;
    out[5] = m.robot_id;
    out[6..10].copy_from_slice(&m.x.to_le_bytes());
    out[10..14].copy_from_slice(&m.y.to_le_bytes());
    out[14..18].copy_from_slice(&m.theta.to_le_bytes());
    out[18..22].copy_from_slice(&m.confidence.to_le_bytes());
    out[22..26].copy_from_slice(&bx.to_le_bytes());
    out[26..30].copy_from_slice(&by.to_le_bytes());
    out[30..32].copy_from_slice(&age.to_le_bytes());
    out[32] = m.fallen as u8;
    out[33..37].copy_from_slice(&m.timestamp_ms.to_le_bytes());
    Ok(out)
}

fn f32_at(b: &[u8], at: usize, name: &'static str) -> Result<f32, DecodeError> {
    let v = f32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]]);
    if v.is_nan() {
        Err(DecodeError::Nan(name))
    } else if v.is_infinite() {
        Err(DecodeError::Range(name))
    } else {
        Ok(v)
    }
}

fn check_frame(b: &[u8], len: usize, magic: [u8; 4]) -> Result<(), DecodeError> {
    if b.len() < len {
        return Err(DecodeError::Short(b.len()));
    }
    if b.len() > len {
        return Err(DecodeError::Long(b.len()));
    }
    let m = [b[0], b[1], b[2], b[3]];
    if m != magic {
        return Err(DecodeError::BadMagic(m));
    }
    Ok(())
}

pub fn decode_team_message(b: &[u8]) -> Result<TeamMessage, DecodeError> {
    check_frame(b, TEAM_MESSAGE_LEN, TEAM_MAGIC)?;
    if b[4] != PROTOCOL_VERSION {
        return Err(DecodeError::Version(b[4]));
    }
    let x = f32_at(b, 6, "x")?;
    let y = f32_at(b, 10, "y")?;
    let theta = f32_at(b, 14, "theta")?;
    let confidence = f32_at(b, 18, "confidence")?;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(DecodeError::Range("confidence"));
    }
    let bx = f32_at(b, 22, "ball.x")?;
    let by = f32_at(b, 26, "ball.y")?;
    let age = u16::from_le_bytes([b[30], b[31]]);
    let ball = if age == NO_BALL {
        if b[22..30].iter().any(|&v| v != 0) {
            return Err(DecodeError::Range("ball"));
        }
        None
    } else {
        Some(BallReport {
            x: bx,
            y: by,
            age_ms: age,
        })
    };
    let fallen = match b[32] {
        0 => false,
        1 => true,
        _ => return Err(DecodeError::Range("fallen")),
    };
    if b[37..].iter().any(|&v| v != 0) {
        return Err(DecodeError::Padding);
    }
    Ok(TeamMessage {
        version: b[4],
        robot_id: b[5],
        x,
        y,
        theta,
        confidence,
        ball,
        fallen,
        timestamp_ms: u32::from_le_bytes([b[33], b[34], b[35], b[36]]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GamePhase {
    Initial,
    Ready,
    Set,
    Playing,
    Finished,
}

impl GamePhase {
    pub fn from_byte(b: u8) -> Option<Self> {
        use GamePhase::*;
        [Initial, Ready, Set, Playing, Finished].get(b as usize).copied()
    }

    pub fn to_byte(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcPacket {
    pub phase: GamePhase,
    pub kickoff_team: u8,
    /// Penalty flag per robot, index `robot_id - 1`.
    pub penalties: [bool; 8],
    pub secs_remaining: u16,
}

impl GcPacket {
    pub fn is_penalized(&self, robot_id: u8) -> bool {
        (1..=8).contains(&robot_id) && self.penalties[robot_id as usize - 1]
    }
}

pub fn encode_gc_packet(p: &GcPacket) -> [u8; GC_PACKET_LEN] {
    let mut out = [0u8; GC_PACKET_LEN];
    out[0..4].copy_from_slice(&GC_MAGIC);
    out[4] = p.phase.to_byte();
    out[5] = p.kickoff_team;
    for (i, &pen) in p.penalties.iter().enumerate() {
        out[6 + i] = pen as u8;
    }
    out[14..16].copy_from_slice(&p.secs_remaining.to_le_bytes());
    out
}

pub fn decode_gc_packet(b: &[u8]) -> Result<GcPacket, DecodeError> {
    check_frame(b, GC_PACKET_LEN, GC_MAGIC)?;
    let phase = GamePhase::from_byte(b[4]).ok_or(DecodeError::UnknownPhase(b[4]))?;
    let mut penalties = [false; 8];
    for (i, p) in penalties.iter_mut().enumerate() {
        *p = match b[6 + i] {
            0 => false,
            1 => true,
            _ => return Err(DecodeError::Range("penalties")),
        };
    }
    if b[16..].iter().any(|&v| v != 0) {
        return Err(DecodeError::Padding);
    }
    Ok(GcPacket {
        phase,
        kickoff_team: b[5],
        penalties,
        secs_remaining: u16::from_le_bytes([b[14], b[15]]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero() -> TeamMessage {
        TeamMessage::new(0, &Pose2D::new(0.0, 0.0, 0.0), 0.0)
    }

    #[test]
    fn zero_message_golden() {
        // Worked out by hand from the layout table.
        let golden: [u8; 40] = [
            b'E', b'S', b'T', b'M', 1, 0, // magic, version, id
            0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, // pose
            0, 0, 0, 0, // confidence
            0, 0, 0, 0, 0, 0, 0, 0, // ball
            0xFF, 0xFF, // no ball
            0,    // fallen
            0, 0, 0, 0, // timestamp
            0, 0, 0,
        ];
        assert_eq!(encode_team_message(&zero()).unwrap(), golden);
        assert_eq!(decode_team_message(&golden).unwrap(), zero());
    }

    #[test]
    fn populated_golden() {
        let m = TeamMessage {
            version: 1,
            robot_id: 3,
            x: 1.5,
            y: -2.0,
            theta: 0.5,
            confidence: 0.75,
            ball: Some(BallReport {
                x: 0.25,
                y: 1.0,
                age_ms: 300,
            }),
            fallen: true,
            timestamp_ms: 0x0102_0304,
        };
        let golden: [u8; 40] = [
            b'E', b'S', b'T', b'M', 1, 3, 0x00, 0x00, 0xC0, 0x3F, // 1.5
            0x00, 0x00, 0x00, 0xC0, // -2.0
            0x00, 0x00, 0x00, 0x3F, // 0.5
            0x00, 0x00, 0x40, 0x3F, // 0.75
            0x00, 0x00, 0x80, 0x3E, // 0.25
            0x00, 0x00, 0x80, 0x3F, // 1.0
            0x2C, 0x01, // 300
            1, 0x04, 0x03, 0x02, 0x01, 0, 0, 0,
        ];
        assert_eq!(encode_team_message(&m).unwrap(), golden);
        assert_eq!(decode_team_message(&golden).unwrap(), m);
    }

    #[test]
    fn encode_range_errors() {
        let mut m = zero();
        m.confidence = 1.5;
        assert_eq!(encode_team_message(&m), Err(EncodeError::Range("confidence")));
        m.confidence = f32::NAN;
        assert!(encode_team_message(&m).is_err());
        let mut m = zero();
        m.ball = Some(BallReport {
            x: 0.0,
            y: 0.0,
            age_ms: NO_BALL,
        });
        assert!(encode_team_message(&m).is_err());
    }

    #[test]
    fn decode_errors_are_distinct() {
        let good = encode_team_message(&zero()).unwrap();
        assert_eq!(decode_team_message(&good[..31]), Err(DecodeError::Short(31)));
        let mut long = good.to_vec();
        long.push(0);
        assert_eq!(decode_team_message(&long), Err(DecodeError::Long(41)));
        let mut bad = good;
        bad[0..4].copy_from_slice(b"XXXX");
        assert_eq!(decode_team_message(&bad), Err(DecodeError::BadMagic(*b"XXXX")));
        let mut nan = good;
        nan[6..10].copy_from_slice(&f32::NAN.to_le_bytes());
        assert_eq!(decode_team_message(&nan), Err(DecodeError::Nan("x")));
        let mut pad = good;
        pad[39] = 1;
        assert_eq!(decode_team_message(&pad), Err(DecodeError::Padding));
        let mut ver = good;
        ver[4] = 9;
        assert_eq!(decode_team_message(&ver), Err(DecodeError::Version(9)));
    }

    #[test]
    fn gc_golden() {
        let golden: [u8; 24] = [
            b'E', b'S', b'G', b'C', 3, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0x58, 0x02, 0, 0, 0, 0, 0, 0, 0, 0,
        ];
        let p = decode_gc_packet(&golden).unwrap();
        assert_eq!(
            p,
            GcPacket {
                phase: GamePhase::Playing,
                kickoff_team: 1,
                penalties: [false; 8],
                secs_remaining: 600,
            }
        );
        assert_eq!(encode_gc_packet(&p), golden);
        let mut unknown = golden;
        unknown[4] = 0xFF;
        assert_eq!(decode_gc_packet(&unknown), Err(DecodeError::UnknownPhase(0xFF)));
        assert_eq!(decode_gc_packet(&golden[..20]), Err(DecodeError::Short(20)));
    }

    #[test]
    fn penalty_lookup() {
        let mut p = GcPacket {
            phase: GamePhase::Playing,
            kickoff_team: 1,
            penalties: [false; 8],
            secs_remaining: 0,
        };
        p.penalties[2] = true;
        assert!(p.is_penalized(3));
        assert!(!p.is_penalized(0) && !p.is_penalized(9) && !p.is_penalized(1));
    }
}
