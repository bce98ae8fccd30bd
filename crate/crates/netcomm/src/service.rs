//! UDP threads for the team broadcast and game-controller listener.
//!
//! The service keeps only the newest message per teammate and the newest
//! game-controller packet. Readers never block on the network: every query
//! copies out of a mutex that the receive threads hold only briefly.

use std::collections::BTreeMap;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use kidsize_core::Config;
use log::{debug, warn};
use thiserror::Error;

use crate::wire::{
    decode_gc_packet, decode_team_message, encode_team_message, GcPacket, TeamMessage, GC_PACKET_LEN, TEAM_MESSAGE_LEN,
};

const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Error)]
pub enum CommsError {
    #[error("cannot resolve address `{0}`")]
    Address(String),
    #[error("socket error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommsConfig {
    pub bind_addr: String,
    /// Local team port; 0 lets the OS choose.
    pub team_port: u16,
    pub team_dest: String,
    /// Local game-controller port; `None` disables the listener.
    pub gc_port: Option<u16>,
    pub team_hz: f64,
    pub robot_id: u8,
    pub max_report_age_s: f64,
}

impl CommsConfig {
    pub fn from_config(cfg: &Config) -> Self {
        let n = &cfg.net;
        Self {
            bind_addr: n.bind_addr.clone(),
            team_port: n.team_port,
            team_dest: format!("{}:{}", n.team_dest_addr, n.team_dest_port),
            gc_port: Some(n.gc_port),
            team_hz: n.team_hz,
            robot_id: n.robot_id.min(255) as u8,
            max_report_age_s: cfg.team.max_report_age_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedTeam {
    pub message: TeamMessage,
    pub age_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedGc {
    pub packet: GcPacket,
    /// Increments with every accepted packet.
    pub seq: u64,
    pub age_s: f64,
}

#[derive(Debug, Default)]
struct Counters {
    team_rx: AtomicU64,
    team_rejected: AtomicU64,
    own_ignored: AtomicU64,
    team_tx: AtomicU64,
    gc_rx: AtomicU64,
    gc_rejected: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CommsStats {
    pub team_rx: u64,
    pub team_rejected: u64,
    pub own_ignored: u64,
    pub team_tx: u64,
    pub gc_rx: u64,
    pub gc_rejected: u64,
}

#[derive(Default)]
struct Shared {
    teammates: Mutex<BTreeMap<u8, (TeamMessage, Instant)>>,
    gc: Mutex<Option<(GcPacket, u64, Instant)>>,
    outgoing: Mutex<Option<TeamMessage>>,
    dest: Mutex<Option<SocketAddr>>,
    counters: Counters,
    stop: AtomicBool,
}

/// Running comms threads. Dropping the handle stops and joins them.
pub struct CommsService {
    shared: Arc<Shared>,
    team_addr: SocketAddr,
    gc_addr: Option<SocketAddr>,
    max_age: f64,
    threads: Vec<JoinHandle<()>>,
}

fn resolve(s: &str) -> Result<SocketAddr, CommsError> {
    s.to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| CommsError::Address(s.to_string()))
}

fn bind(addr: &str, port: u16) -> Result<UdpSocket, CommsError> {
    let sock = UdpSocket::bind(resolve(&format!("{addr}:{port}"))?)?;
    sock.set_read_timeout(Some(POLL))?;
    Ok(sock)
}

fn timed_out(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

impl CommsService {
    pub fn start(cfg: &CommsConfig) -> Result<Self, CommsError> {
        let shared = Arc::new(Shared::default());
        *shared.dest.lock().unwrap() = Some(resolve(&cfg.team_dest)?);

        let team = bind(&cfg.bind_addr, cfg.team_port)?;
        team.set_broadcast(true)?;
        let team_addr = team.local_addr()?;
        let mut threads = Vec::new();

        let rx = team.try_clone()?;
        let sh = shared.clone();
        let own = cfg.robot_id;
        threads.push(std::thread::spawn(move || team_rx_loop(rx, sh, own)));

        let sh = shared.clone();
        let period = Duration::from_secs_f64(1.0 / cfg.team_hz.max(1e-3));
        threads.push(std::thread::spawn(move || team_tx_loop(team, sh, period)));

        let mut gc_addr = None;
        if let Some(port) = cfg.gc_port {
            let gc = bind(&cfg.bind_addr, port)?;
            gc_addr = Some(gc.local_addr()?);
            let sh = shared.clone();
            threads.push(std::thread::spawn(move || gc_rx_loop(gc, sh)));
        }

        Ok(Self {
            shared,
            team_addr,
            gc_addr,
            max_age: cfg.max_report_age_s,
            threads,
        })
    }

    pub fn team_addr(&self) -> SocketAddr {
        self.team_addr
    }

    pub fn gc_addr(&self) -> Option<SocketAddr> {
        self.gc_addr
    }

    pub fn set_destination(&self, dest: SocketAddr) {
        *self.shared.dest.lock().unwrap() = Some(dest);
    }

    /// Message broadcast from the next send tick on; `None` pauses sending.
    pub fn set_outgoing(&self, msg: Option<TeamMessage>) {
        *self.shared.outgoing.lock().unwrap() = msg;
    }

    /// Latest message per teammate, younger than the report age limit,
    /// ordered by robot id.
    pub fn teammates(&self) -> Vec<ReceivedTeam> {
        let now = Instant::now();
        let map = self.shared.teammates.lock().unwrap();
        map.values()
            .map(|(m, at)| ReceivedTeam {
                message: *m,
                age_s: now.duration_since(*at).as_secs_f64(),
            })
            .filter(|r| r.age_s <= self.max_age)
            .collect()
    }

    pub fn latest_gc(&self) -> Option<ReceivedGc> {
        let now = Instant::now();
        self.shared.gc.lock().unwrap().map(|(packet, seq, at)| ReceivedGc {
            packet,
            seq,
            age_s: now.duration_since(at).as_secs_f64(),
        })
    }

    pub fn stats(&self) -> CommsStats {
        let c = &self.shared.counters;
        CommsStats {
            team_rx: c.team_rx.load(Ordering::Relaxed),
            team_rejected: c.team_rejected.load(Ordering::Relaxed),
            own_ignored: c.own_ignored.load(Ordering::Relaxed),
            team_tx: c.team_tx.load(Ordering::Relaxed),
            gc_rx: c.gc_rx.load(Ordering::Relaxed),
            gc_rejected: c.gc_rejected.load(Ordering::Relaxed),
        }
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.shared.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for CommsService {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn team_rx_loop(sock: UdpSocket, sh: Arc<Shared>, own: u8) {
    // One spare byte so oversized datagrams are seen as too long.
    let mut buf = [0u8; TEAM_MESSAGE_LEN + 1];
    while !sh.stop.load(Ordering::Relaxed) {
        let n = match sock.recv_from(&mut buf) {
            Ok((n, _)) => n,
            Err(e) if timed_out(&e) => continue,
            Err(e) => {
                warn!("team socket receive failed: {e}");
                std::thread::sleep(POLL);
                continue;
            }
        };
        match decode_team_message(&buf[..n]) {
            Ok(m) if m.robot_id == own => {
                sh.counters.own_ignored.fetch_add(1, Ordering::Relaxed);
            }
            Ok(m) => {
                sh.counters.team_rx.fetch_add(1, Ordering::Relaxed);
                sh.teammates.lock().unwrap().insert(m.robot_id, (m, Instant::now()));
            }
            Err(e) => {
                debug!("rejected team packet: {e}");
                sh.counters.team_rejected.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}

fn team_tx_loop(sock: UdpSocket, sh: Arc<Shared>, period: Duration) {
    let mut next = Instant::now();
    while !sh.stop.load(Ordering::Relaxed) {
        let now = Instant::now();
        if now < next {
            std::thread::sleep((next - now).min(POLL));
            continue;
        }
        next += period;
        if next < now {
            next = now + period;
        }
        let msg = *sh.outgoing.lock().unwrap();
        let dest = *sh.dest.lock().unwrap();
        let (Some(msg), Some(dest)) = (msg, dest) else {
            continue;
        };
        match encode_team_message(&msg) {
            Ok(bytes) => match sock.send_to(&bytes, dest) {
                Ok(_) => {
                    sh.counters.team_tx.fetch_add(1, Ordering::Relaxed);
                }
                Err(e) => warn!("team send to {dest} failed: {e}"),
            },
            Err(e) => warn!("outgoing team message not encodable: {e}"),
        }
    }
}

fn gc_rx_loop(sock: UdpSocket, sh: Arc<Shared>) {
    let mut buf = [0u8; GC_PACKET_LEN + 1];
    let mut seq = 0u64;
    while !sh.stop.load(Ordering::Relaxed) {
        let n = match sock.recv_from(&mut buf) {
            Ok((n, _)) => n,
            Err(e) if timed_out(&e) => continue,
            Err(e) => {
                warn!("game-controller socket receive failed: {e}");
                std::thread::sleep(POLL);
                continue;
            }
        };
        match decode_gc_packet(&buf[..n]) {
            Ok(p) => {
                seq += 1;
                sh.counters.gc_rx.fetch_add(1, Ordering::Relaxed);
                *sh.gc.lock().unwrap() = Some((p, seq, Instant::now()));
            }
            Err(e) => {
                debug!("rejected game-controller packet: {e}");
                sh.counters.gc_rejected.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}
