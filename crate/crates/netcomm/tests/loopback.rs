use std::net::UdpSocket;
use std::time::{Duration, Instant};

use kidsize_core::Pose2D;
use kidsize_netcomm::*;

fn cfg(id: u8) -> CommsConfig {
    CommsConfig {
        bind_addr: "127.0.0.1".into(),
        team_port: 0,
        team_dest: "127.0.0.1:9".into(),
        gc_port: Some(0),
        team_hz: 20.0,
        robot_id: id,
        max_report_age_s: 2.0,
    }
}

fn wait_for(mut f: impl FnMut() -> bool) -> bool {
    let deadline = Instant::now() + Duration::from_secs(3);
    while Instant::now() < deadline {
        if f() {
            return true;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    false
}

#[test]
fn two_robots_exchange_messages() {
    let a = CommsService::start(&cfg(1)).unwrap();
    let b = CommsService::start(&cfg(2)).unwrap();
    a.set_destination(b.team_addr());
    b.set_destination(a.team_addr());

    let mut ma = TeamMessage::new(1, &Pose2D::new(1.0, 2.0, 0.5), 0.8);
    ma.ball = Some(BallReport {
        x: 0.5,
        y: -0.5,
        age_ms: 100,
    });
    a.set_outgoing(Some(ma));
    b.set_outgoing(Some(TeamMessage::new(2, &Pose2D::new(-1.0, 0.0, 3.0), 0.4)));

    assert!(wait_for(|| !b.teammates().is_empty() && !a.teammates().is_empty()));
    let got = b.teammates();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].message, ma);
    assert!(got[0].age_s < 2.0);
    let report = got[0].message.to_report(got[0].age_s);
    assert_eq!(report.robot_id, 1);
    assert!((report.pose.x - 1.0).abs() < 1e-6);
    assert_eq!(a.teammates()[0].message.robot_id, 2);
    assert!(a.stats().team_tx > 0);
}

#[test]
fn own_and_malformed_packets_are_counted() {
    let svc = CommsService::start(&cfg(4)).unwrap();
    let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
    let own = encode_team_message(&TeamMessage::new(4, &Pose2D::default(), 0.5)).unwrap();
    tx.send_to(&own, svc.team_addr()).unwrap();
    tx.send_to(&own[..31], svc.team_addr()).unwrap();
    let mut long = own.to_vec();
    long.push(0);
    tx.send_to(&long, svc.team_addr()).unwrap();
    let gc_addr = svc.gc_addr().unwrap();
    tx.send_to(b"ESGCjunk", gc_addr).unwrap();

    assert!(wait_for(|| {
        let s = svc.stats();
        s.own_ignored == 1 && s.team_rejected == 2 && s.gc_rejected == 1
    }));
    assert!(svc.teammates().is_empty());
    assert!(svc.latest_gc().is_none());
}

#[test]
fn game_controller_sequence() {
    let svc = CommsService::start(&cfg(1)).unwrap();
    let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
    let gc = svc.gc_addr().unwrap();
    let mut p = GcPacket {
        phase: GamePhase::Ready,
        kickoff_team: 1,
        penalties: [false; 8],
        secs_remaining: 600,
    };
    tx.send_to(&encode_gc_packet(&p), gc).unwrap();
    assert!(wait_for(|| svc.latest_gc().is_some()));
    assert_eq!(svc.latest_gc().unwrap().seq, 1);
    p.phase = GamePhase::Playing;
    tx.send_to(&encode_gc_packet(&p), gc).unwrap();
    assert!(wait_for(|| svc.latest_gc().map(|g| g.seq) == Some(2)));
    assert_eq!(svc.latest_gc().unwrap().packet.phase, GamePhase::Playing);
}

#[test]
fn stale_reports_are_dropped() {
    let mut c = cfg(1);
    c.max_report_age_s = 0.1;
    let svc = CommsService::start(&c).unwrap();
    let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
    let m = encode_team_message(&TeamMessage::new(3, &Pose2D::default(), 0.5)).unwrap();
    tx.send_to(&m, svc.team_addr()).unwrap();
    assert!(wait_for(|| svc.teammates().len() == 1));
    std::thread::sleep(Duration::from_millis(200));
    assert!(svc.teammates().is_empty());
}
