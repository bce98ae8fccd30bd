use kidsize_core::{JointId, JointModel, Side};
use kidsize_gait::kinematics::{leg_fk_unchecked, leg_ik_unchecked};
use kidsize_gait::walk::targets_at;
use kidsize_gait::walk::{foot_offset, foot_target};
use kidsize_gait::{leg_fk, leg_ik, stand_pose, walk_tick, GaitPhase, WalkParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model() -> JointModel {
    JointModel::new(0.11, 0.11, 0.035).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> WalkParams {
    WalkParams {
        frequency_hz: rng.random_range(0.8..2.0),
        step_m: rng.random_range(-0.04..0.04),
        lateral_m: rng.random_range(-0.02..0.02),
        turn_rad: rng.random_range(-0.25..0.25),
        rise_m: rng.random_range(0.0..0.03),
        swing_m: rng.random_range(0.0..0.02),
        support_ratio: rng.random_range(0.5..0.75),
        ..WalkParams::default()
    }
}

/// Angles whose ankle sits below the hip in the ankle-pitch frame, where the
/// closed-form solution is unique.
fn random_reachable(rng: &mut ChaCha8Rng, m: &JointModel) -> [f64; 6] {
    loop {
        let q: [f64; 6] = [
            rng.random_range(-0.6..0.6),
            rng.random_range(-0.5..0.5),
            rng.random_range(-1.2..0.6),
            rng.random_range(0.05..2.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.5..0.5),
        ];
        let (t, s) = (m.thigh_m, m.shank_m);
        let (ux, uz) = (t * q[3].sin(), -t * q[3].cos() - s);
        let z = q[4].sin() * ux + q[4].cos() * uz;
        if z < -0.02 {
            return q;
        }
    }
}

#[test]
fn fk_reference_poses() {
    let m = model();
    let f = leg_fk(&[0.0; 6], Side::Right, &m).unwrap();
    assert_eq!(f.position.y, -0.035);
    assert_eq!(f.position.z, -0.22);
    let q = [0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0];
    let f = leg_fk(&q, Side::Left, &m).unwrap();
    assert!((f.position.z + 0.11 + 0.11 * q[3].cos()).abs() < 1e-12);
    assert!((f.position.x.abs() - 0.11 * q[3].sin()).abs() < 1e-12);
}

#[test]
fn ik_inverts_fk_on_angles() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let side = if rng.random_bool(0.5) { Side::Left } else { Side::Right };
        let q = random_reachable(&mut rng, &m);
        let f = leg_fk(&q, side, &m).unwrap();
        let back = leg_ik(&f, side, &m).unwrap();
        for (a, b) in q.iter().zip(back) {
            assert!((a - b).abs() < 1e-6, "{q:?} vs {back:?}");
        }
    }
}

#[test]
fn unchecked_round_trip_matches() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let q = random_reachable(&mut rng, &m);
        let f = leg_fk_unchecked(&q, Side::Left, &m);
        let g = leg_fk_unchecked(&leg_ik_unchecked(&f, Side::Left, &m).unwrap(), Side::Left, &m);
        assert!((f.position - g.position).norm() < 1e-9);
        assert!(f.orientation_error(&g) < 1e-9);
    }
}

#[test]
fn null_gait_is_standing() {
    let m = model();
    let p = WalkParams::default().standing();
    let stand = stand_pose(&p, &m).unwrap();
    for k in 0..50 {
        let out = walk_tick(&p, GaitPhase::new(k as f64 / 50.0), 0.01, &m).unwrap();
        for (a, b) in out.targets.angles.iter().zip(stand.angles) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!((out.odometry.x, out.odometry.y, out.odometry.theta), (0.0, 0.0, 0.0));
    }
}

#[test]
fn trims_are_added() {
    let m = model();
    let mut p = WalkParams::default().standing();
    let base = stand_pose(&p, &m).unwrap();
    p.trim_offsets[JointId::LHipPitch.index()] = 0.05;
    let trimmed = stand_pose(&p, &m).unwrap();
    assert!((trimmed.get(JointId::LHipPitch) - base.get(JointId::LHipPitch) - 0.05).abs() < 1e-15);
}

#[test]
fn periodic_in_phase() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let phase: f64 = rng.random_range(0.0..1.0);
        let a = targets_at(&p, phase, &m).unwrap();
        let b = targets_at(&p, phase + 1.0, &m).unwrap();
        for (x, y) in a.angles.iter().zip(b.angles) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn support_foot_stays_down() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let swing = 1.0 - p.support_ratio;
        for k in 0..200 {
            let psi = swing + (1.0 - swing) * k as f64 / 200.0;
            assert!(foot_offset(&p, psi).z.abs() <= 1e-9);
            // The solved leg reproduces the commanded height.
            for side in [Side::Left, Side::Right] {
                let phase = match side {
                    Side::Left => psi,
                    Side::Right => psi - 0.5,
                };
                let target = foot_target(&p, phase, side, &m);
                let q = leg_ik(&target, side, &m).unwrap();
                let f = leg_fk(&q, side, &m).unwrap();
                assert!((f.position.z + p.stand_height_m).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn odometry_sums_to_two_steps() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let n = 100;
        let dt = 1.0 / (p.frequency_hz * n as f64);
        let mut phase = GaitPhase::new(rng.random_range(0.0..1.0));
        let (mut x, mut y, mut th) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let out = walk_tick(&p, phase, dt, &m).unwrap();
            x += out.odometry.x;
            y += out.odometry.y;
            th += out.odometry.theta;
            phase = out.phase;
        }
        assert!((x - 2.0 * p.step_m).abs() < 1e-9);
        assert!((y - 2.0 * p.lateral_m).abs() < 1e-9);
        assert!((th - 2.0 * p.turn_rad).abs() < 1e-9);
    }
}

#[test]
fn joints_move_smoothly() {
    let m = model();
    let limit = kidsize_core::Config::default().walk.max_joint_step_rad;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let mut phase = GaitPhase::default();
        let mut prev = targets_at(&p, 0.0, &m).unwrap();
        let ticks = (100.0 / p.frequency_hz).ceil() as usize;
        for _ in 0..ticks {
            let out = walk_tick(&p, phase, 0.01, &m).unwrap();
            for (a, b) in out.targets.angles.iter().zip(prev.angles) {
                assert!((a - b).abs() < limit, "jump {} with {p:?}", (a - b).abs());
            }
            prev = out.targets;
            phase = out.phase;
        }
    }
}

#[test]
fn legs_mirror_half_a_cycle_apart() {
    use JointId::*;
    let m = model();
    let p = WalkParams {
        step_m: 0.03,
        ..WalkParams::default()
    };
    for k in 0..100 {
        let phase = k as f64 / 100.0;
        let l = foot_target(&p, phase, Side::Left, &m);
        let r = foot_target(&p, phase + 0.5, Side::Right, &m);
        assert!((l.position.x - r.position.x).abs() < 1e-12);
        assert!((l.position.y + r.position.y).abs() < 1e-12);
        assert!((l.position.z - r.position.z).abs() < 1e-12);
        let a = targets_at(&p, phase, &m).unwrap();
        let b = targets_at(&p, phase + 0.5, &m).unwrap();
        for (lj, rj, sign) in [
            (LHipYaw, RHipYaw, -1.0),
            (LHipRoll, RHipRoll, -1.0),
            (LHipPitch, RHipPitch, 1.0),
            (LKnee, RKnee, 1.0),
            (LAnklePitch, RAnklePitch, 1.0),
            (LAnkleRoll, RAnkleRoll, -1.0),
        ] {
            assert!((a.get(lj) - sign * b.get(rj)).abs() < 1e-9, "{lj} at {phase}");
        }
    }
}
