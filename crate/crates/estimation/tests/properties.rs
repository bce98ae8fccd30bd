use kidsize_core::config::EkfSection;
use kidsize_core::{wrap_angle, Config, FieldModel, Point2, Pose2D, Segment2};
use kidsize_estimation::ekf::{
    line_measurement, motion_jacobian, motion_model, observed_line, point_measurement, LineModel,
};
use kidsize_estimation::{
    ekf_predict, ekf_update_heading, ekf_update_lines, ekf_update_point, fuse_team, BeliefState, TeammateReport,
};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn field() -> FieldModel {
    FieldModel::from_config(&Config::default()).unwrap()
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose2D {
    Pose2D::new(
        rng.random_range(-4.0..4.0),
        rng.random_range(-2.5..2.5),
        rng.random_range(-3.1..3.1),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn motion_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-6;
    for _ in 0..100 {
        let x = random_pose(&mut rng);
        let u = Pose2D::new(
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.3..0.3),
        );
        let j = motion_jacobian(&x, &u);
        for col in 0..3 {
            let mut e = Vector3::zeros();
            e[col] = h;
            let plus = motion_model(
                &Pose2D {
                    x: x.x + e[0],
                    y: x.y + e[1],
                    theta: x.theta + e[2],
                },
                &u,
            );
            let minus = motion_model(
                &Pose2D {
                    x: x.x - e[0],
                    y: x.y - e[1],
                    theta: x.theta - e[2],
                },
                &u,
            );
            let d = [
                (plus.x - minus.x) / (2.0 * h),
                (plus.y - minus.y) / (2.0 * h),
                wrap_angle(plus.theta - minus.theta) / (2.0 * h),
            ];
            for row in 0..3 {
                assert!(
                    close(j[(row, col)], d[row]),
                    "F[{row},{col}] {} vs {}",
                    j[(row, col)],
                    d[row]
                );
            }
        }
    }
}

#[test]
fn measurement_jacobians_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lines: Vec<LineModel> = field()
        .line_segments
        .iter()
        .map(|s| LineModel::from_segment(*s))
        .collect();
    let h = 1e-6;
    let mut checked = 0;
    while checked < 100 {
        let x = random_pose(&mut rng);
        let line = &lines[rng.random_range(0..lines.len())];
        let (z0, jac) = line_measurement(&x, line);
        if z0[0] < 0.05 {
            continue;
        }
        let landmark = Point2::new(rng.random_range(-4.5..4.5), rng.random_range(-3.0..3.0));
        let (_, pj) = point_measurement(&x, &landmark);
        for col in 0..3 {
            let mut e = [0.0; 3];
            e[col] = h;
            let xp = Pose2D {
                x: x.x + e[0],
                y: x.y + e[1],
                theta: x.theta + e[2],
            };
            let xm = Pose2D {
                x: x.x - e[0],
                y: x.y - e[1],
                theta: x.theta - e[2],
            };
            let (zp, _) = line_measurement(&xp, line);
            let (zm, _) = line_measurement(&xm, line);
            let dd = (zp[0] - zm[0]) / (2.0 * h);
            let da = wrap_angle(zp[1] - zm[1]) / (2.0 * h);
            assert!(close(jac[(0, col)], dd));
            assert!(close(jac[(1, col)], da));
            let (pp, _) = point_measurement(&xp, &landmark);
            let (pm, _) = point_measurement(&xm, &landmark);
            for row in 0..2 {
                assert!(close(pj[(row, col)], (pp[row] - pm[row]) / (2.0 * h)));
            }
        }
        // Heading measurement is θ itself: H = (0, 0, 1).
        checked += 1;
    }
}

#[test]
fn observed_line_inverts_prediction() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = field();
    for _ in 0..200 {
        let pose = random_pose(&mut rng);
        let seg = f.line_segments[rng.random_range(0..f.line_segments.len())];
        let model = LineModel::from_segment(seg);
        let (z, _) = line_measurement(&pose, &model);
        if z[0] < 0.05 {
            continue;
        }
        let local = Segment2::new(pose.to_local(&seg.a), pose.to_local(&seg.b));
        let o = observed_line(&local).unwrap();
        assert!((o[0] - z[0]).abs() < 1e-9);
        assert!(wrap_angle(o[1] - z[1]).abs() < 1e-9);
    }
}

fn ekf() -> EkfSection {
    Config::default().ekf
}

#[test]
fn empty_and_far_observations_leave_belief() {
    let b = BeliefState::new(Pose2D::new(-1.0, 0.5, 0.1), 0.04, 0.01, 0.5);
    assert_eq!(ekf_update_lines(&b, &[], &field(), &ekf()), b);
    // Off the carpet, far from every model line.
    let far = Segment2::new(Point2::new(5.0, 5.0), Point2::new(5.5, 5.6));
    let mut c = ekf();
    c.max_line_range_m = 100.0;
    assert_eq!(ekf_update_lines(&b, &[far], &field(), &c), b);
}

#[test]
fn true_centre_line_observation() {
    let truth = Pose2D::new(-1.2, 0.4, 0.15);
    let b = BeliefState::new(truth, 0.04, 0.01, 0.5);
    let centre = Segment2::new(Point2::new(0.0, -1.0), Point2::new(0.0, 1.5));
    let local = Segment2::new(truth.to_local(&centre.a), truth.to_local(&centre.b));
    let out = ekf_update_lines(&b, &[local], &field(), &ekf());
    assert!((out.mean.position() - truth.position()).norm() < 1e-6);
    assert!(wrap_angle(out.mean.theta - truth.theta).abs() < 1e-6);
    assert!(out.cov.trace() < b.cov.trace());
    assert!(out.confidence > b.confidence);
}

#[test]
fn covariance_stays_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = field();
    let cfg = Config::default();
    let mut b = BeliefState::initial(Pose2D::new(-1.0, 0.0, 0.0), &cfg.ekf);
    for step in 0..10_000 {
        let before = b.cov.trace();
        let op = rng.random_range(0..6);
        b = match op {
            0 => {
                let u = Pose2D::new(
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.3..0.3),
                );
                ekf_predict(&b, &u, rng.random_range(0.001..0.1), &cfg.ekf).unwrap()
            }
            1 => ekf_update_heading(&b, rng.random_range(-3.2..3.2), &cfg.ekf),
            2 => {
                let seg = f.line_segments[rng.random_range(0..f.line_segments.len())];
                let jitter = random_pose(&mut rng);
                let pose = Pose2D::new(
                    b.mean.x + jitter.x * 0.05,
                    b.mean.y + jitter.y * 0.05,
                    b.mean.theta + jitter.theta * 0.05,
                );
                let local = Segment2::new(pose.to_local(&seg.a), pose.to_local(&seg.b));
                ekf_update_lines(&b, &[local], &f, &cfg.ekf)
            }
            3 => {
                let lm = f.goal_posts[rng.random_range(0..4)];
                let obs = b.mean.to_local(&lm) + Point2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                ekf_update_point(&b, &obs, &lm, 0.05)
            }
            4 => b.mirrored(),
            _ => {
                let r = TeammateReport {
                    robot_id: 2,
                    pose: random_pose(&mut rng),
                    confidence: rng.random_range(0.0..1.0),
                    ball_field: Some(Point2::new(rng.random_range(-4.0..4.0), rng.random_range(-3.0..3.0))),
                    age_s: 0.2,
                };
                fuse_team(&b, Some(&Point2::new(1.0, 0.0)), &[r], &cfg.team)
            }
        };
        assert!(b.is_valid(), "step {step} op {op}: {b:?}");
        if (1..=3).contains(&op) {
            assert!(
                b.cov.trace() <= before * (1.0 + 1e-12),
                "update grew trace at step {step}"
            );
        }
        // Keep the state bounded so the walk stays on the field.
        if b.mean.position().norm() > 6.0 || b.cov.trace() > 50.0 {
            b = BeliefState::initial(Pose2D::new(0.0, 0.0, 0.0), &cfg.ekf);
        }
    }
}

/// Systematic-resampling particle filter under the EKF's own generative model.
struct ParticleFilter {
    particles: Vec<Vector3<f64>>,
    weights: Vec<f64>,
}

impl ParticleFilter {
    fn new(n: usize, b: &BeliefState, rng: &mut ChaCha8Rng) -> Self {
        let chol = b.cov.cholesky().unwrap().l();
        let std = Normal::new(0.0, 1.0).unwrap();
        let m = Vector3::new(b.mean.x, b.mean.y, b.mean.theta);
        let particles = (0..n)
            .map(|_| m + chol * Vector3::new(std.sample(rng), std.sample(rng), std.sample(rng)))
            .collect();
        Self {
            particles,
            weights: vec![1.0 / n as f64; n],
        }
    }

    fn predict(&mut self, u: &Pose2D, q: &Matrix3<f64>, rng: &mut ChaCha8Rng) {
        let sd = [q[(0, 0)].sqrt(), q[(1, 1)].sqrt(), q[(2, 2)].sqrt()];
        let std = Normal::new(0.0, 1.0).unwrap();
        for p in &mut self.particles {
            let (s, c) = p[2].sin_cos();
            *p = Vector3::new(
                p[0] + c * u.x - s * u.y + sd[0] * std.sample(rng),
                p[1] + s * u.x + c * u.y + sd[1] * std.sample(rng),
                p[2] + u.theta + sd[2] * std.sample(rng),
            );
        }
    }

    fn weigh(&mut self, loglik: impl Fn(&Vector3<f64>) -> f64, rng: &mut ChaCha8Rng) {
        let logs: Vec<f64> = self.particles.iter().map(&loglik).collect();
        let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (w, l) in self.weights.iter_mut().zip(&logs) {
            *w *= (l - mx).exp();
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
        let ess = 1.0 / self.weights.iter().map(|w| w * w).sum::<f64>();
        if ess < self.particles.len() as f64 / 2.0 {
            let n = self.particles.len();
            let start: f64 = rng.random_range(0.0..1.0 / n as f64);
            let mut out = Vec::with_capacity(n);
            let mut cum = self.weights[0];
            let mut i = 0;
            for k in 0..n {
                let target = start + k as f64 / n as f64;
                while cum < target && i + 1 < n {
                    i += 1;
                    cum += self.weights[i];
                }
                out.push(self.particles[i]);
            }
            self.particles = out;
            self.weights = vec![1.0 / n as f64; n];
        }
    }

    fn mean(&self) -> Vector3<f64> {
        let (mut x, mut y, mut s, mut c) = (0.0, 0.0, 0.0, 0.0);
        for (p, w) in self.particles.iter().zip(&self.weights) {
            x += w * p[0];
            y += w * p[1];
            s += w * p[2].sin();
            c += w * p[2].cos();
        }
        Vector3::new(x, y, s.atan2(c))
    }
}

#[test]
fn ekf_tracks_particle_filter() {
    let cfg = Config::default().ekf;
    let f = field();
    let centre = LineModel::from_segment(f.line_segments[4]);
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let dt = 0.1;
    let q = Matrix3::from_diagonal(&Vector3::new(cfg.q_x, cfg.q_y, cfg.q_theta)) * dt;
    let noise = |sd: f64, rng: &mut ChaCha8Rng| Normal::new(0.0, sd).unwrap().sample(rng);

    // Far enough from the centre line that the observed distance stays positive.
    let mut truth = Pose2D::new(-2.0, 0.4, 0.3);
    let mut ekf_b = BeliefState::new(truth, 0.02, 0.01, 0.5);
    let mut pf = ParticleFilter::new(100_000, &ekf_b, &mut rng);
    let u = Pose2D::new(0.05, 0.0, 0.04);
    for step in 0..30 {
        truth = Pose2D::new(
            truth.compose(&u).x + noise(q[(0, 0)].sqrt(), &mut rng),
            truth.compose(&u).y + noise(q[(1, 1)].sqrt(), &mut rng),
            truth.compose(&u).theta + noise(q[(2, 2)].sqrt(), &mut rng),
        );
        ekf_b = ekf_predict(&ekf_b, &u, dt, &cfg).unwrap();
        pf.predict(&u, &q, &mut rng);

        let zh = truth.theta + noise(cfg.heading_var.sqrt(), &mut rng);
        ekf_b = ekf_update_heading(&ekf_b, zh, &cfg);
        let rh = cfg.heading_var;
        pf.weigh(|p| -wrap_angle(zh - p[2]).powi(2) / (2.0 * rh), &mut rng);

        let (zt, _) = line_measurement(&truth, &centre);
        let zd = zt[0] + noise(cfg.line_dist_var.sqrt(), &mut rng);
        let za = zt[1] + noise(cfg.line_angle_var.sqrt(), &mut rng);
        let foot = Point2::new(za.cos(), za.sin()) * zd;
        let along = Point2::new(-za.sin(), za.cos());
        let seg = Segment2::new(foot - along * 0.6, foot + along * 0.6);
        ekf_b = ekf_update_lines(&ekf_b, &[seg], &f, &cfg);
        let (rd, ra) = (cfg.line_dist_var, cfg.line_angle_var);
        pf.weigh(
            |p| {
                let (z, _) = line_measurement(
                    &Pose2D {
                        x: p[0],
                        y: p[1],
                        theta: p[2],
                    },
                    &centre,
                );
                -(zd - z[0]).powi(2) / (2.0 * rd) - wrap_angle(za - z[1]).powi(2) / (2.0 * ra)
            },
            &mut rng,
        );

        let m = pf.mean();
        let sd = ekf_b.std_dev();
        let diff = [
            ekf_b.mean.x - m[0],
            ekf_b.mean.y - m[1],
            wrap_angle(ekf_b.mean.theta - m[2]),
        ];
        for k in 0..3 {
            assert!(
                diff[k].abs() <= 3.0 * sd[k],
                "step {step} axis {k}: {} vs 3σ {}",
                diff[k],
                3.0 * sd[k]
            );
        }
    }
}
