use kidsize_core::config::SimSection;
use kidsize_core::{FieldModel, Point2, Pose2D};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("time step {0} outside (0, 0.05] s")]
    BadDt(f64),
    #[error("command for robot {0} is not finite")]
    NonFinite(usize),
    #[error("{got} commands for {robots} robots")]
    CommandCount { got: usize, robots: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FallDirection {
    Front,
    Back,
}

impl FallDirection {
    fn sign(self) -> f64 {
        match self {
            Self::Front => 1.0,
            Self::Back => -1.0,
        }
    }
}

/// Scripted torso posture. Times are world nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Posture {
    Upright,
    Falling { dir: FallDirection, since_ns: u64 },
    Down { dir: FallDirection },
    GettingUp { dir: FallDirection, since_ns: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2D,
    pub pan: f64,
    pub tilt: f64,
    pub posture: Posture,
    /// Heading rate over the last step, rad/s.
    pub yaw_rate: f64,
}

impl RobotState {
    pub fn new(pose: Pose2D) -> Self {
        Self {
            pose,
            pan: 0.0,
            tilt: 0.0,
            posture: Posture::Upright,
            yaw_rate: 0.0,
        }
    }

    pub fn fallen(&self) -> bool {
        !matches!(self.posture, Posture::Upright)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: Point2,
    pub velocity: Point2,
}

impl BallState {
    pub fn at_rest(x: f64, y: f64) -> Self {
        Self {
            position: Point2::new(x, y),
            velocity: Point2::zeros(),
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalSide {
    /// The goal at +x, attacked by the simulated team.
    Opponent,
    Own,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WorldEvent {
    Kicked { robot: usize, velocity: Point2 },
    Goal(GoalSide),
    OutOfBounds { position: Point2 },
    FallStarted { robot: usize, dir: FallDirection },
    Stood { robot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotCommand {
    /// Commanded displacement in the robot frame since the last step.
    pub odometry: Option<Pose2D>,
    pub kick: bool,
    /// Head pan and tilt, rad.
    pub head: Option<(f64, f64)>,
    pub get_up: bool,
    /// Scripted fall trigger.
    pub fall: Option<FallDirection>,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub robots: Vec<RobotState>,
    pub ball: Option<BallState>,
    pub time_ns: u64,
    pub rng_seed: u64,
    /// Set once the ball leaves the field; the ball then stays put.
    pub ball_out: bool,
    /// Events raised by the most recent step.
    pub events: Vec<WorldEvent>,
    rng: ChaCha8Rng,
}

impl PartialEq for WorldState {
    fn eq(&self, o: &Self) -> bool {
        self.robots == o.robots
            && self.ball == o.ball
            && self.time_ns == o.time_ns
            && self.rng_seed == o.rng_seed
            && self.ball_out == o.ball_out
            && self.events == o.events
    }
}

impl WorldState {
    pub fn new(robots: Vec<RobotState>, ball: Option<BallState>, rng_seed: u64) -> Self {
        Self {
            robots,
            ball,
            time_ns: 0,
            rng_seed,
            ball_out: false,
            events: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        }
    }

    pub fn time_s(&self) -> f64 {
        self.time_ns as f64 * 1e-9
    }

    /// Signed torso pitch of robot `i` (forward positive) and its rate.
    pub fn torso_pitch(&self, i: usize, cfg: &SimSection) -> (f64, f64) {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let elapsed = |since: u64| self.time_ns.saturating_sub(since) as f64 * 1e-9;
        match self.robots[i].posture {
            Posture::Upright => (0.0, 0.0),
            Posture::Falling { dir, since_ns } => {
                let rate = half_pi / cfg.fall_duration_s;
                let p = (elapsed(since_ns) * rate).min(half_pi);
                (dir.sign() * p, dir.sign() * rate)
            }
            Posture::Down { dir } => (dir.sign() * half_pi, 0.0),
            Posture::GettingUp { dir, since_ns } => {
                let rate = half_pi / cfg.getup_duration_s;
                let p = (half_pi - elapsed(since_ns) * rate).max(0.0);
                (dir.sign() * p, -dir.sign() * rate)
            }
        }
    }
}

/// Ball travel over `dt` under uniform deceleration `a`, returning the new
/// position and velocity. Exact, including stopping inside the step.
pub fn roll_ball(b: &BallState, a: f64, dt: f64) -> BallState {
    let v = b.speed();
    if v == 0.0 {
        return *b;
    }
    let dir = b.velocity / v;
    let (travel, v1) = if a <= 0.0 {
        (v * dt, v)
    } else if v <= a * dt {
        (v * v / (2.0 * a), 0.0)
    } else {
        (v * dt - 0.5 * a * dt * dt, v - a * dt)
    };
    BallState {
        position: b.position + dir * travel,
        velocity: dir * v1,
    }
}

fn finite_cmd(c: &RobotCommand) -> bool {
    c.odometry.is_none_or(|o| o.is_finite()) && c.head.is_none_or(|(p, t)| p.is_finite() && t.is_finite())
}

pub fn step_world(
    w: &WorldState,
    commands: &[RobotCommand],
    dt: f64,
    field: &FieldModel,
    cfg: &SimSection,
) -> Result<WorldState, SimError> {
    if !(dt > 0.0 && dt <= 0.05) {
        return Err(SimError::BadDt(dt));
    }
    if commands.len() > w.robots.len() {
        return Err(SimError::CommandCount {
            got: commands.len(),
            robots: w.robots.len(),
        });
    }
    if let Some(i) = commands.iter().position(|c| !finite_cmd(c)) {
        return Err(SimError::NonFinite(i));
    }
    let mut n = w.clone();
    n.events.clear();
    let dt_ns = (dt * 1e9).round() as u64;
    n.time_ns = w.time_ns + dt_ns;
    let nxy = Normal::new(0.0, cfg.odom_noise_xy * dt.sqrt()).expect("finite sigma");
    let nth = Normal::new(0.0, cfg.odom_noise_theta * dt.sqrt()).expect("finite sigma");
    let idle = RobotCommand::default();

    for (i, r) in n.robots.iter_mut().enumerate() {
        let c = commands.get(i).unwrap_or(&idle);
        r.yaw_rate = 0.0;
        if let Some((pan, tilt)) = c.head {
            r.pan = pan;
            r.tilt = tilt;
        }
        match r.posture {
            Posture::Falling { dir, since_ns } => {
                if (n.time_ns - since_ns) as f64 * 1e-9 >= cfg.fall_duration_s {
                    r.posture = Posture::Down { dir };
                }
            }
            Posture::Down { dir } if c.get_up => {
                r.posture = Posture::GettingUp {
                    dir,
                    since_ns: w.time_ns,
                };
            }
            Posture::GettingUp { since_ns, .. } if (n.time_ns - since_ns) as f64 * 1e-9 >= cfg.getup_duration_s => {
                r.posture = Posture::Upright;
                n.events.push(WorldEvent::Stood { robot: i });
            }
            _ => {}
        }
        if let (Some(dir), Posture::Upright) = (c.fall, r.posture) {
            r.posture = Posture::Falling {
                dir,
                since_ns: w.time_ns,
            };
            n.events.push(WorldEvent::FallStarted { robot: i, dir });
        }
        if r.posture != Posture::Upright {
            continue;
        }
        if let Some(o) = c.odometry {
            if o.x != 0.0 || o.y != 0.0 || o.theta != 0.0 {
                let noisy = Pose2D::new(
                    o.x + nxy.sample(&mut n.rng),
                    o.y + nxy.sample(&mut n.rng),
                    o.theta + nth.sample(&mut n.rng),
                );
                let before = r.pose.theta;
                let mut p = r.pose.compose(&noisy);
                let hx = field.length_m / 2.0 + field.border_m;
                let hy = field.width_m / 2.0 + field.border_m;
                p.x = p.x.clamp(-hx, hx);
                p.y = p.y.clamp(-hy, hy);
                r.yaw_rate = kidsize_core::wrap_angle(p.theta - before) / dt;
                r.pose = p;
            }
        }
    }

    if let Some(ball) = n.ball {
        let mut b = ball;
        if !n.ball_out {
            for (i, r) in n.robots.iter().enumerate() {
                let c = commands.get(i).unwrap_or(&idle);
                if c.kick
                    && r.posture == Posture::Upright
                    && (b.position - r.pose.position()).norm() <= cfg.kick_range_m
                {
                    let (s, co) = r.pose.theta.sin_cos();
                    b.velocity = Point2::new(co, s) * cfg.kick_speed;
                    n.events.push(WorldEvent::Kicked {
                        robot: i,
                        velocity: b.velocity,
                    });
                }
            }
            b = roll_ball(&b, cfg.ball_friction, dt);
            let hx = field.length_m / 2.0;
            let hy = field.width_m / 2.0;
            if b.position.x.abs() > hx || b.position.y.abs() > hy {
                let inside_posts = b.position.y.abs() < field.goal_width_m / 2.0;
                if b.position.x.abs() > hx && inside_posts {
                    let side = if b.position.x > 0.0 {
                        GoalSide::Opponent
                    } else {
                        GoalSide::Own
                    };
                    n.events.push(WorldEvent::Goal(side));
                } else {
                    n.events.push(WorldEvent::OutOfBounds { position: b.position });
                }
                b.position = Point2::new(b.position.x.clamp(-hx, hx), b.position.y.clamp(-hy, hy));
                b.velocity = Point2::zeros();
                n.ball_out = true;
            }
        }
        n.ball = Some(b);
    }
    Ok(n)
}

/// Per-call RNG derived from the world seed, so sensor synthesis stays a
/// pure function of the state.
pub(crate) fn derived_rng(w: &WorldState, robot: usize, salt: u64) -> ChaCha8Rng {
    let mut h = w.rng_seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [w.time_ns, robot as u64, salt] {
        h = (h ^ v).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 31;
    }
    ChaCha8Rng::seed_from_u64(h)
}
