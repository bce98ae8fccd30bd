//! Flat `key = value` configuration.
//!
//! One assignment per line, `#` starts a comment, keys are `section.name`.
//! Every key has a default, unknown keys are rejected, and values are range
//! checked as they are read. [`Config::to_text`] writes every key back in
//! schema order, so a dumped file reloads to an identical `Config`.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue { line: usize, key: String, message: String },
    #[error("line {line}: `{key}` out of range: {message}")]
    OutOfRange { line: usize, key: String, message: String },
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),
}

/// Failure to assign a single key, before a line number is attached.
#[derive(Debug, Clone, PartialEq)]
pub enum SetError {
    Unknown,
    Invalid(String),
    Range(&'static str),
}

impl SetError {
    pub fn at(self, line: usize, key: &str) -> ConfigError {
        let key = key.to_string();
        match self {
            SetError::Unknown => ConfigError::UnknownKey { line, key },
            SetError::Invalid(message) => ConfigError::InvalidValue { line, key, message },
            SetError::Range(m) => ConfigError::OutOfRange {
                line,
                key,
                message: m.to_string(),
            },
        }
    }
}

pub trait ConfigValue: Sized {
    fn parse_value(raw: &str) -> Result<Self, String>;
    fn format_value(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(raw: &str) -> Result<Self, String> {
        let v: f64 = raw.parse().map_err(|_| format!("`{raw}` is not a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{raw}` is not finite"))
        }
    }
    fn format_value(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! int_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(raw: &str) -> Result<Self, String> {
                raw.parse().map_err(|_| format!("`{raw}` is not a valid {}", stringify!($t)))
            }
            fn format_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
int_value!(u16, u32, u64);

impl ConfigValue for bool {
    fn parse_value(raw: &str) -> Result<Self, String> {
        match raw {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("`{raw}` is not `true` or `false`")),
        }
    }
    fn format_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for String {
    fn parse_value(raw: &str) -> Result<Self, String> {
        Ok(raw.to_string())
    }
    fn format_value(&self) -> String {
        self.clone()
    }
}

impl ConfigValue for Vec<u32> {
    fn parse_value(raw: &str) -> Result<Self, String> {
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| format!("`{raw}` is not a comma-separated list of integers"))
            })
            .collect()
    }
    fn format_value(&self) -> String {
        self.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

mod checks {
    pub type Check = Result<(), &'static str>;

    pub fn any<T>(_: &T) -> Check {
        Ok(())
    }

    pub fn positive<T: PartialOrd + From<u8>>(v: &T) -> Check {
        if *v > T::from(0) {
            Ok(())
        } else {
            Err("must be positive")
        }
    }

    pub fn non_negative<T: PartialOrd + From<u8>>(v: &T) -> Check {
        if *v >= T::from(0) {
            Ok(())
        } else {
            Err("must not be negative")
        }
    }

    pub fn fraction(v: &f64) -> Check {
        if (0.0..=1.0).contains(v) {
            Ok(())
        } else {
            Err("must lie in [0, 1]")
        }
    }

    pub fn degrees(v: &f64) -> Check {
        if (0.0..=360.0).contains(v) {
            Ok(())
        } else {
            Err("must lie in [0, 360]")
        }
    }

    pub fn support_ratio(v: &f64) -> Check {
        if (0.5..1.0).contains(v) {
            Ok(())
        } else {
            Err("must lie in [0.5, 1)")
        }
    }

    pub fn fov(v: &f64) -> Check {
        if *v > 0.0 && *v < std::f64::consts::PI {
            Ok(())
        } else {
            Err("must lie in (0, pi)")
        }
    }

    pub fn even_positive(v: &u32) -> Check {
        if *v > 0 && v.is_multiple_of(2) {
            Ok(())
        } else {
            Err("must be a positive even number")
        }
    }

    #[allow(clippy::ptr_arg)] // checks are called with `&FieldType`
    pub fn scales(v: &Vec<u32>) -> Check {
        if !v.is_empty() && v.iter().all(|&s| s >= 2) {
            Ok(())
        } else {
            Err("must be a non-empty list of window sizes >= 2")
        }
    }
}

macro_rules! config_schema {
    ($(
        $(#[$smeta:meta])*
        $section:ident : $Section:ident {
            $( $(#[$fmeta:meta])* $field:ident : $ty:ty = $default:expr ; $check:ident )*
        }
    )*) => {
        $(
            $(#[$smeta])*
            #[derive(Debug, Clone, PartialEq)]
            pub struct $Section {
                $( $(#[$fmeta])* pub $field: $ty, )*
            }

            impl Default for $Section {
                fn default() -> Self {
                    Self { $( $field: $default, )* }
                }
            }
        )*

        /// Complete runtime configuration, one struct per key section.
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct Config {
            $( pub $section: $Section, )*
        }

        impl Config {
            /// Every accepted key in schema order.
            pub const KEYS: &'static [&'static str] = &[
                $( $( concat!(stringify!($section), ".", stringify!($field)), )* )*
            ];

            /// Assigns one key from its textual value, with range checking.
            pub fn set(&mut self, key: &str, raw: &str) -> Result<(), SetError> {
                match key {
                    $( $(
                        concat!(stringify!($section), ".", stringify!($field)) => {
                            let v: $ty = ConfigValue::parse_value(raw).map_err(SetError::Invalid)?;
                            checks::$check(&v).map_err(SetError::Range)?;
                            self.$section.$field = v;
                            Ok(())
                        }
                    )* )*
                    _ => Err(SetError::Unknown),
                }
            }

            /// Textual value of one key.
            pub fn get(&self, key: &str) -> Option<String> {
                match key {
                    $( $(
                        concat!(stringify!($section), ".", stringify!($field)) =>
                            Some(ConfigValue::format_value(&self.$section.$field)),
                    )* )*
                    _ => None,
                }
            }
        }
    };
}

config_schema! {
    field: FieldSection {
        length_m: f64 = 9.0; positive
        width_m: f64 = 6.0; positive
        line_width_m: f64 = 0.05; positive
        centre_circle_radius_m: f64 = 0.75; positive
        goal_width_m: f64 = 2.6; positive
        goal_area_depth_m: f64 = 1.0; positive
        goal_area_width_m: f64 = 3.0; positive
        border_m: f64 = 0.7; non_negative
    }

    robot: RobotSection {
        thigh_m: f64 = 0.11; positive
        shank_m: f64 = 0.11; positive
        hip_offset_m: f64 = 0.035; positive
    }

    camera: CameraSection {
        fov_h_rad: f64 = 1.05; fov
        width: u32 = 640; even_positive
        height: u32 = 480; positive
        height_m: f64 = 0.45; positive
        mount_pitch_rad: f64 = 0.35; any
    }

    vision: VisionSection {
        green_h_min: f64 = 70.0; degrees
        green_h_max: f64 = 160.0; degrees
        green_s_min: f64 = 0.25; fraction
        green_v_min: f64 = 0.15; fraction
        white_s_max: f64 = 0.25; fraction
        white_v_min: f64 = 0.6; fraction
        min_green_run: u32 = 6; positive
        window_scales: Vec<u32> = vec![16, 32, 64]; scales
        density_min: f64 = 0.35; fraction
        count_min: u32 = 30; any
        count_max: u32 = 40000; positive
        ratio_min: f64 = 0.65; fraction
        ratio_max: f64 = 0.9; fraction
        area_min: u32 = 40; any
        area_max: u32 = 50000; positive
        track_radius_px: f64 = 80.0; positive
        hough_threshold: u32 = 25; positive
        hough_max_gap_px: u32 = 6; any
        hough_min_len_px: u32 = 20; positive
        hough_theta_bins: u32 = 180; positive
        hough_seed: u64 = 1; any
        merge_angle_rad: f64 = 0.05; positive
        merge_gap_px: f64 = 20.0; non_negative
        merge_dist_px: f64 = 6.0; non_negative
        min_line_len_px: f64 = 40.0; positive
        circle_min_support: u32 = 6; positive
        circle_tol_px: f64 = 3.0; positive
        circle_min_radius_px: f64 = 8.0; positive
        circle_max_radius_px: f64 = 600.0; positive
        use_horizon: bool = true; any
    }

    walk: WalkSection {
        frequency_hz: f64 = 1.5; positive
        step_m: f64 = 0.0; any
        lateral_m: f64 = 0.0; any
        turn_rad: f64 = 0.0; any
        rise_m: f64 = 0.02; non_negative
        swing_m: f64 = 0.01; non_negative
        support_ratio: f64 = 0.6; support_ratio
        stand_height_m: f64 = 0.19; positive
        max_step_m: f64 = 0.04; non_negative
        max_lateral_m: f64 = 0.02; non_negative
        max_turn_rad: f64 = 0.25; non_negative
        max_joint_step_rad: f64 = 0.2; positive
    }

    balance: BalanceSection {
        filter_alpha: f64 = 0.98; fraction
        pitch_gain: f64 = 0.5; non_negative
        roll_gain: f64 = 0.5; non_negative
        max_trim_rad: f64 = 0.15; non_negative
    }

    ekf: EkfSection {
        /// Process noise densities per second: x, y (m^2/s), theta (rad^2/s).
        q_x: f64 = 0.01; non_negative
        q_y: f64 = 0.01; non_negative
        q_theta: f64 = 0.02; non_negative
        heading_var: f64 = 0.05; positive
        line_dist_var: f64 = 0.01; positive
        line_angle_var: f64 = 0.02; positive
        assoc_dist_m: f64 = 0.5; positive
        assoc_angle_rad: f64 = 0.3; positive
        assoc_overlap_m: f64 = 0.5; non_negative
        conf_decay: f64 = 0.05; non_negative
        conf_match_gain: f64 = 0.05; fraction
        kickoff_var_xy: f64 = 0.0025; positive
        kickoff_var_theta: f64 = 0.001; positive
        initial_var_xy: f64 = 1.0; positive
        initial_var_theta: f64 = 0.5; positive
        max_line_range_m: f64 = 4.0; positive
    }

    team: TeamSection {
        max_report_age_s: f64 = 2.0; positive
        flip_ratio: f64 = 2.0; positive
        flip_penalty: f64 = 0.3; fraction
        ball_sigma_m: f64 = 0.5; positive
        blend: f64 = 0.2; fraction
    }

    ball: BallSection {
        accel_var: f64 = 0.5; non_negative
        meas_var: f64 = 0.01; positive
        radius_m: f64 = 0.075; positive
    }

    fall: FallSection {
        correct_rad: f64 = 0.25; positive
        brace_rad: f64 = 0.7; positive
        brace_rate: f64 = 3.0; positive
        settle_s: f64 = 0.5; non_negative
        stable_s: f64 = 0.5; non_negative
        filter_alpha: f64 = 0.98; fraction
        rest_accel_tol: f64 = 1.0; positive
        rest_gyro: f64 = 0.3; positive
    }

    behaviour: BehaviourSection {
        found_after_s: f64 = 1.0; non_negative
        lost_after_s: f64 = 2.5; non_negative
        near_dist_m: f64 = 0.35; positive
        kick_dist_m: f64 = 0.2; positive
        align_tol_rad: f64 = 0.2; positive
        kick_lateral_m: f64 = 0.06; positive
        goal_conf_min: f64 = 0.3; fraction
        turn_gain: f64 = 0.3; non_negative
        step_gain: f64 = 0.15; non_negative
        lateral_gain: f64 = 0.2; non_negative
        search_turn_rad: f64 = 0.15; non_negative
    }

    net: NetSection {
        bind_addr: String = String::from("0.0.0.0"); any
        team_port: u16 = 3737; positive
        team_dest_addr: String = String::from("255.255.255.255"); any
        team_dest_port: u16 = 3737; positive
        gc_port: u16 = 3838; positive
        team_hz: f64 = 3.0; positive
        team_number: u32 = 1; any
        robot_id: u32 = 1; any
    }

    sim: SimSection {
        ball_friction: f64 = 0.5; non_negative
        kick_range_m: f64 = 0.3; positive
        kick_speed: f64 = 2.0; non_negative
        odom_noise_xy: f64 = 0.01; non_negative
        odom_noise_theta: f64 = 0.02; non_negative
        accel_noise: f64 = 0.05; non_negative
        gyro_noise: f64 = 0.01; non_negative
        brightness_jitter: f64 = 0.15; fraction
        hue_jitter_deg: f64 = 3.0; non_negative
        fall_duration_s: f64 = 0.4; positive
        getup_duration_s: f64 = 2.0; positive
        world_hz: f64 = 100.0; positive
    }

    agent: AgentSection {
        vision_hz: f64 = 30.0; positive
        hardware_hz: f64 = 100.0; positive
        vision_budget_ms: f64 = 33.0; positive
        kickoff_x_m: f64 = -0.5; any
        kickoff_y_m: f64 = 0.0; any
        kickoff_theta_rad: f64 = 0.0; any
        kick_contact_s: f64 = 0.45; non_negative
        motions_dir: String = String::new(); any
    }
}

impl Config {
    /// Parses configuration text; keys not mentioned keep their defaults.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies every assignment in `text` on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let Some((key, value)) = split_assignment(raw, line)? else {
                continue;
            };
            self.set(key, value).map_err(|e| e.at(line, key))?;
        }
        self.validate()
    }

    /// Cross-key consistency checks that single-key ranges cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Inconsistent(m.to_string()));
        let v = &self.vision;
        if v.green_h_min > v.green_h_max {
            return bad("vision.green_h_min exceeds vision.green_h_max");
        }
        if v.ratio_min > v.ratio_max {
            return bad("vision.ratio_min exceeds vision.ratio_max");
        }
        if v.count_min > v.count_max {
            return bad("vision.count_min exceeds vision.count_max");
        }
        if v.area_min > v.area_max {
            return bad("vision.area_min exceeds vision.area_max");
        }
        if v.circle_min_radius_px >= v.circle_max_radius_px {
            return bad("vision.circle_min_radius_px must be below vision.circle_max_radius_px");
        }
        if self.fall.correct_rad >= self.fall.brace_rad {
            return bad("fall.correct_rad must be below fall.brace_rad");
        }
        if self.behaviour.found_after_s > self.behaviour.lost_after_s {
            return bad("behaviour.found_after_s exceeds behaviour.lost_after_s");
        }
        if self.behaviour.kick_dist_m > self.behaviour.near_dist_m {
            return bad("behaviour.kick_dist_m exceeds behaviour.near_dist_m");
        }
        if self.walk.stand_height_m >= self.robot.thigh_m + self.robot.shank_m {
            return bad("walk.stand_height_m must be below the leg length");
        }
        crate::field::FieldModel::from_config(self)
            .map(|_| ())
            .map_err(|e| ConfigError::Inconsistent(e.to_string()))
    }

    /// Writes every key, in schema order, as reloadable text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let value = self.get(key).expect("schema key");
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Splits one line into `(key, value)`; `None` for blank and comment lines.
pub fn split_assignment(raw: &str, line: usize) -> Result<Option<(&str, &str)>, ConfigError> {
    let content = match raw.find('#') {
        Some(i) => &raw[..i],
        None => raw,
    }
    .trim();
    if content.is_empty() {
        return Ok(None);
    }
    let (key, value) = content.split_once('=').ok_or(ConfigError::Malformed { line })?;
    let key = key.trim();
    let value = value.trim();
    if key.is_empty() || key.contains(char::is_whitespace) {
        return Err(ConfigError::Malformed { line });
    }
    Ok(Some((key, value)))
}

/// Reads a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Config::parse(&text)
}
