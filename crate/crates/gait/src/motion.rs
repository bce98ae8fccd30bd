//! Scripted keyframe motions.
//!
//! A motion file holds one keyframe per line:
//!
//! ```text
//! # comment
//! 0.00 l_knee=1.06 r_knee=1.06 stiffness=1
//! 0.40 l_knee=2.2
//! ```
//!
//! Times are seconds and strictly increasing. Joints not named on a line keep
//! their value from the previous keyframe (zero on the first). `stiffness`
//! applies to every joint of that keyframe and defaults to 1.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use kidsize_core::{JointModel, JointTargets};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const KICK: &str = "kick";
pub const GET_UP_FRONT: &str = "get_up_front";
pub const GET_UP_BACK: &str = "get_up_back";
pub const BRACE: &str = "brace";

const BUILTIN: [(&str, &str); 4] = [
    (KICK, include_str!("../motions/kick.motion")),
    (GET_UP_FRONT, include_str!("../motions/get_up_front.motion")),
    (GET_UP_BACK, include_str!("../motions/get_up_back.motion")),
    (BRACE, include_str!("../motions/brace.motion")),
];

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("unknown motion `{0}`")]
    Unknown(String),
    #[error("{name}:{line}: {message}")]
    Parse { name: String, line: usize, message: String },
    #[error("motion `{0}` has no keyframes")]
    Empty(String),
    #[error("time {0} must be finite and non-negative")]
    BadTime(f64),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t: f64,
    pub targets: JointTargets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub name: String,
    pub frames: Vec<Keyframe>,
}

impl Motion {
    pub fn parse(name: &str, text: &str) -> Result<Motion, MotionError> {
        let err = |line: usize, message: String| MotionError::Parse {
            name: name.to_string(),
            line,
            message,
        };
        let mut frames: Vec<Keyframe> = Vec::new();
        let mut current = JointTargets::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let t: f64 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .filter(|t: &f64| t.is_finite() && *t >= 0.0)
                .ok_or_else(|| err(i + 1, "expected a non-negative time".into()))?;
            if let Some(prev) = frames.last() {
                if t <= prev.t {
                    return Err(err(i + 1, format!("time {t} does not increase")));
                }
            }
            let mut stiffness = 1.0;
            for f in fields {
                let (k, v) = f
                    .split_once('=')
                    .ok_or_else(|| err(i + 1, format!("expected name=value, found `{f}`")))?;
                let v: f64 = v
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| err(i + 1, format!("bad number for `{k}`")))?;
                if k == "stiffness" {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(err(i + 1, "stiffness must lie in [0, 1]".into()));
                    }
                    stiffness = v;
                } else {
                    current.set_by_name(k, v).map_err(|e| err(i + 1, e.to_string()))?;
                }
            }
            current.stiffness = [stiffness; 20];
            frames.push(Keyframe { t, targets: current });
        }
        if frames.is_empty() {
            return Err(MotionError::Empty(name.to_string()));
        }
        Ok(Motion {
            name: name.to_string(),
            frames,
        })
    }

    pub fn duration(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.t)
    }

    /// Linear interpolation between keyframes; holds the first frame before
    /// its time and the last frame after the end.
    pub fn sample(&self, t: f64) -> Result<JointTargets, MotionError> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(MotionError::BadTime(t));
        }
        let first = &self.frames[0];
        if t <= first.t {
            return Ok(first.targets);
        }
        let k = self.frames.partition_point(|f| f.t <= t);
        if k >= self.frames.len() {
            return Ok(self.frames[k - 1].targets);
        }
        let (a, b) = (&self.frames[k - 1], &self.frames[k]);
        let u = (t - a.t) / (b.t - a.t);
        let mut out = JointTargets::default();
        for i in 0..20 {
            out.angles[i] = a.targets.angles[i] + u * (b.targets.angles[i] - a.targets.angles[i]);
            out.stiffness[i] = a.targets.stiffness[i] + u * (b.targets.stiffness[i] - a.targets.stiffness[i]);
        }
        Ok(out)
    }

    pub fn validate(&self, model: &JointModel) -> Result<(), kidsize_core::JointError> {
        self.frames.iter().try_for_each(|f| f.targets.validate(model))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotionLibrary {
    motions: BTreeMap<String, Motion>,
}

impl MotionLibrary {
    /// The compiled-in motions.
    pub fn builtin() -> Self {
        let motions = BUILTIN
            .iter()
            .map(|(name, text)| {
                let m = Motion::parse(name, text).expect("built-in motion parses");
                (name.to_string(), m)
            })
            .collect();
        Self { motions }
    }

    /// Built-in motions overridden or extended by `*.motion` files in `dir`.
    pub fn with_dir(dir: impl AsRef<Path>) -> Result<Self, MotionError> {
        let mut lib = Self::builtin();
        let dir = dir.as_ref();
        let io = |source| MotionError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "motion"))
            .collect();
        paths.sort();
        for p in paths {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = fs::read_to_string(&p).map_err(|source| MotionError::Io {
                path: p.display().to_string(),
                source,
            })?;
            lib.insert(Motion::parse(&name, &text)?);
        }
        Ok(lib)
    }

    pub fn insert(&mut self, m: Motion) {
        self.motions.insert(m.name.clone(), m);
    }

    pub fn get(&self, name: &str) -> Result<&Motion, MotionError> {
        self.motions
            .get(name)
            .ok_or_else(|| MotionError::Unknown(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.motions.keys().map(String::as_str)
    }
}

/// Joint targets of motion `name` at `t` seconds from its start.
pub fn play_motion(lib: &MotionLibrary, name: &str, t: f64) -> Result<JointTargets, MotionError> {
    lib.get(name)?.sample(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kidsize_core::JointId;

    #[test]
    fn builtins_are_valid() {
        let lib = MotionLibrary::builtin();
        let model = JointModel::new(0.11, 0.11, 0.035).unwrap();
        for name in [KICK, GET_UP_FRONT, GET_UP_BACK, BRACE] {
            lib.get(name).unwrap().validate(&model).unwrap();
        }
    }

    #[test]
    fn brace_is_limp() {
        let lib = MotionLibrary::builtin();
        for t in [0.0, 0.3, 10.0] {
            assert!(play_motion(&lib, BRACE, t).unwrap().is_relaxed());
        }
    }

    #[test]
    fn endpoints_and_midpoint() {
        let lib = MotionLibrary::builtin();
        let m = lib.get(GET_UP_FRONT).unwrap();
        assert_eq!(m.sample(0.0).unwrap(), m.frames[0].targets);
        let (a, b) = (&m.frames[1], &m.frames[2]);
        let mid = m.sample((a.t + b.t) / 2.0).unwrap();
        for i in 0..20 {
            let want = (a.targets.angles[i] + b.targets.angles[i]) / 2.0;
            assert!((mid.angles[i] - want).abs() < 1e-12);
        }
        assert_eq!(m.sample(99.0).unwrap(), m.frames.last().unwrap().targets);
    }

    #[test]
    fn unknown_and_bad_time() {
        let lib = MotionLibrary::builtin();
        assert!(matches!(play_motion(&lib, "dance", 0.0), Err(MotionError::Unknown(_))));
        assert!(matches!(play_motion(&lib, KICK, -1.0), Err(MotionError::BadTime(_))));
    }

    #[test]
    fn parse_errors() {
        let e = Motion::parse("x", "0 l_knee=1\n0 l_knee=2").unwrap_err();
        assert!(matches!(e, MotionError::Parse { line: 2, .. }), "{e}");
        assert!(Motion::parse("x", "0 elbow=1").is_err());
        assert!(Motion::parse("x", "0 stiffness=2").is_err());
        assert!(matches!(Motion::parse("x", "# nothing"), Err(MotionError::Empty(_))));
    }

    #[test]
    fn joints_carry_over() {
        let m = Motion::parse("x", "0 l_knee=1\n1 r_knee=2").unwrap();
        assert_eq!(m.frames[1].targets.get(JointId::LKnee), 1.0);
        assert_eq!(m.frames[1].targets.get(JointId::RKnee), 2.0);
    }
}
