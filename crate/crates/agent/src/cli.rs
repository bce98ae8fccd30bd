//! The `kidsize` command line.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kidsize_core::config::{load_config, split_assignment};
use kidsize_core::{Config, FieldModel, JointId, JointModel, Pose2D};
use kidsize_estimation::replay::replay;
use kidsize_estimation::BeliefState;
use kidsize_gait::walk::targets_at;
use kidsize_gait::WalkParams;
use kidsize_simworld::Scenario;
use kidsize_vision::{annotate, run_pipeline, write_ppm, CameraFrame};
use serde::Serialize;

use crate::corpus::{sample_frames, write_corpus};
use crate::sim_match::{run_match_with, MatchOptions};

#[derive(Debug, Parser)]
#[command(name = "kidsize", version, about = "Kid-size humanoid soccer agent tools")]
struct Cli {
    /// Configuration file; falls back to $ES_CONFIG, then built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vision pipeline tools.
    #[command(subcommand)]
    Vision(VisionCmd),
    /// Walk engine tools.
    #[command(subcommand)]
    Gait(GaitCmd),
    /// Simulated matches and synthetic data.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Localisation tools.
    #[command(subcommand)]
    Localise(LocaliseCmd),
    /// A single agent against the simulator.
    #[command(subcommand)]
    Agent(AgentCmd),
}

#[derive(Debug, Subcommand)]
enum VisionCmd {
    /// Runs the pipeline on every `.yuyv` frame in a directory and prints
    /// one JSON result per frame.
    Run {
        dir: PathBuf,
        /// Writes annotated PPM overlays here.
        #[arg(long, value_name = "DIR")]
        annotate: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum GaitCmd {
    /// Prints one walk cycle of joint targets as CSV at 100 Hz.
    Dump {
        /// Walk parameter overrides, `key=value` (the `walk.` prefix is optional).
        #[arg(long, num_args = 1.., value_name = "K=V")]
        params: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
enum SimCmd {
    /// Runs a scenario and writes the match log.
    Match {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Match log destination; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        log: Option<PathBuf>,
    },
    /// Writes labelled synthetic frames for `vision run`.
    Corpus {
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Ball-free frames instead.
        #[arg(long)]
        no_ball: bool,
    },
}

#[derive(Debug, Subcommand)]
enum LocaliseCmd {
    /// Replays a localisation input log and prints the belief per step.
    Replay { log: PathBuf },
}

#[derive(Debug, Subcommand)]
enum AgentCmd {
    /// Runs one scenario player under agent control; the others stand still.
    Run(AgentRunArgs),
}

#[derive(Debug, Args)]
struct AgentRunArgs {
    scenario: PathBuf,
    /// Scenario player index.
    #[arg(long)]
    robot: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    /// Paces the simulation to wall-clock time.
    #[arg(long)]
    realtime: bool,
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn base_config(path: Option<&Path>) -> Result<Config, Box<dyn std::error::Error>> {
    let env = std::env::var_os("ES_CONFIG").map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env) {
        Some(p) => Ok(load_config(&p)?),
        None => Ok(Config::default()),
    }
}

fn out_writer(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct FrameReport<'a> {
    file: &'a str,
    timestamp_ns: u64,
    ball: Option<crate::corpus::BallLabel>,
    lines: usize,
    circle: bool,
    total_ms: f64,
}

fn vision_run(cfg: &Config, dir: &Path, annotate_dir: Option<&Path>) -> CliResult {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "yuyv"))
        .collect();
    files.sort();
    if let Some(a) = annotate_dir {
        fs::create_dir_all(a)?;
    }
    let mut out = out_writer(None)?;
    for path in &files {
        let frame = CameraFrame::read_yuyv(path)?;
        let o = run_pipeline(&frame, None, &cfg.vision)?;
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        let r = &o.result;
        let report = FrameReport {
            file: &name,
            timestamp_ns: r.timestamp_ns,
            ball: r.ball.as_ref().map(|b| crate::corpus::BallLabel {
                u: b.centre.0,
                v: b.centre.1,
                radius: b.radius,
            }),
            lines: r.lines.len(),
            circle: r.circle.is_some(),
            total_ms: o.timings.total_ms,
        };
        serde_json::to_writer(&mut out, &report)?;
        out.write_all(b"\n")?;
        if let Some(a) = annotate_dir {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            write_ppm(
                a.join(format!("{stem}.ppm")),
                frame.width,
                frame.height,
                &annotate(&frame, r),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn gait_dump(cfg: &Config, params: &[String]) -> CliResult {
    let mut cfg = cfg.clone();
    for (i, p) in params.iter().enumerate() {
        let Some((k, v)) = split_assignment(p, i + 1)? else {
            continue;
        };
        let key = if k.contains('.') {
            k.to_string()
        } else {
            format!("walk.{k}")
        };
        cfg.set(&key, v).map_err(|e| e.at(i + 1, &key))?;
    }
    cfg.validate()?;
    let model = JointModel::from_config(&cfg)?;
    let params = WalkParams::from_section(&cfg.walk);
    params.validate()?;
    let rows = (100.0 / params.frequency_hz).round() as usize;
    let mut out = out_writer(None)?;
    let names: Vec<&str> = JointId::ALL.iter().map(|j| j.name()).collect();
    writeln!(out, "t_s,{}", names.join(","))?;
    for k in 0..rows {
        let t = k as f64 / 100.0;
        let targets = targets_at(&params, t * params.frequency_hz, &model)?;
        let cols: Vec<String> = targets.angles.iter().map(|a| format!("{a:.6}")).collect();
        writeln!(out, "{t:.2},{}", cols.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn sim_match(cfg: &Config, scenario: &Path, opts: &MatchOptions, log: Option<&Path>) -> CliResult {
    let s = Scenario::load(scenario, cfg)?;
    let m = run_match_with(&s, opts)?;
    let mut out = out_writer(log)?;
    m.write_jsonl(&mut out)?;
    out.flush()?;
    for (k, _) in s.players.iter().enumerate() {
        let seq: Vec<String> = m.action_sequence(k).iter().map(|a| format!("{a:?}")).collect();
        if !seq.is_empty() {
            eprintln!("player {k}: {}", seq.join(" -> "));
        }
    }
    for (t, e) in m.events() {
        eprintln!("{t:7.2} s  {e:?}");
    }
    Ok(())
}

fn localise_replay(cfg: &Config, log: &Path) -> CliResult {
    let field = FieldModel::from_config(cfg)?;
    let a = &cfg.agent;
    let start = BeliefState::initial(Pose2D::new(a.kickoff_x_m, a.kickoff_y_m, a.kickoff_theta_rad), &cfg.ekf);
    let input = BufReader::new(fs::File::open(log)?);
    let mut out = out_writer(None)?;
    let n = replay(input, &mut out, start, &field, cfg)?;
    out.flush()?;
    eprintln!("{n} steps");
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let cfg = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::Vision(VisionCmd::Run { dir, annotate }) => vision_run(&cfg, &dir, annotate.as_deref()),
        Command::Gait(GaitCmd::Dump { params }) => gait_dump(&cfg, &params),
        Command::Sim(SimCmd::Match { scenario, seed, log }) => {
            let opts = MatchOptions {
                seed,
                ..MatchOptions::default()
            };
            sim_match(&cfg, &scenario, &opts, log.as_deref())
        }
        Command::Sim(SimCmd::Corpus {
            out,
            frames,
            seed,
            no_ball,
        }) => {
            write_corpus(&out, &sample_frames(&cfg, frames, seed, !no_ball))?;
            Ok(())
        }
        Command::Localise(LocaliseCmd::Replay { log }) => localise_replay(&cfg, &log),
        Command::Agent(AgentCmd::Run(a)) => {
            let opts = MatchOptions {
                seed: a.seed,
                only_player: Some(a.robot),
                realtime: a.realtime,
            };
            sim_match(&cfg, &a.scenario, &opts, a.log.as_deref())
        }
    }
}

fn broken_pipe(e: &(dyn std::error::Error + 'static)) -> bool {
    let kind = e.downcast_ref::<io::Error>().map(io::Error::kind).or_else(|| {
        e.downcast_ref::<serde_json::Error>()
            .and_then(serde_json::Error::io_error_kind)
    });
    kind == Some(io::ErrorKind::BrokenPipe)
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) if broken_pipe(e.as_ref()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
