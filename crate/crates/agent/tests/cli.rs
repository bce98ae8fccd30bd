use std::path::Path;
use std::process::{Command, Output};

use kidsize_agent::TruthRecord;

fn kidsize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kidsize"))
        .args(args)
        .env_remove("ES_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(kidsize(&[]).status.code(), Some(2));
    assert_eq!(kidsize(&["bogus"]).status.code(), Some(2));
    assert_eq!(kidsize(&["sim", "corpus"]).status.code(), Some(2));
    assert_eq!(kidsize(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1() {
    let o = kidsize(&["gait", "dump", "--params", "nope=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("walk.nope"));
    assert_eq!(kidsize(&["sim", "match", "/nonexistent.scn"]).status.code(), Some(1));
    assert_eq!(
        kidsize(&["--config", "/nonexistent.conf", "gait", "dump"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn gait_dump_is_one_cycle() {
    let text = stdout(&kidsize(&["gait", "dump"]));
    let lines: Vec<&str> = text.lines().collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 21);
    assert_eq!(header[0], "t_s");
    assert_eq!(header[1], "l_hip_yaw");
    // 1.5 Hz at 100 Hz sampling.
    assert_eq!(lines.len() - 1, 67);
    for l in &lines[1..] {
        let cols: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 21);
        assert!(cols.iter().all(|c| c.is_finite()));
    }

    let text = stdout(&kidsize(&[
        "gait",
        "dump",
        "--params",
        "frequency_hz=2",
        "walk.step_m=0.02",
    ]));
    assert_eq!(text.lines().count() - 1, 50);
}

#[test]
fn config_file_applies() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("walk.conf");
    std::fs::write(&conf, "walk.frequency_hz = 1.0\n").unwrap();
    let text = stdout(&kidsize(&["--config", conf.to_str().unwrap(), "gait", "dump"]));
    assert_eq!(text.lines().count() - 1, 100);
}

#[test]
fn sim_match_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("short.scn");
    std::fs::write(
        &scn,
        "scenario.duration_s = 1\nscenario.seed = 4\nscenario.ball_x = 1\nplayer.0.x = 0\n",
    )
    .unwrap();
    let log = dir.path().join("a.jsonl");
    let o = kidsize(&["sim", "match", scn.to_str().unwrap(), "--log", log.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("player 0: FindBall"));
    let again = stdout(&kidsize(&["sim", "match", scn.to_str().unwrap()]));
    assert_eq!(std::fs::read_to_string(&log).unwrap(), again);
    assert_eq!(again.lines().count(), 100);
}

fn read_truth(dir: &Path) -> Vec<TruthRecord> {
    std::fs::read_to_string(dir.join("truth.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn vision_run_over_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("frames");
    let c = corpus.to_str().unwrap();
    assert!(kidsize(&["sim", "corpus", c, "--frames", "50", "--seed", "9"])
        .status
        .success());
    let truth = read_truth(&corpus);
    assert_eq!(truth.len(), 50);

    let overlays = dir.path().join("overlays");
    let text = stdout(&kidsize(&[
        "vision",
        "run",
        c,
        "--annotate",
        overlays.to_str().unwrap(),
    ]));
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 50);
    let mut hits = 0;
    for (row, t) in rows.iter().zip(&truth) {
        assert_eq!(row["file"], t.file.as_str());
        let want = t.ball.unwrap();
        if let Some(b) = row["ball"].as_object() {
            let (u, v) = (b["u"].as_f64().unwrap(), b["v"].as_f64().unwrap());
            if (u - want.u).hypot(v - want.v) <= 3.0 {
                hits += 1;
            }
        }
    }
    assert!(hits >= 48, "{hits}/50 within 3 px");
    let ppm = std::fs::read(overlays.join("frame_0000.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n640 480\n255\n"));
    assert_eq!(ppm.len(), 15 + 640 * 480 * 3);
}

#[test]
fn localise_replay_reads_steps() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("steps.jsonl");
    std::fs::write(
        &log,
        "{\"t_ns\":0}\n{\"t_ns\":10000000,\"odometry\":{\"x\":0.01,\"y\":0.0,\"theta\":0.0},\"dt\":0.01}\n",
    )
    .unwrap();
    let text = stdout(&kidsize(&["localise", "replay", log.to_str().unwrap()]));
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["t_ns"], 10_000_000);
}

#[test]
fn agent_run_rejects_missing_player() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("one.scn");
    std::fs::write(&scn, "scenario.duration_s = 0.1\nplayer.0.x = 0\n").unwrap();
    let s = scn.to_str().unwrap();
    assert_eq!(kidsize(&["agent", "run", s, "--robot", "3"]).status.code(), Some(1));
    let text = stdout(&kidsize(&["agent", "run", s, "--robot", "0"]));
    assert_eq!(text.lines().count(), 10);
}
