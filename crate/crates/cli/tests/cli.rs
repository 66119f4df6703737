use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dynrrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynrrt")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const EMPTY: &str = r#"{ "world": { "min": [0, 0], "max": [6, 6] }, "planner": { "max_nodes": 400 } }"#;
const WALLED: &str = r#"{ "world": { "min": [0, 0], "max": [6, 6], "obstacles": [[0, 3, 6, 3]] },
                          "planner": { "max_nodes": 400 } }"#;

#[test]
fn plan_to_the_start_costs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.json", EMPTY);
    let out = dir.path().join("path.csv");
    let o = dynrrt(&["plan", "--config", &cfg, "--algo", "rrt", "--start", "2,2,0", "--goal", "2,2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let line = String::from_utf8(o.stdout).unwrap();
    assert!(line.contains("status=found"), "{line}");
    assert!(line.contains("cost=0.000000000"), "{line}");
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,heading,cumulative_cost"));
}

#[test]
fn plan_across_a_full_wall_exhausts_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "walled.json", WALLED);
    for algo in ["rrt", "rrt_star", "errt", "dynamic"] {
        let o = dynrrt(&["plan", "--config", &cfg, "--algo", algo, "--start", "3,1,90", "--goal", "3,5"]);
        assert_eq!(o.status.code(), Some(2), "{algo}");
    }
}

#[test]
fn negative_coordinates_parse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.json", EMPTY);
    let o = dynrrt(&["plan", "--config", &cfg, "--algo", "rrt", "--start", "3,1,-90", "--goal", "3,0.5"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let steer = write(
        dir.path(),
        "steer.json",
        r#"{ "world": { "min": [0, 0], "max": [6, 6] }, "goal": [3, 5], "robot": { "max_steer": 95 } }"#,
    );
    let o = dynrrt(&["plan", "--config", &steer, "--algo", "rrt", "--start", "3,1,90"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("robot.max_steer"));

    let prob = write(
        dir.path(),
        "prob.json",
        r#"{ "world": { "min": [0, 0], "max": [6, 6] }, "goal": [3, 5], "planner": { "p_goal": 1.3 } }"#,
    );
    let o = dynrrt(&["bench", "replanning", "--config", &prob, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("planner.p_goal"));

    let broken = write(dir.path(), "broken.json", "{ not json");
    let o = dynrrt(&["mission", "--config", &broken, "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));

    let o = dynrrt(&["plan", "--config", "/nonexistent/config.json", "--algo", "rrt"]);
    assert_eq!(o.status.code(), Some(1));

    let o = dynrrt(&["plan", "--algo", "rrt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(dynrrt(&["--help"]).status.code(), Some(0));
    let o = dynrrt(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("dynrrt "));
}

#[test]
fn mission_on_the_shipped_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = dynrrt(&["mission", "--config", &scenario("mission_6x6.json"), "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(out).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("t,x,y,heading,battery,decision,station,path_cost,planner,replan_ms"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 58);
    assert!(rows.iter().any(|r| r.contains(",return,")));
    assert!(rows.iter().all(|r| r.split(',').count() == 10));
}

#[test]
fn mission_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // far too little battery for any station
    let cfg = write(
        dir.path(),
        "tiny.json",
        r#"{ "world": { "min": [0, 0], "max": [6, 6] },
             "energy": { "battery_capacity": 1.0 },
             "task_path": [[3, 0], [3, 3]],
             "stations": [[1, 5]] }"#,
    );
    let out = dir.path().join("trace.csv");
    let o = dynrrt(&["mission", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bench_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "small.json",
        r#"{ "world": { "min": [0, 0], "max": [6, 6] }, "goal": [3, 5.5],
             "planner": { "max_nodes": 600 }, "seeds": [0, 1],
             "trajectory": { "x": 3, "y_start": 0, "y_end": 0.5, "y_step": 0.25, "heading": 90 } }"#,
    );
    let out = dir.path().join("run");
    let o = Command::new(env!("CARGO_BIN_EXE_dynrrt"))
        .args(["bench", "replanning", "--config", &cfg, "--out-dir", out.to_str().unwrap()])
        .env("REPLAN_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let raw = std::fs::read_to_string(out.join("raw.csv")).unwrap();
    let agg = std::fs::read_to_string(out.join("agg.csv")).unwrap();
    assert_eq!(raw.lines().count(), 1 + 4 * 2 * 3);
    assert_eq!(agg.lines().count(), 1 + 4 * 3);
    // timings are zero unless asked for
    assert!(raw.lines().skip(1).all(|l| l.split(',').nth(7) == Some("0")));
}
