use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn omapf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omapf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn corridor_solve_prints_success_json() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "c.map", "height 1\nwidth 4\n....\n");
    let scen = write(dir.path(), "c.scen", "0 0 0 3 0\n");
    let dump = dir.path().join("plans.jsonl");
    let out = omapf(
        &["solve", "--map", &map, "--scen", &scen, "--solver", "a4", "--plan-dump", dump.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["success"], true);
    assert_eq!(report["solver"], "A4");
    assert_eq!(report["iterations"][0]["soc"], 3);
    assert_eq!(report["execute_plan"]["0"]["vertices"], serde_json::json!([0, 1, 2, 3]));
    let dump = std::fs::read_to_string(dump).unwrap();
    assert_eq!(dump, "{\"paths\":{\"0\":[0,1,2,3]},\"soc\":3,\"t\":0}\n");
}

#[test]
fn every_solver_gives_the_same_soc_on_a_swap() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "n.map", "height 2\nwidth 4\n....\n@.@@\n");
    let scen = write(dir.path(), "n.scen", "0 0 0 3 0\n0 3 0 0 0\n2 1 1 3 0\n");
    let socs: Vec<Value> = ["a1", "a2", "a3", "a4"]
        .iter()
        .map(|s| {
            let out = omapf(&["solve", "--map", &map, "--scen", &scen, "--solver", s], dir.path());
            assert!(out.status.success(), "{s}: {}", stderr(&out));
            let report: Value = serde_json::from_slice(&out.stdout).unwrap();
            report["iterations"][0]["soc"].clone()
        })
        .collect();
    assert!(socs.windows(2).all(|w| w[0] == w[1]), "{socs:?}");
}

#[test]
fn timeout_exits_with_three_and_reports_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "o.map", "height 3\nwidth 3\n...\n...\n...\n");
    let scen = write(dir.path(), "o.scen", "0 0 0 2 2\n0 2 2 0 0\n");
    let out = omapf(&["solve", "--map", &map, "--scen", &scen, "--time-limit", "1e-9"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["success"], false);
    assert_eq!(report["failure"], "timeout");
    assert_eq!(report["total_time_s"], 1e-9);
}

#[test]
fn unreachable_goal_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "w.map", "height 1\nwidth 4\n..@.\n");
    let scen = write(dir.path(), "w.scen", "0 0 0 3 0\n");
    let out = omapf(&["solve", "--map", &map, "--scen", &scen], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["failure"], "unsolvable");
}

#[test]
fn invalid_map_character_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "bad.map", "height 1\nwidth 3\n.T.\n");
    let scen = write(dir.path(), "s.scen", "0 0 0 2 0\n");
    let out = omapf(&["solve", "--map", &map, "--scen", &scen], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let msg = stderr(&out);
    assert!(msg.contains("bad.map:3") && msg.contains("'T'"), "{msg}");
}

#[test]
fn scenario_errors_carry_the_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "c.map", "height 1\nwidth 4\n....\n");
    let scen = write(dir.path(), "s.scen", "0 0 0 3 0\n1 0 0 x 0\n");
    let out = omapf(&["solve", "--map", &map, "--scen", &scen], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("s.scen:2: 'x'"), "{}", stderr(&out));
    let out = omapf(&["solve", "--map", "missing.map", "--scen", &scen], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = omapf(&["solve", "--map", "m", "--scen", "s", "--solver", "a9"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = omapf(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = omapf(&["--help"], dir.path());
    assert!(out.status.success());
}

#[test]
fn gen_then_bench_writes_deterministic_tables() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |out: &str| {
        omapf(
            &["gen", "--width", "8", "--height", "8", "--agents", "3,4", "--instances", "2", "--start-max", "10", "--seed", "7", "--out", out],
            dir.path(),
        )
    };
    assert!(gen("s1").status.success());
    assert!(gen("s2").status.success());
    let mut files: Vec<_> = std::fs::read_dir(dir.path().join("s1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files.iter().filter(|f| f.ends_with(".scen")).count(), 4);
    for f in &files {
        assert_eq!(
            std::fs::read(dir.path().join("s1").join(f)).unwrap(),
            std::fs::read(dir.path().join("s2").join(f)).unwrap(),
            "{f}"
        );
    }

    let out = omapf(&["bench", "--scen", "s1", "--solver", "a1,a4", "--threads", "1", "--out", "b"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("k,solver,success_rate,mean_time_s,speedup_vs_A1,expansions,ctx_hit_rate")
    );
    assert_eq!(lines.count(), 4);
    assert_eq!(std::fs::read_to_string(dir.path().join("b/results.csv")).unwrap(), csv);
    assert!(dir.path().join("b/results.md").exists());
    let runs: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/runs.json")).unwrap()).unwrap();
    let runs = runs.as_array().unwrap();
    assert_eq!(runs.len(), 8);
    for pair in runs.chunks(2) {
        assert_eq!(pair[0]["socs"][0], pair[1]["socs"][0], "{}", pair[0]["instance"]);
    }
}
