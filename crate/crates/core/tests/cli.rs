use std::fs;
use std::path::Path;

use reglab::cli::run_command;
use reglab::io::RawGrid;

fn run(args: &[&str]) -> i32 {
    run_command(std::iter::once("reglab").chain(args.iter().copied()))
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn solve_writes_grid_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data]\nkind = manufactured\n[run]\nresolutions = 16\n");
    let out = dir.path().join("out");
    assert_eq!(run(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let raw = RawGrid::read(&out.join("u.grid")).unwrap();
    assert_eq!(raw.dims, vec![17, 17]);
    assert_eq!(raw.h, 1.0 / 16.0);
    let history = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(history.starts_with("step,energy,residual"), "{history}");
    assert!(history.lines().count() > 1);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("solve.json")).unwrap()).unwrap();
    assert!(summary["h1_error"].as_f64().unwrap() < 0.3);
}

#[test]
fn maximal_reads_an_rgl1_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.grid");
    let data: Vec<f64> = (0..64).map(|k| if k == 27 { 1.0 } else { 0.0 }).collect();
    RawGrid { dims: vec![8, 8], h: 0.125, data }.write(&input).unwrap();
    let out = dir.path().join("out");
    let code = run(&["maximal", "--input", input.to_str().unwrap(), "--r", "0.25", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.join("maximal.csv").exists());
    let m = RawGrid::read(&out.join("maximal_full_a0.grid")).unwrap();
    assert_eq!(m.dims, vec![8, 8]);
    assert!(m.data.iter().all(|&v| v > 0.0));
}

#[test]
fn bad_invocations_fail_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"]), 1);
    let cfg = write_config(dir.path(), "[operator]\np = 0.5\n");
    assert_eq!(run(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 1);
    let garbage = dir.path().join("bad.grid");
    fs::write(&garbage, b"XXXX").unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["lorentz", "--input", garbage.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
}
