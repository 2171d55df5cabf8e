use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acdcflow"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn converged_table() {
    let case = data("ieee14_qlim.m");
    let out = run(&["solve", case.to_str().unwrap(), "--iter-log"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("Iteration log"));
    assert!(stdout.contains("Status: Converged"));
    assert!(stdout.contains("Binding limits"));
    assert!(stdout.contains("1 symbolic analyses"));
}

#[test]
fn json_output_parses() {
    let (case, vsc) = (data("ieee14_qlim.m"), data("mtdc_4terminal.json"));
    let out = run(&[
        "solve",
        case.to_str().unwrap(),
        "--vsc",
        vsc.to_str().unwrap(),
        "--output",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["status"], "converged");
    assert_eq!(json["converters"].as_array().unwrap().len(), 4);
    assert!(json["timings"]["parse_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn qlim_off_leaves_generators_free() {
    let case = data("ieee14_qlim.m");
    let out = run(&["solve", case.to_str().unwrap(), "--qlim", "off", "--output", "json"]);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["binding_limits"].as_array().unwrap().is_empty());
}

#[test]
fn non_convergence_exits_with_two() {
    let case = data("case14.m");
    let out = run(&["solve", case.to_str().unwrap(), "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stdout).contains("Status: MaxIter"));
}

#[test]
fn missing_file() {
    let out = run(&["solve", "/nonexistent/case.m"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("file not found: /nonexistent/case.m"));
}

#[test]
fn parse_error_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.m");
    std::fs::write(&path, "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0;\n];\n").unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("parse error in"), "{}", text(&out.stderr));
}

#[test]
fn validation_error_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let overlay = std::fs::read_to_string(data("mtdc_4terminal.json")).unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, overlay.replace("\"ac_bus\": 12", "\"ac_bus\": 99")).unwrap();
    let case = data("ieee14_qlim.m");
    let out = run(&["solve", case.to_str().unwrap(), "--vsc", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("validation error"), "{}", text(&out.stderr));
}

#[test]
fn invalid_option_is_rejected() {
    let case = data("case14.m");
    let out = run(&["solve", case.to_str().unwrap(), "--tol=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("tol must be positive"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn usage_error_is_not_confused_with_non_convergence() {
    let out = run(&["solve"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
