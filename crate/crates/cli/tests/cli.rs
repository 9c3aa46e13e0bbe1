use std::path::Path;
use std::process::{Command, Output};

fn regsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regsat")).args(args).output().expect("binary runs")
}

fn emit_to(dir: &Path, name: &str) -> String {
    let out = regsat(&["fixtures", "emit", name]);
    assert!(out.status.success());
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, &out.stdout).unwrap();
    path.to_str().unwrap().to_string()
}

fn report(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("report.json")).unwrap()
}

#[test]
fn list_is_stable() {
    let a = regsat(&["fixtures", "list"]);
    let b = regsat(&["fixtures", "list"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let names = String::from_utf8(a.stdout).unwrap();
    assert_eq!(names.lines().count(), 9);
    assert!(names.lines().any(|l| l == "figure-eight"));
}

#[test]
fn emit_is_byte_identical() {
    let a = regsat(&["fixtures", "emit", "so3-plane"]);
    let b = regsat(&["fixtures", "emit", "so3-plane"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("\"1 2 z\", \"2 3 x\", \"3 1 y\""));
}

#[test]
fn unknown_fixture_is_a_usage_error() {
    assert_eq!(regsat(&["fixtures", "emit", "nope"]).status.code(), Some(64));
    assert_eq!(regsat(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(regsat(&["all", "x.toml", "--steps", "many"]).status.code(), Some(64));
}

#[test]
fn non_regular_plane_exits_3_with_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = emit_to(tmp.path(), "so3-plane");
    let out = tmp.path().join("out");
    let st = regsat(&["analyze", &scene, "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(3));
    let r = report(&out);
    assert!(r.contains("\"regular\": false"));
    assert!(r.contains("\"0\": [\n"));
}

#[test]
fn coisotropic_line_passes_everything_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = emit_to(tmp.path(), "coiso-line");
    let out = tmp.path().join("out");
    let st = regsat(&["all", &scene, "--out", out.to_str().unwrap(), "--csv"]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    assert!(report(&out).contains("\"schema\": 1"));
    let csv = std::fs::read_to_string(out.join("saturation.csv")).unwrap();
    assert!(csv.starts_with("u1,xi1,x1,x2,x3,residual"));
    assert!(out.join("normal_form.csv").exists());
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = emit_to(tmp.path(), "sympl-plane");
    let a = regsat(&["verify", &scene]);
    let b = regsat(&["verify", &scene, "--sequential"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_expression_exits_4_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(
        &path,
        "[poisson]\ndim = 3\nentries = [\"1 2 z*(\"]\n\n[submanifold]\nparams = [\"u\"]\nchart = [\"u\", \"0\", \"0\"]\nlo = [-1.0]\nhi = [1.0]\ngrid = [3]\n",
    )
    .unwrap();
    let st = regsat(&["analyze", path.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(4));
    let text = String::from_utf8_lossy(&st.stdout);
    assert!(text.contains("position"), "{text}");
}

#[test]
fn bad_key_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\nsed = 3\n").unwrap();
    let st = regsat(&["analyze", path.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&st.stdout).contains("line 2"));
}

#[test]
fn step_override_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = emit_to(tmp.path(), "zero-structure");
    let st = regsat(&["saturate", &scene, "--steps", "64", "--tol", "1e-9"]);
    assert_eq!(st.status.code(), Some(0));
    let text = String::from_utf8_lossy(&st.stdout);
    assert!(text.contains("\"steps\": 64") && text.contains("\"rank\": 1e-9"), "{text}");
}
