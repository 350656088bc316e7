use std::path::Path;
use std::process::{Command, Output};

fn su2topo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_su2topo")).args(args).env("SU2TOPO_NO_COLOR", "1").output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_then_cs_on_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("id.fld");
    let out = su2topo(&["generate", "identity", "--grid", "24", "--out", p(&f)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = su2topo(&["cs", p(&f), "--method", "spinor"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = String::from_utf8(out.stdout).unwrap();
    assert!(json.contains("\"Q_FN\""));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS Q_FN vs Q spinor"));
}

#[test]
fn verify_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for r in [&a, &b] {
        let out = su2topo(&["verify", "random", "--grid", "6", "--box", "0:1", "--seed", "9", "--report", p(r)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn failed_check_gives_nonzero_exit() {
    let out = su2topo(&["verify", "identity", "--grid", "16", "--method", "spinor", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn linear_verify_reports_chi_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    let out = su2topo(&["verify", "flipped", "--grid", "11", "--table", p(&t)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(&t).unwrap();
    assert!(table.starts_with("quantity,method,value"));
    assert!(table.lines().any(|l| l.starts_with("chi,zeros,-1e0,-1")));
}

#[test]
fn zeros_on_sampled_polynomial() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("poly.fld");
    assert!(su2topo(&["generate", "poly", "--out", p(&f)]).status.success());
    let out = su2topo(&["zeros", p(&f)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = String::from_utf8(out.stdout).unwrap();
    assert_eq!(json.matches("\"beta\"").count(), 2);
}

#[test]
fn file_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("s.fld");
    assert!(su2topo(&["generate", "random-spinor", "--grid", "5", "--out", p(&f)]).status.success());
    let bytes = std::fs::read(&f).unwrap();

    let mut flipped = bytes.clone();
    flipped[200] ^= 0x10;
    std::fs::write(&f, &flipped).unwrap();
    assert_eq!(su2topo(&["cs", p(&f)]).status.code(), Some(14));

    std::fs::write(&f, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(su2topo(&["cs", p(&f)]).status.code(), Some(12));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    std::fs::write(&f, &magic).unwrap();
    assert_eq!(su2topo(&["cs", p(&f)]).status.code(), Some(11));

    assert_eq!(su2topo(&["cs", p(&dir.path().join("missing.fld"))]).status.code(), Some(10));
}

#[test]
fn usage_errors() {
    assert_eq!(su2topo(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(su2topo(&["verify", "linear", "--box", "1:0"]).status.code(), Some(2));
    assert_eq!(su2topo(&["generate", "linear"]).status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_su2topo"))
        .args(["verify", "linear", "--grid", "9"])
        .env("SU2TOPO_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("\x1b["));
}
