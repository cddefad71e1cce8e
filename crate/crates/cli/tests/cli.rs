use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn condbel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condbel")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_chain4() {
    let o = condbel(&["validate", path_str(&fixture("chain4.dsn"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn validate_rejects_connected_parents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.dsn");
    fs::write(
        &path,
        "var A : a b\nvar B : a b\nvar C : a b\nedge A -> B\nedge A -> C\nedge B -> C\n\
         table A | kind=m\n{a,b} : 1\nend\n\
         table B | A kind=m\n{a,b} | {a,b} : 1\nend\n\
         table C | A B kind=m\n{a,b} | {a,b} {a,b} : 1\nend\n",
    )
    .unwrap();
    let o = condbel(&["validate", path_str(&path)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("directly connected"));
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dsn");
    fs::write(&path, "var X : a b\nedge X -> Y\n").unwrap();
    let o = condbel(&["validate", path_str(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
    let o = condbel(&["sample", "/nonexistent/net.dsn", "-n", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cpt_names_negative_row() {
    let o = condbel(&["cpt", path_str(&fixture("chain4.dsn"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("P({b}|{a})"), "{err}");
    assert!(err.contains("-0.060000000"), "{err}");
}

#[test]
fn cpt_writes_one_file_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cpts");
    let o = condbel(&["cpt", path_str(&fixture("pair-rounded.dsn")), "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let x2 = fs::read_to_string(out.join("X2.csv")).unwrap();
    assert!(x2.starts_with("X1,X2,p\n"));
    // X2 is a leaf: plain children, and the ⊗ row is 2 K({a}|{a}) - K({a}|{a,b})
    assert!(x2.contains("\"{a}@{a,b}\",{a},0.683334000\n"), "{x2}");
    assert_eq!(x2.lines().count(), 1 + 7 * 3);
}

#[test]
fn sample_writes_header_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = condbel(&["sample", path_str(&fixture("star5.dsn")), "-n", "10", "--seed", "1", "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert_eq!(text.lines().next(), Some("X1,X2,X3,X4,X5"));
}

#[test]
fn sample_zero_records_is_header_only() {
    let o = condbel(&["sample", path_str(&fixture("star5.dsn")), "-n", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(o.stdout, b"X1,X2,X3,X4,X5\n");
}

#[test]
fn sample_requires_count() {
    let o = condbel(&["sample", path_str(&fixture("star5.dsn"))]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn joint_reports_negativity() {
    let o = condbel(&["joint", path_str(&fixture("chain4.dsn"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("negative focal masses"));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("X1,X2,X3,X4,mass\n"));
    assert!(csv.contains("{a},{b},{a},{b},-0.000029156\n"), "{csv}");

    let o = condbel(&["joint", path_str(&fixture("chain3.dsn"))]);
    assert!(stderr(&o).contains("all focal masses nonnegative"));
}

#[test]
fn transform_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("k.dsn");
    let m = dir.path().join("m.dsn");
    let src = fixture("star5.dsn");
    assert_eq!(condbel(&["transform", path_str(&src), "--to", "k", "-o", path_str(&k)]).status.code(), Some(0));
    assert!(fs::read_to_string(&k).unwrap().contains("kind=k"));
    assert_eq!(condbel(&["transform", path_str(&k), "--to", "m", "-o", path_str(&m)]).status.code(), Some(0));
    let direct = condbel(&["joint", path_str(&src)]).stdout;
    let via_k = condbel(&["joint", path_str(&m)]).stdout;
    assert_eq!(direct, via_k);
}

#[test]
fn verify_passes_and_fails_on_threshold() {
    let net = fixture("chain4-samplable.dsn");
    let o = condbel(&["verify", path_str(&net), "-n", "20000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.contains("dof = 80"));
    assert!(report.trim_end().ends_with("PASS"));

    let o = condbel(&["verify", path_str(&net), "-n", "50", "--seed", "3", "--linf", "0.001"]);
    assert_eq!(o.status.code(), Some(3));
}
