use std::path::Path;
use std::process::{Command, Output};

fn akann(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_akann")).current_dir(dir).args(args).output().expect("spawn akann")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bound_prints_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = akann(dir.path(), &["bound", "--m", "64", "--d", "16", "--L", "1,2,4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("# akann schema=1 manifest="));
    assert_eq!(lines.next().unwrap(), "m,d,levels,value,increasing_in_l,increasing_in_m,error");
    assert_eq!(lines.count(), 3);
}

#[test]
fn manifest_hash_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout(&akann(dir.path(), &["--seed", "5", "verify", "simplex", "--n", "500"]));
    let b = stdout(&akann(dir.path(), &["--seed", "5", "verify", "simplex", "--n", "500"]));
    let c = stdout(&akann(dir.path(), &["--seed", "6", "verify", "simplex", "--n", "500"]));
    assert_eq!(a, b);
    assert_ne!(a.lines().next(), c.lines().next());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(akann(dir.path(), &["verify", "simplex", "--n", "500"]).status.code(), Some(0));
    // a tolerance no sample can meet is a failed check, not an error
    assert_eq!(akann(dir.path(), &["verify", "cdf", "--d", "4", "--n", "2000", "--tol", "1e-9"]).status.code(), Some(1));
    assert_eq!(akann(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(akann(dir.path(), &["config", "info", "missing.akcf"]).status.code(), Some(2));
}

#[test]
fn config_build_then_info() {
    let dir = tempfile::tempdir().unwrap();
    let o = akann(dir.path(), &["config", "build", "--kind", "ran", "--m", "32", "--d", "12", "--L", "3", "--out", "c.akcf"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = akann::config::ProjectionConfig::load(dir.path().join("c.akcf")).unwrap();
    assert_eq!((cfg.m(), cfg.layout().dim(), cfg.layout().levels()), (32, 12, 3));
    let o = akann(dir.path(), &["config", "info", "c.akcf", "--n", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ran"));
}

#[test]
fn graph_build_and_search_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let synth = ["--synthetic", "2000,16,10", "--nq", "50"];
    let mut args = vec!["graph", "build", "--M", "8", "--efc", "64", "--L", "4", "--out", "g.ks2"];
    args.extend(synth);
    let o = akann(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut args = vec!["graph", "search", "--index", "g.ks2", "--efs-sweep", "20,80"];
    args.extend(synth);
    let o = akann(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 2, "{out}");
}
