//! The `opcond` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn opcond(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opcond")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "problem = interval_hypersingular\nlevels = 3\ninitial_elements = 16\nvariant = both\npcg = true\n";

fn without_timings(s: &str) -> String {
    s.lines().filter(|l| !l.starts_with("# timing")).collect::<Vec<_>>().join("\n")
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.conf", SMALL);
    let out = dir.path().join("out.csv");
    let r = opcond(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "dofs,kappa_A,kappa_G_pwc,kappa_G_cpl,iters_A,iters_G_pwc,iters_G_cpl");
    assert_eq!(body.len(), 4);
    let dofs: Vec<usize> = body[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(dofs, vec![15, 31, 63]);
    for line in &body[1..] {
        for k in line.split(',').skip(1).take(3) {
            assert!(k.parse::<f64>().unwrap() >= 1.0);
        }
    }
    assert!(text.contains("# problem=interval_hypersingular"));
    assert!(text.contains("# timing level=3"));
}

#[test]
fn same_seed_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.conf", SMALL);
    let a = opcond(&["run", &cfg, "--seed", "7"]);
    let b = opcond(&["run", &cfg, "--seed", "7"]);
    let a = String::from_utf8(a.stdout).unwrap();
    assert!(a.contains("seed=7"));
    assert_eq!(without_timings(&a), without_timings(&String::from_utf8(b.stdout).unwrap()));
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.conf", SMALL);
    let r = opcond(&["run", &cfg, "--format", "text", "--quad", "high"]);
    assert_eq!(r.status.code(), Some(0));
    let s = String::from_utf8(r.stdout).unwrap();
    assert!(s.contains("quadrature=high"));
    assert!(s.lines().any(|l| l.trim_start().starts_with("dofs  ")));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.conf");
    assert_eq!(opcond(&["run", missing.to_str().unwrap()]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.conf", "problem = cube_hypersingular\nlevles = 3\n");
    let r = opcond(&["run", &bad]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 2"));
    assert_eq!(opcond(&["run", &bad, "--quad", "low"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // a kernel scale below the interval length breaks coercivity
    let cfg = write(
        dir.path(),
        "fail.conf",
        "problem = interval_hypersingular\nlevels = 2\ninitial_elements = 8\nkernel_scale = 0.9\n",
    );
    let out = dir.path().join("out.csv");
    let r = opcond(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# error level=1"));
    assert!(text.lines().any(|l| l.starts_with("dofs,")));
}
