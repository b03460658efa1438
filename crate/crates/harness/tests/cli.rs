use std::process::{Command, Output};

fn detmip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detmip")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn generate_then_solve_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = detmip(&["generate", d]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 12);

    let file = dir.path().join("knapsack.mps");
    let f = file.to_str().unwrap();
    let seq = detmip(&["solve", f, "--sequential"]);
    assert!(seq.status.success());
    let par = detmip(&["solve", f, "-k", "3", "--threads-table"]);
    assert!(par.status.success());
    let (a, b) = (&stdout_json(&seq)[0], &stdout_json(&par)[0]);
    assert_eq!(a["status"], "Optimal");
    assert_eq!(a["objective"], b["objective"]);
    assert_eq!(b["workers"], 3);
    assert!(String::from_utf8_lossy(&par.stderr).contains("worker 2"));

    let ver = detmip(&["verify", f, "-k", "2", "--reps", "3"]);
    assert!(ver.status.success());
    assert_eq!(stdout_json(&ver)[0]["deterministic"], true);
}

#[test]
fn bench_prints_instances_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(detmip(&["generate", d, "--kind", "random", "--count", "3"]).status.success());
    let out = detmip(&["bench", d, "--ks", "2", "--reps", "2"]);
    assert!(out.status.success());
    let lines = stdout_json(&out);
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[3]["workers"], 2);
    assert_eq!(lines[3]["all_deterministic"], true);
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.mps");
    let out = detmip(&["solve", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let d = dir.path().to_str().unwrap();
    assert!(detmip(&["generate", d]).status.success());
    let f = dir.path().join("two_var.mps");
    let out = detmip(&["verify", f.to_str().unwrap(), "--reps", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = detmip(&["solve", f.to_str().unwrap(), "--gap-rel=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!detmip(&["generate", d, "--kind", "bogus"]).status.success());
}
