use std::fs;
use std::process::{Command, Output};

fn ionspin(args: &[&str], dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionspin"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn modes_prints_one_row_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionspin(&["modes", "--n", "10"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("mode,frequency_hz,b_0,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ionspin(&["solve", "--graph", "chain:4", "--fs", "1.5"], dir.path()).status.code(), Some(1));
    assert_eq!(ionspin(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(ionspin(&["run", "--config", "missing.toml"], dir.path()).status.code(), Some(1));

    // A zero Ω cannot reproduce a nonzero chain: numerical failure.
    fs::write(dir.path().join("om.csv"), "0,0,0\n0,0,0\n0,0,0\n").unwrap();
    let o = ionspin(&["verify", "--omega", "om.csv", "--graph", "chain:3", "--fs", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("error: verify:"), "{err}");
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionspin(
        &["solve", "--graph", "ring:5", "--fs", "0.1", "--j-hz", "40", "--starts", "2", "--out", "d"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = ionspin(
        &["verify", "--omega", "d/omega.csv", "--graph", "ring:5", "--j-hz", "40", "--fs", "0.1"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("relative_residual = "));
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "output = \"out\"\nf_s = 0.03\nbudget_hz = 1e6\n\n[graph]\nkind = \"uniform\"\nn = 4\n\n\
         [solver]\nresidual_tol = 1e-8\nmax_iter = 400\nn_starts = 2\n\n\
         [scaling]\nfamily = \"uniform_full\"\nn_min = 3\nn_max = 6\n",
    )
    .unwrap();
    let o = ionspin(&["run", "--config", "run.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("exponent = "));
    assert!(dir.path().join("out/scaling.csv").is_file());
    assert!(dir.path().join("out/manifest.toml").is_file());
}

#[test]
fn groundstate_and_dynamics() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.csv"), "0,1,1\n1,0,1\n1,1,0\n").unwrap();
    let o = ionspin(&["groundstate", "--j", "tri.csv"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("degeneracy = 6"));
    assert_eq!(text.lines().count(), 8);

    fs::write(dir.path().join("pair.csv"), "0,100\n100,0\n").unwrap();
    let o = ionspin(&["dynamics", "--j", "pair.csv", "--t", "0.01", "--samples", "4"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t_s,z_0,z_1");
    assert_eq!(lines.len(), 6);
}

#[test]
fn scaling_prints_csv_and_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionspin(&["scaling", "--family", "uniform", "--nmin", "3", "--nmax", "5"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("n,j_metric_hz,"));
    assert!(text.lines().any(|l| l.starts_with("exponent = ")));
}
