use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CUBE: &str = r#"
dim = 2
kind = "box"
declared_R = 1.0
center = [0.0, 0.0]
halfwidths = [1.0, 1.0]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coordwalk"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn cube(dir: &Path) -> PathBuf {
    let p = dir.join("cube.toml");
    std::fs::write(&p, CUBE).unwrap();
    p
}

#[test]
fn sample_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let body = cube(dir.path());
    let o = run(&["sample", "--body", body.to_str().unwrap(), "--chains", "3", "--steps", "10", "--seed", "5", "--M", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("chain_id,step,x_1,x_2"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3 * 11);
    assert!(rows.iter().all(|r| r[2].abs() <= 1.0 && r[3].abs() <= 1.0));
    // the 2-warm start lives in 2^{-1/2}[-1,1]^2
    let a = 0.5f64.sqrt();
    assert!(rows.iter().filter(|r| r[1] == 0.0).all(|r| r[2].abs() <= a && r[3].abs() <= a));
    assert_eq!(stdout(&run(&["sample", "--body", body.to_str().unwrap(), "--chains", "3", "--steps", "10", "--seed", "5", "--M", "2"])), text);
}

#[test]
fn sample_from_a_point_with_negative_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let body = cube(dir.path());
    let o = run(&["sample", "--body", body.to_str().unwrap(), "--start", "-0.5,0.25", "--steps", "2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("0,0,-0.5,0.25"));
}

#[test]
fn seed_is_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    let body = cube(dir.path());
    for args in [
        vec!["sample", "--body", body.to_str().unwrap(), "--steps", "3"],
        vec!["diagnose", "--body", body.to_str().unwrap()],
        vec!["conductance", "--body", body.to_str().unwrap(), "--cells", "3", "--s", "0.1"],
        vec!["verify", "pinsker"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    }
}

#[test]
fn diagnose_csv_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let body = cube(dir.path());
    let out = dir.path().join("mix.csv");
    let o = run(&[
        "diagnose", "--body", body.to_str().unwrap(), "--chains", "4000", "--checkpoints", "0,1e1", "--bins", "4",
        "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "checkpoint,tv_estimate,ci,pass");
    assert!(lines[1].starts_with("0,") && lines[1].ends_with(",false"));
    assert!(lines[2].starts_with("10,") && lines[2].ends_with(",true"));
    // nothing below eps at step 0 with enough chains to resolve it
    let o = run(&["diagnose", "--body", body.to_str().unwrap(), "--chains", "4000", "--checkpoints", "0", "--bins", "4", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagnose_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let body = cube(dir.path());
    let b = body.to_str().unwrap();
    assert_eq!(run(&["diagnose", "--body", b, "--M", "0.5", "--seed", "1"]).status.code(), Some(3));
    assert_eq!(run(&["diagnose", "--body", b, "--checkpoints", "10,5", "--seed", "1"]).status.code(), Some(3));
    assert_eq!(run(&["diagnose", "--body", b, "--scheme", "gauss", "--seed", "1"]).status.code(), Some(3));
    assert_eq!(run(&["diagnose", "--body", "missing.toml", "--seed", "1"]).status.code(), Some(3));
}

#[test]
fn conductance_exact_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let body = cube(dir.path());
    let b = body.to_str().unwrap();
    let exact = run(&["conductance", "--body", b, "--cells", "3", "--s", "0.1", "--seed", "1"]);
    let sweep = run(&["conductance", "--body", b, "--cells", "3", "--s", "0.1", "--mode", "sweep", "--seed", "1"]);
    let ratio = |o: &Output| -> f64 {
        let text = stdout(o);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("subset_bits,measure,flow,ratio"));
        lines.next().unwrap().rsplit(',').next().unwrap().parse().unwrap()
    };
    assert_eq!(exact.status.code(), Some(0));
    assert_eq!(sweep.status.code(), Some(0));
    assert!(ratio(&exact) <= ratio(&sweep) + 1e-12);
}

#[test]
fn bound_table() {
    let o = run(&["bound", "--n", "2", "--R", "1", "--M", "1", "--eps", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let main = text.lines().find(|l| l.starts_with("main-mixing-bound")).unwrap();
    assert!(main.contains("7.557000e3") && main.contains("shape-only"));
    let pinned = stdout(&run(&["bound", "--n", "2", "--eps", "0.25", "--C-main", "2"]));
    let main = pinned.lines().find(|l| l.starts_with("main-mixing-bound")).unwrap();
    assert!(main.contains("1.511400e4") && !main.contains("shape-only"));
    assert_eq!(run(&["bound", "--n", "1", "--eps", "0.25"]).status.code(), Some(3));
}

#[test]
fn verify_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = run(&["verify", "flow-symmetry", "--seed", "7", "--set", "instances=5", "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("PASS"));
    }
    for f in ["flow-symmetry_checks.csv", "flow-symmetry_report.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let manifest = std::fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(manifest.contains("config_hash"));
}

#[test]
fn verify_exit_codes() {
    // inconclusive: the noise floor at 2000 samples is above the bound
    let o = run(&["verify", "lemma11", "--seed", "1", "--set", "samples=2000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("INCONCLUSIVE: "));
    // fail: one step from the warm start is far from uniform
    let o = run(&[
        "verify", "uniformity", "--seed", "1", "--set", "chains=50000", "--set", "steps=1", "--set", "thinning=1",
        "--set", "reference=100000",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL: binned-tv-to-exact-sampler"));
    let o = run(&["verify", "bounds-table", "--seed", "0", "--set", "c_main=1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(run(&["verify", "nonsense", "--seed", "0"]).status.code(), Some(3));
    assert_eq!(run(&["verify", "pinsker", "--seed", "0", "--set", "bogus=1"]).status.code(), Some(3));
    assert_eq!(run(&["verify", "all", "--seed", "0", "--set", "instances=1"]).status.code(), Some(3));
}
