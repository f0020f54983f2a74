use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lsred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsred")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, out: &Path, rest: &[&str]) -> Output {
    let mut args = vec!["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(rest);
    lsred(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const COSINE: &str = "[problem]\nn = 2\np = 4.0\n[manifold]\nkind = \"flat-torus\"\n[coefficients]\na = \"1 + 0.5*cos(x1)\"\n";

#[test]
fn ground_state_prints_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let c4 = write_config(dir.path(), "p4.toml", "[problem]\nn = 1\np = 4.0\n[manifold]\nkind = \"flat-torus\"\n");
    let o = run(&c4, &dir.path().join("p4"), &["ground-state"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("int U^p = 5.333333"), "{}", stdout(&o));
    let c3 = write_config(dir.path(), "p3.toml", "[problem]\nn = 1\np = 3.0\n[manifold]\nkind = \"flat-torus\"\n");
    let o = run(&c3, &dir.path().join("p3"), &["ground-state"]);
    assert!(stdout(&o).contains("U(0) = 1.500000"), "{}", stdout(&o));
    for f in ["profile.csv", "profile.json", "manifest.json"] {
        assert!(dir.path().join("p3").join(f).exists(), "{f}");
    }
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_p = write_config(dir.path(), "p2.toml", "[problem]\nn = 1\np = 2.0\n[manifold]\nkind = \"flat-torus\"\n");
    let o = run(&bad_p, dir.path(), &["ground-state"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("need 2 < p < inf"), "{}", stderr(&o));

    let missing = write_config(dir.path(), "missing.toml", "[problem]\nn = 2\np = 4.0\n");
    let o = run(&missing, dir.path(), &["landscape"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing field `manifold`"), "{}", stderr(&o));

    let unknown = write_config(dir.path(), "unknown.toml", &format!("{COSINE}[mesh]\nnodes_per_epsilon = 3\n"));
    let o = run(&unknown, dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nodes_per_epsilon"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "ok.toml", COSINE);
    let o = run(&cfg, dir.path(), &["solve", "--epsilon-override", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("strictly decreasing"));
}

#[test]
fn constant_landscape_is_flagged_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "flat.toml",
        "[problem]\nn = 2\np = 4.0\n[manifold]\nkind = \"flat-torus\"\n[mesh]\nnodes_per_eps = 4.0\n[schedule]\neps = [0.2]\n[landscape]\nsamples = [2, 2]\n",
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &["landscape"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("fit_summary.json")).unwrap()).unwrap();
    assert_eq!(fit["degenerate"], true);
    let csv = std::fs::read_to_string(out.join("landscape_eps0.2.csv")).unwrap();
    assert!(csv.starts_with("xi_1,xi_2,Gamma,Jtilde,converged"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn solve_is_deterministic_and_restarts_from_its_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.toml", &format!("{COSINE}[schedule]\neps = [0.25]\n[solve]\nxi0 = [0.0, 3.0]\n"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&cfg, out, &["solve", "--seed", "3"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["continuation.csv", "solution_eps0.25.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config"]["output"]["seed"], 3);

    let seed = a.join("solution_eps0.25.csv");
    let resume = write_config(
        dir.path(),
        "resume.toml",
        &format!("{COSINE}[schedule]\neps = [0.25]\n[solve]\nseed = \"file\"\nseed_file = {:?}\n", seed.to_str().unwrap()),
    );
    let c = dir.path().join("c");
    let o = run(&resume, &c, &["solve"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(c.join("solve_reports.json")).unwrap()).unwrap();
    assert!(rep["reports"][0]["iterations"].as_u64().unwrap() <= 1);
}

#[test]
fn zero_seed_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", &format!("{COSINE}[schedule]\neps = [0.25]\n[solve]\nseed = \"zero\"\n"));
    let o = run(&cfg, dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("collapsed"), "{}", stderr(&o));
}

#[test]
fn lift_commands() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[problem]\nn = 1\np = 4.0\n[manifold]\nkind = \"revolution\"\n";
    let warped = write_config(dir.path(), "w.toml", &format!("{base}[coefficients]\nrecipe = \"warped\"\n[lift]\nsamples = 200\n"));
    let o = run(&warped, &dir.path().join("w"), &["lift"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("w/lift_report.csv").exists());

    let product = write_config(
        dir.path(),
        "f1.toml",
        "[problem]\nn = 1\np = 4.0\n[manifold]\nkind = \"revolution\"\ncurve = \"cylinder\"\ncurve_center = 1.5\n[coefficients]\nrecipe = \"warped\"\n[lift]\nsamples = 200\n",
    );
    let o = run(&product, &dir.path().join("f1"), &["lift"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let wrong = write_config(dir.path(), "x.toml", &format!("{base}[lift]\nkind = \"fiber-projection\"\ndilation = \"inverse-square\"\n"));
    assert_eq!(run(&wrong, &dir.path().join("x"), &["lift"]).status.code(), Some(1));
    let right = write_config(dir.path(), "y.toml", &format!("{base}[lift]\nkind = \"fiber-projection\"\n"));
    assert!(run(&right, &dir.path().join("y"), &["lift"]).status.success());
}

#[test]
fn verify_suite_and_its_controls() {
    let dir = tempfile::tempdir().unwrap();
    let out = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let clean = lsred(&["verify", "--out", &out("clean")]);
    assert!(clean.status.success(), "{}", stdout(&clean));
    assert!(stdout(&clean).contains("0 failures"));
    let fault = lsred(&["verify", "--out", &out("fault"), "--fault", "gamma-exponent"]);
    assert_eq!(fault.status.code(), Some(1));
    let fine = lsred(&["verify", "--out", &out("fine"), "--halve-mesh"]);
    assert!(fine.status.success());
    let passed = |d: &str| -> Vec<String> {
        std::fs::read_to_string(dir.path().join(d).join("verify.csv")).unwrap().lines().map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(passed("clean"), passed("fine"));
}
