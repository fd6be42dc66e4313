use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
methods = ["mlp", "rbf", "lssvm", "anfis"]

[data.synthetic]
samples = 400

[mlp]
max_cycles = 30

[rbf]
centers = 8
kmeans_iters = 20

[anfis]
epochs = [3, 3, 3, 3]
"#;

fn steamreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steamreg"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("small.toml"), SMALL).unwrap();
    tmp
}

#[test]
fn full_workflow() {
    let tmp = setup();
    let dir = tmp.path();
    let base = ["--config", "small.toml", "--out", "run"];

    let o = steamreg(dir, &[&base[..], &["prep"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("removed: 0"));

    let o = steamreg(dir, &[&base[..], &["train", "--method", "lssvm"]].concat());
    assert!(o.status.success());
    let n = fs::read_dir(dir.join("run/models/lssvm"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("member_"))
        .count();
    assert_eq!(n, 4);

    let o = steamreg(dir, &[&base[..], &["bench"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    for m in ["mean-predictor", "mlp", "rbf", "lssvm", "anfis"] {
        assert!(table.contains(m), "{m} missing from\n{table}");
    }

    for (n, rows) in [("60", 241), ("1", 5)] {
        let o = steamreg(dir, &[&base[..], &["plot-data", "--model", "run/models/mlp", "-n", n, "--output", "p.csv"]].concat());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(fs::read_to_string(dir.join("p.csv")).unwrap().lines().count(), rows);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = setup();
    let dir = tmp.path();
    for out in ["a", "b"] {
        for cmd in ["prep", "bench"] {
            let o = steamreg(dir, &["--config", "small.toml", "--out", out, "--seed", "7", cmd]);
            assert!(o.status.success());
        }
    }
    for f in ["bench/report.json", "models/mlp/model.json", "models/anfis/member_03.json", "prep/train.csv"] {
        let a = fs::read(dir.join("a").join(f)).unwrap_or_else(|_| panic!("{f}"));
        assert_eq!(a, fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn synth_writes_requested_rows() {
    let tmp = setup();
    let o = steamreg(tmp.path(), &["synth", "--samples", "50", "--noise", "0", "--output", "s.csv"]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(tmp.path().join("s.csv")).unwrap().lines().count(), 51);
}

#[test]
fn exit_codes() {
    let tmp = setup();
    let dir = tmp.path();
    assert_eq!(steamreg(dir, &["train", "--method", "svm"]).status.code(), Some(2));
    fs::write(dir.join("bad.toml"), "[bayesian]\nstep_size = -1.0\n").unwrap();
    let o = steamreg(dir, &["--config", "bad.toml", "prep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bayesian.step_size"));
    fs::write(dir.join("typo.toml"), "[mlp]\nhiden = 8\n").unwrap();
    assert_eq!(steamreg(dir, &["--config", "typo.toml", "prep"]).status.code(), Some(2));
    assert_eq!(steamreg(dir, &["--config", "missing.toml", "prep"]).status.code(), Some(4));
    assert_eq!(steamreg(dir, &["--out", "empty", "bench"]).status.code(), Some(4));
    assert_eq!(steamreg(dir, &["prep", "--input", "nope.csv"]).status.code(), Some(4));
}
