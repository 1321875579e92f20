use std::io::Write;
use std::process::Command;

fn gof() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gof"))
}

fn write_sample(dir: &tempfile::TempDir, rows: &[f64]) -> std::path::PathBuf {
    let path = dir.path().join("x.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# dim=1").unwrap();
    for v in rows {
        writeln!(f, "{v}").unwrap();
    }
    path
}

#[test]
fn test_prints_decision_json() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<f64> = (0..80).map(|i| 2.0 + (i as f64) / 80.0).collect();
    let data = write_sample(&dir, &rows);
    let out = gof()
        .args(["test", "--method", "srpt", "--null", "gaussian:d=1", "--lambdas", "1e-3", "--seed", "4", "--data"])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reject"], true);
    assert_eq!(v["alpha"], 0.05);
    assert!(v["statistic"].as_f64().unwrap() >= v["critical_value"].as_f64().unwrap());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_sample(&dir, &[0.1, 0.2, 0.3]);
    let out = gof().args(["test", "--method", "nope", "--null", "gaussian:d=1", "--data"]).arg(&data).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "n = 10\nunknown_key = 1\n").unwrap();
    let out = gof().args(["power", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = gof().args(["reproduce", "fig9", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = gof().args(["test", "--null", "gaussian:d=1", "--data"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1.0\nnot-a-number\n").unwrap();
    let out = gof().args(["test", "--null", "gaussian:d=1", "--data"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    // two-dimensional data against a one-dimensional null
    let wide = dir.path().join("wide.csv");
    std::fs::write(&wide, "0.1,0.2\n0.3,0.4\n0.5,0.6\n").unwrap();
    let out = gof().args(["test", "--null", "gaussian:d=1", "--data"]).arg(&wide).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn power_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        r#"
null = "uniform:d=1"
alternative = "perturbed:d=1,p=2"
n = 30
reps = 5
seed = 9
[[methods]]
method = "oracle"
kernel = "spline"
lambdas = 1e-2
"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = gof().args(["power", "--reps", "3", "--threads", "1", "--config"]).arg(&cfg).arg("--out").arg(&csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains(",oracle,") && row.contains(",3,"), "{row}");
}
