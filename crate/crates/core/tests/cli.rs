use std::path::Path;

use cmab::cli::run_cli;

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["cmab"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

const TWO_ARM: &str = r#"{"arms": [
    {"reward": {"kind": "bernoulli", "params": {"p": 0.8}}, "cost": {"kind": "bernoulli", "params": {"p": 0.4}}},
    {"reward": {"kind": "bernoulli", "params": {"p": 0.5}}, "cost": {"kind": "bernoulli", "params": {"p": 0.6}}}
], "constraint": 0.5}"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn complexity_reports_h() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", TWO_ARM);
    let (code, out, _) = cli(&["complexity", "--instance", &inst, "--epsilon", "0.1"]);
    assert_eq!(code, 0);
    assert!(out.contains("H = 125.000000"), "{out}");
}

#[test]
fn bound_is_monotone_past_threshold() {
    let (code, out, _) = cli(&[
        "bound",
        "--arms",
        "2",
        "--h",
        "125",
        "--horizons",
        "2000,4000,8000,16000,32000",
    ]);
    assert_eq!(code, 0);
    let raws: Vec<f64> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(raws.len(), 5);
    assert!(raws.windows(2).all(|w| w[0] <= w[1]), "{raws:?}");
}

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "inst.json", TWO_ARM);
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"instance": "inst.json", "policy": {"policy": "capt", "epsilon": 0.1}, "T": 500, "replications": 20, "seed": 1}"#,
    );
    let out = dir.path().join("res");
    let (code, _, err) = cli(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    for f in ["aggregate.json", "curves.csv", "meta.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let (code, _, err) = cli(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");

    // tampering with the stored aggregate is detected
    let agg = out.join("aggregate.json");
    let text = std::fs::read_to_string(&agg)
        .unwrap()
        .replacen("\"seed\": 1", "\"seed\": 2", 1);
    std::fs::write(&agg, text).unwrap();
    let (code, _, _) = cli(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn invalid_configs_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "inst.json", TWO_ARM);
    let short = write(
        dir.path(),
        "short.json",
        r#"{"instance": "inst.json", "policy": {"policy": "capt"}, "T": 1}"#,
    );
    let (code, _, err) = cli(&[
        "run",
        "--config",
        &short,
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains('T'), "{err}");

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"instance": {"arms": [{"reward": {"kind": "bernoulli", "params": {"p": 1.5}}, "cost": {"kind": "constant", "params": {"value": 0.1}}}, {"reward": {"kind": "constant", "params": {"value": 0.1}}, "cost": {"kind": "constant", "params": {"value": 0.1}}}], "constraint": 0.5}, "policy": {"policy": "uniform"}, "T": 10}"#,
    );
    let (code, _, err) = cli(&[
        "run",
        "--config",
        &bad,
        "--out",
        dir.path().join("y").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("arms[0]"), "{err}");

    let (code, _, _) = cli(&["run", "--config", "/nonexistent.json"]);
    assert_eq!(code, 2);
}
