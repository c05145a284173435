//! End-to-end tests of the `coms` binary: every subcommand, exit codes,
//! file formats, and byte-for-byte reproducibility of a small pipeline.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coms"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to spawn coms")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// data -> train x2 -> sample -> eval -> plot, small sizes throughout.
fn run_pipeline(dir: &Path) {
    assert_ok(&run_in(
        dir,
        &["data", "--n", "200", "--seed", "0", "--out", "d.json", "--plot", "d.svg"],
    ));
    assert_ok(&run_in(
        dir,
        &[
            "train", "--variant", "stochastic", "--alpha", "50", "--data", "d.json",
            "--epochs", "4", "--hidden", "32", "--k", "20", "--seed", "1",
            "--out", "energy.json",
        ],
    ));
    assert_ok(&run_in(
        dir,
        &[
            "train", "--variant", "oracle", "--data", "d.json", "--epochs", "40",
            "--hidden", "32", "--lr", "3e-3", "--seed", "2", "--out", "oracle.json",
        ],
    ));
    assert_ok(&run_in(
        dir,
        &[
            "sample", "--ckpt", "energy.json", "--sampler", "tilted", "--oracle",
            "oracle.json", "--w", "5", "--n", "32", "--steps", "500", "--seed", "3",
            "--out", "s.json",
        ],
    ));
    assert_ok(&run_in(
        dir,
        &["eval", "--samples", "s.json", "--out", "r.json"],
    ));
    assert_ok(&run_in(
        dir,
        &["plot", "scatter", "--data", "d.json", "--samples", "s.json", "--out", "fig.svg"],
    ));
    assert_ok(&run_in(
        dir,
        &["plot", "quiver", "--ckpt", "energy.json", "--out", "q.svg"],
    ));
}

#[test]
fn pipeline_runs_and_reruns_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_pipeline(dir_a.path());
    run_pipeline(dir_b.path());
    for name in [
        "d.json",
        "d.svg",
        "energy.json",
        "energy.metrics.json",
        "oracle.json",
        "s.json",
        "r.json",
        "fig.svg",
        "q.svg",
        "d.config.json",
        "energy.config.json",
        "s.config.json",
        "r.config.json",
    ] {
        assert_eq!(
            read(dir_a.path(), name),
            read(dir_b.path(), name),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn data_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["data", "--n", "123", "--seed", "5", "--out", "d.json"],
    ));
    let text = String::from_utf8(read(dir.path(), "d.json")).unwrap();
    let records: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(records.len(), 123);
    assert!(records[0].get("x").is_some() && records[0].get("y").is_some());
}

#[test]
fn data_rejects_negative_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["data", "--n", "-1", "--out", "d.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("error") && stderr.contains("Usage"),
        "unhelpful message: {stderr}"
    );
}

#[test]
fn train_oracle_alpha_conflict_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["data", "--n", "32", "--seed", "0", "--out", "d.json"],
    ));
    let out = run_in(
        dir.path(),
        &[
            "train", "--variant", "oracle", "--alpha", "50", "--data", "d.json",
            "--epochs", "1", "--out", "m.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn sample_tilted_without_oracle_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sample", "--ckpt", "m.json", "--sampler", "tilted", "--out", "s.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--oracle"));
}

#[test]
fn eval_empty_samples_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("empty.json"),
        r#"{"spec":{"sampler":{"kind":"gradient_ascent","eps":0.01,"steps":1},"init":{"kind":"prior","low":-1.5,"high":2.0},"seed":0},"seed":0,"checkpoint_hash":"","samples":[]}"#,
    )
    .unwrap();
    let out = run_in(dir.path(), &["eval", "--samples", "empty.json", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_honors_tau_override() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["data", "--n", "64", "--seed", "1", "--out", "d.json"],
    ));
    // Use the dataset itself as samples.
    let points: Vec<serde_json::Value> = serde_json::from_slice(&read(dir.path(), "d.json")).unwrap();
    let xs: Vec<serde_json::Value> = points.iter().map(|p| p["x"].clone()).collect();
    std::fs::write(
        dir.path().join("s.json"),
        format!(
            r#"{{"spec":{{"sampler":{{"kind":"gradient_ascent","eps":0.01,"steps":1}},"init":{{"kind":"prior","low":-1.5,"high":2.0}},"seed":0}},"seed":0,"checkpoint_hash":"","samples":{}}}"#,
            serde_json::to_string(&xs).unwrap()
        ),
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["eval", "--samples", "s.json", "--tau", "0.25", "--out", "r.json"],
    );
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path(), "r.json")).unwrap();
    assert_eq!(report["threshold"], 0.25);
    // Dataset points sit on the spiral, so they all pass at a wide tau.
    assert!(report["validity_rate"].as_f64().unwrap() > 0.95);
}

#[test]
fn scatter_has_marker_per_record() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["data", "--n", "37", "--seed", "2", "--out", "d.json"],
    ));
    assert_ok(&run_in(
        dir.path(),
        &["plot", "scatter", "--data", "d.json", "--out", "fig.svg"],
    ));
    let svg = String::from_utf8(read(dir.path(), "fig.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="data""#).count(), 37);
}

#[test]
fn quiver_of_zero_model_renders_dots() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("zero.json"),
        r#"{"input_dim":2,"hidden_dim":2,"activation":"tanh","w1":[0.0,0.0,0.0,0.0],"b1":[0.0,0.0],"w2":[0.0,0.0],"b2":0.0,"meta":{"variant":"oracle_only","alpha":0.0,"seed":0,"steps_trained":0}}"#,
    )
    .unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["plot", "quiver", "--ckpt", "zero.json", "--grid", "10", "--out", "q.svg"],
    ));
    let svg = String::from_utf8(read(dir.path(), "q.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="arrow-dot""#).count(), 100);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"spiral": {"n": 50, "seed": 9}, "outputs": {"dataset": "from_config.json"}}"#,
    )
    .unwrap();
    assert_ok(&run_in(dir.path(), &["--config", "run.json", "data"]));
    let records: Vec<serde_json::Value> =
        serde_json::from_slice(&read(dir.path(), "from_config.json")).unwrap();
    assert_eq!(records.len(), 50);

    // Flag wins over the config value.
    assert_ok(&run_in(
        dir.path(),
        &["--config", "run.json", "data", "--n", "7", "--out", "d2.json"],
    ));
    let records: Vec<serde_json::Value> = serde_json::from_slice(&read(dir.path(), "d2.json")).unwrap();
    assert_eq!(records.len(), 7);
    // The resolved config next to the output records the effective spec.
    let resolved: serde_json::Value =
        serde_json::from_slice(&read(dir.path(), "d2.config.json")).unwrap();
    assert_eq!(resolved["spiral"]["n"], 7);
    assert_eq!(resolved["spiral"]["seed"], 9);
}

#[test]
fn config_with_unknown_keys_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"spiral": {"m": 50}}"#).unwrap();
    let out = run_in(
        dir.path(),
        &["--config", "bad.json", "data", "--out", "d.json"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_checkpoint_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["sample", "--ckpt", "nope.json", "--sampler", "langevin", "--n", "1", "--steps", "1", "--out", "s.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

fn checkpoint_hash_in_samples(dir: &Path) -> (String, String) {
    let set: serde_json::Value = serde_json::from_slice(&read(dir, "s.json")).unwrap();
    let ckpt_bytes = read(dir, "energy.json");
    let expect = {
        use sha2::Digest;
        let d = sha2::Sha256::digest(&ckpt_bytes);
        d.iter().map(|b| format!("{b:02x}")).collect::<String>()
    };
    (
        set["checkpoint_hash"].as_str().unwrap().to_string(),
        expect,
    )
}

#[test]
fn samples_record_checkpoint_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(dir.path());
    let (recorded, expected) = checkpoint_hash_in_samples(dir.path());
    assert_eq!(recorded, expected);
}

#[test]
fn checkpoint_meta_round_trips_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["data", "--n", "48", "--seed", "3", "--out", "d.json"],
    ));
    assert_ok(&run_in(
        dir.path(),
        &[
            "train", "--variant", "original", "--alpha", "2", "--data", "d.json",
            "--epochs", "2", "--hidden", "8", "--k", "5", "--seed", "11",
            "--out", "m.json",
        ],
    ));
    let ckpt: serde_json::Value = serde_json::from_slice(&read(dir.path(), "m.json")).unwrap();
    assert_eq!(ckpt["meta"]["variant"], "original");
    assert_eq!(ckpt["meta"]["alpha"], 2.0);
    assert_eq!(ckpt["meta"]["seed"], 11);
    assert_eq!(ckpt["activation"], "tanh");
    assert_eq!(ckpt["hidden_dim"], 8);
    let _: PathBuf = dir.path().join("m.metrics.json");
    let metrics: Vec<serde_json::Value> =
        serde_json::from_slice(&read(dir.path(), "m.metrics.json")).unwrap();
    assert_eq!(metrics.len(), 2);
    assert!(metrics[0]["total"].is_f64());
}
