use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowcast::lifecycle::{encode_model, load_model};
use flowcast::{NetworkModel, NetworkSpec};

const SMALL_NETWORK: &str = "
[network]
input_lags = 5
input_loops = 9
conv_filters = 8
conv_kernel = 2
lstm_cells = 10
dense_units = 8
stateful = true
";

fn flowcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowcast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = flowcast(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn road(name: &str, days: usize, noise_std: f64, seed: u64) -> String {
    format!(
        "road_name = \"{name}\"
start_date = \"2017-01-02\"
days = {days}
weekend_scale = 0.7
drift = 0.0
noise_std = {noise_std}
propagation_lag = 1
seed = {seed}

[base_profile]
night = 40.0
midday = 260.0
morning_peak = 220.0
evening_peak = 180.0
"
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

/// sha256 of every file under `dir`, keyed by relative path.
fn hashes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    use sha2::{Digest, Sha256};
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(
                path.strip_prefix(dir).unwrap().to_path_buf(),
                Sha256::digest(fs::read(&path).unwrap()).to_vec(),
            );
        }
    }
    out
}

fn generate(dir: &Path, configs: &[(&str, String)], out: &str) {
    let mut args = vec!["generate".to_string()];
    for (name, text) in configs {
        args.push("--config".into());
        args.push(write(dir, &format!("{name}.toml"), text));
    }
    args.extend(["--out".into(), out.into()]);
    ok(dir, &args.iter().map(String::as_str).collect::<Vec<_>>());
}

fn losses(stdout: &str) -> (f64, f64) {
    let line = stdout
        .lines()
        .find(|l| l.starts_with("initial loss"))
        .expect("loss summary");
    let v: Vec<f64> = line
        .split_whitespace()
        .filter_map(|w| w.parse().ok())
        .collect();
    (v[0], v[1])
}

#[test]
fn generate_is_reproducible_and_counts_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(dir, &[("a", road("a", 8, 12.0, 3))], "one");
    generate(dir, &[("a", road("a", 8, 12.0, 3))], "two");
    let (one, two) = (hashes(&dir.join("one")), hashes(&dir.join("two")));
    assert_eq!(one[Path::new("a.csv")], two[Path::new("a.csv")]);
    assert_eq!(one[Path::new("a.manifest")], two[Path::new("a.manifest")]);

    let csv = fs::read_to_string(dir.join("one/a.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, 9 * 768);
    let manifest = fs::read_to_string(dir.join("one/a.manifest")).unwrap();
    assert_eq!(manifest.lines().count(), 9);

    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("one/run.json")).unwrap()).unwrap();
    assert_eq!(run["command"], "generate");
    assert_eq!(run["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let text = road("a", 8, 1.0, 1).replace("noise_std = 1\n", "");
    let cfg = write(tmp.path(), "a.toml", &text);
    let out = flowcast(tmp.path(), &["generate", "--config", &cfg, "--out", "data"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("noise_std"), "{err}");
}

#[test]
fn outputs_are_never_overwritten_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(dir, &[("a", road("a", 8, 5.0, 1))], "data");
    let cfg = write(dir, "a.toml", &road("a", 8, 5.0, 2));
    let before = hashes(&dir.join("data"));
    let out = flowcast(dir, &["generate", "--config", &cfg, "--out", "data"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    assert_eq!(hashes(&dir.join("data")), before);
    ok(
        dir,
        &["generate", "--config", &cfg, "--out", "data", "--force"],
    );
    assert_ne!(hashes(&dir.join("data")), before);
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(dir, &[("a", road("a", 8, 5.0, 1))], "data");
    let train = write(
        dir,
        "train.toml",
        &format!("epochs = 1\nseed = 1\n{SMALL_NETWORK}"),
    );
    let code = |args: &[&str]| flowcast(dir, args).status.code();

    assert_eq!(
        code(&[
            "train",
            "--data",
            "missing.csv",
            "--config",
            &train,
            "--out",
            "m.fcw"
        ]),
        Some(5)
    );
    // A 365-day year does not fit an 8-day dataset.
    assert_eq!(
        code(&[
            "train",
            "--data",
            "data/a.csv",
            "--config",
            &train,
            "--out",
            "m.fcw"
        ]),
        Some(4)
    );
    let bad = write(dir, "bad.toml", "epochs = 0\nseed = 1\n");
    assert_eq!(
        code(&[
            "train",
            "--data",
            "data/a.csv",
            "--config",
            &bad,
            "--out",
            "m.fcw"
        ]),
        Some(3)
    );
    assert_eq!(code(&["train", "--data", "data/a.csv"]), Some(2));
    assert_eq!(code(&["no-such-command"]), Some(2));

    ok(
        dir,
        &[
            "train",
            "--data",
            "data/a.csv",
            "--config",
            &train,
            "--scale-days",
            "4",
            "--out",
            "m.fcw",
        ],
    );
    let bytes = fs::read(dir.join("m.fcw")).unwrap();
    fs::write(dir.join("cut.fcw"), &bytes[..bytes.len() / 2]).unwrap();
    fs::copy(dir.join("m.fcw.norm.json"), dir.join("cut.fcw.norm.json")).unwrap();
    assert_eq!(
        code(&["transfer", "--model", "cut.fcw", "--out", "t.fcw"]),
        Some(4)
    );
}

#[test]
fn null_training_saves_the_initial_model_and_reruns_match() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(dir, &[("a", road("a", 8, 5.0, 1))], "data");
    write(
        dir,
        "null.toml",
        &format!("epochs = 1\nlearning_rate = 0.0\nseed = 77\n{SMALL_NETWORK}"),
    );
    let args = |out: &'static str| {
        [
            "train",
            "--data",
            "data/a.csv",
            "--config",
            "null.toml",
            "--scale-days",
            "4",
            "--force",
            "--out",
            out,
        ]
    };
    ok(dir, &args("m.fcw"));
    let spec = NetworkSpec {
        conv_filters: 8,
        lstm_cells: 10,
        dense_units: 8,
        ..NetworkSpec::standard()
    };
    let fresh = encode_model(&NetworkModel::init(spec, 77).unwrap());
    assert_eq!(fs::read(dir.join("m.fcw")).unwrap(), fresh);

    let before = hashes(dir);
    ok(dir, &args("m.fcw"));
    assert_eq!(hashes(dir), before);

    ok(
        dir,
        &[
            "train",
            "--data",
            "data/a.csv",
            "--config",
            "null.toml",
            "--scale-days",
            "4",
            "--seed",
            "78",
            "--out",
            "n.fcw",
        ],
    );
    assert_ne!(fs::read(dir.join("n.fcw")).unwrap(), fresh);
}

#[test]
fn training_overfits_one_day() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(dir, &[("a", road("a", 8, 0.0, 1))], "data");
    // With one-day years, year1 is the first day alone; per-window updates
    // give 500 epochs enough steps on it.
    write(
        dir,
        "overfit.toml",
        &format!("epochs = 500\nlearning_rate = 1e-2\nseed = 1\nbatch_policy = \"window\"\n{SMALL_NETWORK}"),
    );
    let stdout = ok(
        dir,
        &[
            "train",
            "--data",
            "data/a.csv",
            "--config",
            "overfit.toml",
            "--scale-days",
            "1",
            "--out",
            "m.fcw",
        ],
    );
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("epoch ")).count(),
        500
    );
    let (first, last) = losses(&stdout);
    assert!(last < 0.01 * first, "initial {first} final {last}");
}

#[test]
fn transfer_with_and_without_retraining() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(
        dir,
        &[
            ("donor", road("donor", 16, 5.0, 1)),
            ("target", road("target", 16, 5.0, 2)),
        ],
        "data",
    );
    write(
        dir,
        "train.toml",
        &format!("epochs = 2\nlearning_rate = 1e-2\nseed = 1\n{SMALL_NETWORK}"),
    );
    write(dir, "retrain.toml", "epochs = 3\nlearning_rate = 1e-2\n");
    write(dir, "frozen.toml", "epochs = 3\nlearning_rate = 0.0\n");
    ok(
        dir,
        &[
            "train",
            "--data",
            "data/donor.csv",
            "--config",
            "train.toml",
            "--scale-days",
            "8",
            "--out",
            "donor.fcw",
        ],
    );
    let source = load_model(fs::File::open(dir.join("donor.fcw")).unwrap()).unwrap();
    let weights = |name: &str| load_model(fs::File::open(dir.join(name)).unwrap()).unwrap();

    ok(
        dir,
        &["transfer", "--model", "donor.fcw", "--out", "copy.fcw"],
    );
    assert!(weights("copy.fcw").same_weights(&source));
    assert_eq!(
        fs::read(dir.join("copy.fcw.norm.json")).unwrap(),
        fs::read(dir.join("donor.fcw.norm.json")).unwrap()
    );

    let retrain = |out: &str, cfg: &str| {
        ok(
            dir,
            &[
                "transfer",
                "--model",
                "donor.fcw",
                "--data",
                "data/target.csv",
                "--config",
                cfg,
                "--scale-days",
                "8",
                "--out",
                out,
            ],
        )
    };
    retrain("r1.fcw", "retrain.toml");
    retrain("r2.fcw", "retrain.toml");
    assert!(!weights("r1.fcw").same_weights(&source));
    assert_eq!(
        fs::read(dir.join("r1.fcw")).unwrap(),
        fs::read(dir.join("r2.fcw")).unwrap()
    );
    assert_ne!(
        fs::read(dir.join("r1.fcw.norm.json")).unwrap(),
        fs::read(dir.join("donor.fcw.norm.json")).unwrap()
    );

    retrain("r0.fcw", "frozen.toml");
    assert!(weights("r0.fcw").same_weights(&source));

    let out = flowcast(
        dir,
        &[
            "transfer",
            "--model",
            "donor.fcw",
            "--config",
            "retrain.toml",
            "--out",
            "x.fcw",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_writes_a_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(dir, &[("a", road("a", 16, 5.0, 1))], "data");
    write(
        dir,
        "train.toml",
        &format!("epochs = 2\nlearning_rate = 1e-2\nseed = 1\n{SMALL_NETWORK}"),
    );
    ok(
        dir,
        &[
            "train",
            "--data",
            "data/a.csv",
            "--config",
            "train.toml",
            "--scale-days",
            "8",
            "--out",
            "m.fcw",
        ],
    );
    let stdout = ok(
        dir,
        &[
            "evaluate",
            "--model",
            "m.fcw",
            "--data",
            "data/a.csv",
            "--scale-days",
            "8",
            "--out",
            "off.csv",
        ],
    );
    assert!(
        stdout.contains("offline test_year2 (768 slots)"),
        "{stdout}"
    );
    let csv = fs::read_to_string(dir.join("off.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 768);
    assert!(
        csv.starts_with("slot,timestamp,observed,predicted,r2_window\n768,2017-01-10T00:00:00,")
    );

    ok(
        dir,
        &[
            "evaluate",
            "--model",
            "m.fcw",
            "--data",
            "data/a.csv",
            "--scale-days",
            "8",
            "--online-lr",
            "0",
            "--out",
            "frozen.csv",
        ],
    );
    assert_eq!(
        fs::read(dir.join("off.csv")).unwrap(),
        fs::read(dir.join("frozen.csv")).unwrap()
    );
    ok(
        dir,
        &[
            "evaluate",
            "--model",
            "m.fcw",
            "--data",
            "data/a.csv",
            "--scale-days",
            "8",
            "--online-lr",
            "1e-2",
            "--out",
            "on.csv",
        ],
    );
    assert_ne!(
        fs::read(dir.join("off.csv")).unwrap(),
        fs::read(dir.join("on.csv")).unwrap()
    );
}

fn scenario_config(dir: &Path) -> String {
    let section = |name: &str, epochs: usize, seed: usize| {
        format!("[{name}]\nepochs = {epochs}\nlearning_rate = 1e-2\nseed = {seed}\n")
    };
    let text = format!(
        "year_days = 8\n{}\n{}{}{}{}",
        SMALL_NETWORK.trim_start(),
        section("donor_training", 3, 1),
        section("target_training", 3, 1),
        section("retrain", 2, 3),
        section("scratch", 2, 4)
    );
    write(dir, "scenarios.toml", &text)
}

#[test]
fn scenario_run_writes_sixteen_traces_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let roads: Vec<(&str, String)> = vec![
        ("d1", road("d1", 16, 5.0, 1)),
        ("d2", road("d2", 16, 5.0, 2)),
        ("d3", road("d3", 16, 5.0, 3)),
        ("target", road("target", 16, 5.0, 4)),
    ];
    generate(dir, &roads, "data");
    scenario_config(dir);
    let args = |out: &'static str| {
        [
            "run-scenarios",
            "--donors",
            "data/d1.csv",
            "data/d2.csv",
            "data/d3.csv",
            "--target",
            "data/target.csv",
            "--config",
            "scenarios.toml",
            "--force",
            "--out",
            out,
        ]
    };
    ok(dir, &args("reports"));
    let first = hashes(&dir.join("reports"));
    assert_eq!(first.len(), 16 + 2);
    assert_eq!(
        first
            .keys()
            .filter(|p| p
                .to_str()
                .unwrap()
                .starts_with(|c: char| c.is_ascii_digit()))
            .count(),
        16
    );
    let summary = fs::read_to_string(dir.join("reports/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 17);
    let slots: Vec<&str> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    let ps2: Vec<&str> = summary
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("PS2"))
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(ps2, vec!["864"; 8]);
    assert_eq!(slots.iter().filter(|s| **s == "768").count(), 8);

    ok(dir, &args("reports"));
    assert_eq!(hashes(&dir.join("reports")), first);
}

#[test]
fn identical_donor_control() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate(
        dir,
        &[
            ("twin", road("twin", 16, 5.0, 9)),
            ("target", road("target", 16, 5.0, 9)),
        ],
        "data",
    );
    scenario_config(dir);
    ok(
        dir,
        &[
            "run-scenarios",
            "--donors",
            "data/twin.csv",
            "--target",
            "data/target.csv",
            "--config",
            "scenarios.toml",
            "--out",
            "reports",
        ],
    );
    let summary = fs::read_to_string(dir.join("reports/summary.csv")).unwrap();
    let mean = |scenario: &str| -> f64 {
        summary
            .lines()
            .find(|l| l.starts_with(&format!("{scenario},offline,")))
            .unwrap()
            .split(',')
            .nth(4)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((mean("PS1") - mean("PS3")).abs() <= 0.02, "{summary}");
}
