use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CONFIG: &str = r#"
[cohort]
n_participants = 5
seed = 3
car_duration = 120.0
micro_duration = 90.0

[models.forest_grid]
n_trees = [10, 20]
max_depth = [4, "unlimited"]

[eval]
seeds = [1, 2]
"#;

const STAGES: [&str; 5] = ["generate", "extract", "train", "evaluate", "report"];

fn dualtake(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualtake"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("DUALTAKE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

fn setup(body: &str) -> (TempDir, PathBuf, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(&config, body).unwrap();
    let out = tmp.path().join("out");
    (tmp, config, out)
}

fn chain(config: &Path, out: &Path) {
    for stage in STAGES {
        ok(&dualtake(&[stage], config, out));
    }
    ok(&dualtake(&["manifest"], config, out));
}

/// Every regular file under `root`, keyed by relative path.
fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn full_chain_writes_every_artifact() {
    let (_tmp, config, out) = setup(CONFIG);
    chain(&config, &out);

    assert_eq!(fs::read_dir(out.join("sessions")).unwrap().count(), 40);
    for f in [
        "dataset.csv",
        "rejections.csv",
        "features.csv",
        "models/forest.json",
        "models/mlp.json",
        "models/tradaboost.json",
        "models/trace.csv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let report = out.join("report");
    for f in ["report.json", "metrics.csv", "summary.txt", "roc.csv", "trace.csv", "ttest.csv"] {
        assert!(report.join(f).is_file(), "{f}");
    }
    assert!(!out.join(".dualtake.lock").exists());

    let summary = fs::read_to_string(report.join("summary.txt")).unwrap();
    let rows: Vec<&str> =
        summary.lines().filter(|l| ["forest ", "mlp ", "tradaboost "].iter().any(|m| l.starts_with(m))).collect();
    assert_eq!(rows.len(), 3, "{summary}");

    let metrics = fs::read_to_string(report.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("# config_digest="));
    let models: BTreeSet<&str> = data_lines(&metrics).iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, BTreeSet::from(["forest", "mlp", "tradaboost"]));
    // 3 models × 2 seeds × 5 folds
    assert_eq!(data_lines(&metrics).len(), 30);

    let manifest = fs::read_to_string(out.join("features.csv")).unwrap();
    assert_eq!(data_lines(&manifest).len(), 52);
}

#[test]
fn trace_has_ten_rounds_per_fold() {
    let (_tmp, config, out) = setup(CONFIG);
    chain(&config, &out);
    let trace = fs::read_to_string(out.join("report/trace.csv")).unwrap();
    let mut per_fold = std::collections::BTreeMap::new();
    for line in data_lines(&trace) {
        let cols: Vec<&str> = line.split(',').collect();
        *per_fold.entry((cols[0].to_string(), cols[1].to_string())).or_insert(0) += 1;
        let share: f64 = cols[5].parse().unwrap();
        assert!(share > 0.0 && share < 1.0);
    }
    assert_eq!(per_fold.len(), 10);
    assert!(per_fold.values().all(|&n| n == 10));

    let trained = fs::read_to_string(out.join("models/trace.csv")).unwrap();
    assert_eq!(data_lines(&trained).len(), 10);
}

#[test]
fn reruns_are_byte_identical() {
    let (_tmp, config, out_a) = setup(CONFIG);
    let out_b = out_a.with_file_name("again");
    chain(&config, &out_a);
    chain(&config, &out_b);
    assert_eq!(snapshot(&out_a), snapshot(&out_b));
}

#[test]
fn seed_flag_overrides_the_cohort_seed() {
    let (_tmp, config, out) = setup(CONFIG);
    let other = out.with_file_name("other");
    ok(&dualtake(&["generate"], &config, &out));
    ok(&dualtake(&["generate", "--seed", "4"], &config, &other));
    assert_ne!(snapshot(&out.join("sessions")), snapshot(&other.join("sessions")));
    let first = fs::read_dir(other.join("sessions")).unwrap().next().unwrap().unwrap().path();
    assert!(fs::read_to_string(first).unwrap().contains("cohort_seed=4"));
}

#[test]
fn existing_artifacts_need_overwrite() {
    let (_tmp, config, out) = setup(CONFIG);
    ok(&dualtake(&["manifest"], &config, &out));
    let path = out.join("features.csv");
    fs::write(&path, "sentinel").unwrap();

    let refused = dualtake(&["manifest"], &config, &out);
    assert_eq!(refused.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--overwrite"));
    assert_eq!(fs::read_to_string(&path).unwrap(), "sentinel");

    ok(&dualtake(&["manifest", "--overwrite"], &config, &out));
    assert_ne!(fs::read_to_string(&path).unwrap(), "sentinel");
}

#[test]
fn missing_inputs_exit_with_3() {
    let (_tmp, config, out) = setup(CONFIG);
    for stage in ["extract", "train", "evaluate", "report"] {
        let o = dualtake(&[stage], &config, &out);
        assert_eq!(o.status.code(), Some(3), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn bad_configs_exit_with_2() {
    let cases = [
        ("[cohort]\nseed = 1\n", "cohort.n_participants"),
        ("[cohort]\nn_participants = 5\nseed = 1\nepochz = 3\n", "epochz"),
        ("[cohort]\nn_participants = \"five\"\nseed = 1\n", "n_participants"),
        ("[cohort]\nn_participants = 3\nseed = 1\n", "participants"),
        ("[cohort]\nn_participants = 5\nseed = 1\n[models.mlp]\nepochs = 0\n", "epochs"),
        ("not toml at all [", ""),
    ];
    for (body, needle) in cases {
        let (_tmp, config, out) = setup(body);
        let o = dualtake(&["generate"], &config, &out);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{body}: {err}");
        assert!(err.contains(needle), "{body}: {err}");
        assert!(!out.join("sessions").exists());
    }
    let (_tmp, _, out) = setup(CONFIG);
    let o = dualtake(&["generate"], Path::new("/nonexistent/run.toml"), &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let (_tmp, config, out) = setup(CONFIG);
    let o = Command::new(env!("CARGO_BIN_EXE_dualtake"))
        .args(["manifest", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .env("DUALTAKE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn held_lock_blocks_a_second_run() {
    let (_tmp, config, out) = setup(CONFIG);
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".dualtake.lock"), "").unwrap();
    let o = dualtake(&["manifest"], &config, &out);
    assert_ne!(o.status.code(), Some(0));
    assert!(!out.join("features.csv").exists());
}
