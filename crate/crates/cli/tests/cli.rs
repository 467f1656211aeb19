use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gk(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghostkitchen"))
        .args(args)
        .env("GHOSTKITCHEN_OUT", root.join("runs"))
        .current_dir(root)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

#[test]
fn generate_is_reproducible_and_lands_under_the_output_root() {
    let tmp = TempDir::new().unwrap();
    let a = gk(tmp.path(), &["generate", "--preset", "small", "--days", "300", "--seed", "4"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let dir = tmp.path().join("runs/generate-small-s4");
    assert_eq!(files(&dir).len(), 301);
    let first = fs::read(dir.join("day-0123.json")).unwrap();
    let m1 = fs::read(dir.join("manifest.json")).unwrap();
    assert_eq!(code(&gk(tmp.path(), &["generate", "--preset", "small", "--days", "300", "--seed", "4"])), 0);
    assert_eq!(fs::read(dir.join("day-0123.json")).unwrap(), first);
    assert_eq!(fs::read(dir.join("manifest.json")).unwrap(), m1);
    let m = manifest(&dir);
    assert_eq!(m["command"], "generate");
    assert_eq!(m["preset"], "small");
    assert_eq!(m["seed"], 4);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 300);
}

#[test]
fn generate_without_days_writes_only_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("empty");
    let o = gk(tmp.path(), &["generate", "--days", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(files(&out), vec!["manifest.json"]);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&gk(tmp.path(), &["generate", "--preset", "tiny", "--days", "1"])), 2);
    assert_eq!(code(&gk(tmp.path(), &["benchmark", "--policies", "fifo,ai", "--days", "1"])), 2);
    assert_eq!(code(&gk(tmp.path(), &["benchmark", "--policies", "greedy", "--days", "1"])), 2);
    fs::write(tmp.path().join("bad.toml"), "[instance.problem]\ntua = 3\n").unwrap();
    let o = gk(tmp.path(), &["generate", "--config", "bad.toml", "--days", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("instance.problem.tua"));
    fs::write(tmp.path().join("net.json"), "{\"layers\": []}").unwrap();
    let o = gk(
        tmp.path(),
        &["benchmark", "--policies", "ai", "--checkpoint", "net.json", "--days", "1"],
    );
    assert_eq!(code(&o), 2);
    let o = gk(tmp.path(), &["train", "--fine-tune", "missing.json", "--episodes", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn flags_override_the_file_which_overrides_the_preset() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("cfg.toml"),
        "preset = \"small\"\nseed = 9\n[instance.problem]\ntau = 25.0\n",
    )
    .unwrap();
    let out = tmp.path().join("g");
    let o = gk(
        tmp.path(),
        &["generate", "--config", "cfg.toml", "--preset", "desk", "--days", "1", "--out", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["preset"], "desk");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config_path"], "cfg.toml");
    assert_eq!(m["settings"]["instance"]["problem"]["tau"], 25.0);
    assert_eq!(m["settings"]["instance"]["problem"]["fleet_size"], 2);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn training_writes_a_checkpoint_and_one_curve_row_per_episode() {
    let tmp = TempDir::new().unwrap();
    let zero = tmp.path().join("t0");
    let o = gk(tmp.path(), &["train", "--episodes", "0", "--out", zero.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(zero.join("curve.csv")).unwrap().lines().count(), 1);
    assert!(zero.join("checkpoint.json").exists());

    let three = tmp.path().join("t3");
    let o = gk(
        tmp.path(),
        &["train", "--episodes", "3", "--iterations", "3", "--out", three.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve = fs::read_to_string(three.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    assert!(curve.starts_with("episode,loss,avg_delay,replay\n"));

    let tuned = tmp.path().join("tl");
    let ckpt = three.join("checkpoint.json");
    let o = gk(
        tmp.path(),
        &[
            "train", "--preset", "large", "--episodes", "1", "--iterations", "1", "--fine-tune",
            ckpt.to_str().unwrap(), "--out", tuned.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_ne!(fs::read(tuned.join("checkpoint.json")).unwrap(), fs::read(&ckpt).unwrap());
    assert_eq!(manifest(&tuned)["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn benchmark_outputs_are_byte_identical_across_reruns_and_jobs() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    assert_eq!(code(&gk(tmp.path(), &["generate", "--days", "4", "--seed", "2", "--out", inst.to_str().unwrap()])), 0);
    let before = fs::read(inst.join("manifest.json")).unwrap();
    let run = |out: &str, jobs: &str| {
        let o = gk(
            tmp.path(),
            &[
                "benchmark", "--instances", inst.to_str().unwrap(), "--iterations", "10", "--jobs", jobs,
                "--diagnostics", "--segment", "--out", out,
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    run("b1", "1");
    run("b2", "3");
    let (b1, b2) = (tmp.path().join("b1"), tmp.path().join("b2"));
    let names = files(&b1);
    assert_eq!(
        names,
        vec!["days.csv", "episodes.jsonl", "kpis.csv", "manifest.json", "pdft.csv", "segments.csv", "summary.json", "utilization.csv"]
    );
    for n in names.iter().filter(|n| *n != "manifest.json") {
        assert_eq!(fs::read(b1.join(n)).unwrap(), fs::read(b2.join(n)).unwrap(), "{n}");
    }
    assert_eq!(manifest(&b1)["input_hash"], manifest(&b2)["input_hash"]);
    // Inputs are untouched.
    assert_eq!(fs::read(inst.join("manifest.json")).unwrap(), before);
    let days = fs::read_to_string(b1.join("days.csv")).unwrap();
    assert_eq!(days.lines().count(), 1 + 2 * 4);
    let kpis = fs::read_to_string(b1.join("kpis.csv")).unwrap();
    assert!(kpis.starts_with("kpi,FIFO,Integrated,imp_over_FIFO\n"));
}

#[test]
fn fifo_only_benchmark_has_a_single_column_and_prints_the_table() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("b");
    let o = gk(
        tmp.path(),
        &["benchmark", "--policies", "fifo", "--days", "2", "--table1", "--out", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    let kpis = fs::read_to_string(out.join("kpis.csv")).unwrap();
    assert!(kpis.lines().all(|l| l.split(',').count() == 2), "{kpis}");
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().next().unwrap().starts_with("KPI"));
    assert!(stdout.contains("avg_delay"));
}

#[test]
fn ai_benchmark_uses_the_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let t = tmp.path().join("t");
    assert_eq!(code(&gk(tmp.path(), &["train", "--episodes", "0", "--out", t.to_str().unwrap()])), 0);
    let out = tmp.path().join("b");
    let o = gk(
        tmp.path(),
        &[
            "benchmark", "--policies", "fifo,ai", "--checkpoint", t.join("checkpoint.json").to_str().unwrap(),
            "--days", "2", "--iterations", "5", "--out", out.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("kpis.csv")).unwrap().starts_with("kpi,FIFO,AI,imp_over_FIFO\n"));
    assert_eq!(manifest(&out)["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn validate_reports_and_exits_zero_on_success() {
    let tmp = TempDir::new().unwrap();
    for (suite, n) in [("pdft", "20"), ("theorem1", "2"), ("gradients", "3"), ("ledger", "2")] {
        let o = gk(tmp.path(), &["validate", "--suite", suite, "--n", n, "--samples", "100", "--iterations", "10"]);
        assert_eq!(code(&o), 0, "{suite}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with(&format!("PASS {suite}")));
        let dir = tmp.path().join(format!("runs/validate-{suite}-s0"));
        let report: Value = serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["failures"], 0);
    }
}
