use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ppdepth::analysis::two_peak_task;
use ppdepth::io::{save_processes, Dataset, Format};

fn ppdepth(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppdepth"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PPDEPTH_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn check_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppdepth(&["check"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("all checks passed"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppdepth(&["frobnicate"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
}

#[test]
fn distance_between_empty_processes_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.jsonl"), "{\"T\": 100}\n{\"events\": []}\n{\"events\": []}\n").unwrap();
    let out = ppdepth(&["distance", "--a", "empty.jsonl", "--b", "empty.jsonl"], dir.path());
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row.split(',').skip(1).all(|v| v == "0"), "{row}");
    }
}

#[test]
fn out_of_range_event_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "# T = 10\n1 2\n3 12\n").unwrap();
    let out = ppdepth(&["rank", "--data", "bad.txt"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn modified_depth_without_center_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.txt"), "# T = 10\n1 2\n3\n").unwrap();
    let out = ppdepth(&["rank", "--data", "s.txt", "--method", "modified_h_depth"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn strict_center_without_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let sim = ppdepth(&["simulate", "--n", "20", "--seed", "2", "--out", "s.jsonl"], dir.path());
    assert_eq!(code(&sim), 0);
    let args = [
        "center", "--data", "s.jsonl", "--method", "line", "--epochs", "1", "--eps", "0", "--strict",
    ];
    let out = ppdepth(&args, dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("center.json").exists());
}

#[test]
fn config_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.conf"), "# test\nseed = 5\nsimulate.n = 12\n").unwrap();
    let run = |extra: &[&str], out: &str| {
        let mut args = vec!["--config", "run.conf", "simulate", "--out", out];
        args.extend_from_slice(extra);
        assert_eq!(code(&ppdepth(&args, dir.path())), 0);
        fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let from_config = run(&[], "a.jsonl");
    let explicit = run(&["--seed", "5"], "b.jsonl");
    let overridden = run(&["--seed", "6"], "c.jsonl");
    assert_eq!(from_config.lines().count(), 13);
    assert_eq!(from_config, explicit);
    assert_ne!(from_config, overridden);

    fs::write(dir.path().join("bad.conf"), "seeed = 5\n").unwrap();
    let out = ppdepth(&["--config", "bad.conf", "check"], dir.path());
    assert_ne!(code(&out), 0);
}

#[test]
fn environment_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ppdepth"))
        .args(["simulate", "--n", "3"])
        .current_dir(dir.path())
        .env("PPDEPTH_OUT_DIR", "results")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("results/samples.jsonl").exists());
    assert!(dir.path().join("results/samples.jsonl.manifest.json").exists());
}

#[test]
fn classify_reports_accuracy_per_segment() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_peak_task(12, 10.0, 4).unwrap();
    save_processes(&Dataset::new(10.0, data).unwrap(), &dir.path().join("trials.jsonl"), Format::Jsonl).unwrap();
    let args = [
        "classify", "--data", "trials.jsonl", "--method", "h_depth", "--segment", "0:5:c2=100,5:10:c2=50",
        "--folds", "3", "--seed", "1",
    ];
    let out = ppdepth(&args, dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    assert!(table.contains("0-5") && table.contains("5-10"), "{table}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("classification.json")).unwrap()).unwrap();
    let segments = json["segments"].as_array().unwrap();
    assert_eq!(segments.len(), 2);
    for s in segments {
        let acc = s["accuracy"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        for f in s["folds"].as_array().unwrap() {
            assert_eq!(f["exposed_test_ids"], 0);
        }
    }
}

#[test]
fn experiment_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["experiment", "ipp", "--seed", "7", "--n", "30", "--n-max", "4000"];
    for (out_dir, threads) in [("one", "1"), ("two", "2"), ("four", "4")] {
        let mut args = base.to_vec();
        args.extend_from_slice(&["--out-dir", out_dir, "--threads", threads]);
        let out = ppdepth(&args, dir.path());
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let names = [
        "samples.jsonl",
        "center.json",
        "rank_h_depth.csv",
        "rank_modified_h_depth.csv",
        "rank_modified_band_depth.csv",
        "extremes_modified_h_depth.csv",
        "curves_h_depth.csv",
        "manifest.json",
    ];
    for name in names {
        let a = fs::read(dir.path().join("one").join(name)).unwrap();
        for other in ["two", "four"] {
            let b = fs::read(dir.path().join(other).join(name)).unwrap();
            assert!(a == b, "{name} differs between thread counts");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("one/manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(listed.len(), 11);
    assert!(listed.contains(&"center.json"));
}

#[test]
fn rank_reads_the_center_written_by_center() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ppdepth(&["simulate", "--n", "15", "--seed", "3", "--out", "s.jsonl"], dir.path())), 0);
    assert_eq!(code(&ppdepth(&["center", "--data", "s.jsonl", "--n-max", "2000"], dir.path())), 0);
    let args = ["rank", "--data", "s.jsonl", "--method", "modified_h_depth", "--center-file", "center.json"];
    let out = ppdepth(&args, dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 16);
}
