use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_somcluster"));
    c.env_remove("CONSENSUS_THREADS");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn small_cluster_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "cluster", "-i", "d.csv", "--seed", "7", "--n-p", "12", "--lle-k", "8", "--lle-dim", "4", "--iter-max",
        "500", "--k-max", "5",
    ];
    v.extend_from_slice(extra);
    v
}

fn generate(dir: &Path) {
    let o = run(
        &["generate", "--seed", "1", "--n-subjects", "12", "--n-features", "8", "--n-clusters", "3", "-o", "d.csv", "--truth", "t.csv"],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_cluster_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    let data = std::fs::read_to_string(d.join("d.csv")).unwrap();
    assert!(data.starts_with("sample_id,subject_id,f0,f1,"));
    assert_eq!(data.lines().count(), 1 + 36);
    assert_eq!(std::fs::read_to_string(d.join("t.csv")).unwrap().lines().count(), 13);

    let o = run(&small_cluster_args(&["-o", "out", "--assignments", "--coassoc", "--partitions"]), d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["master_seed"], 7);
    assert_eq!(report["config"]["ensemble"]["n_p"], 12);

    let assignments = std::fs::read_to_string(d.join("out/assignments.csv")).unwrap();
    assert!(assignments.starts_with("sample_id,subject_id,cluster\n"));
    assert_eq!(assignments.lines().count(), 37);
    let coassoc = std::fs::read_to_string(d.join("out/coassoc.csv")).unwrap();
    assert_eq!(coassoc.lines().count(), 36);
    assert!(coassoc.lines().all(|l| l.split(',').count() == 36));
    let parts = std::fs::read_to_string(d.join("out/partitions.csv")).unwrap();
    assert!(parts.starts_with("sample_id,run_"));

    let o = run(&["metrics", "-i", "d.csv", "-l", "out/assignments.csv", "--standardize"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m, report["consensus"]["selected"]);
}

#[test]
fn embed_writes_embedding_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    let o = run(&["embed", "-i", "d.csv", "--lle-k", "6", "--lle-dim", "3", "-o", "e.csv"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let e = std::fs::read_to_string(d.join("e.csv")).unwrap();
    assert!(e.starts_with("sample_id,subject_id,e0,e1,e2\n"));
    assert_eq!(e.lines().count(), 37);
}

#[test]
fn reports_identical_across_thread_settings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    let mut outputs = Vec::new();
    for threads in ["1", "2", "0"] {
        let out = format!("out{threads}");
        let o = bin()
            .args(small_cluster_args(&["-o", &out]))
            .env("CONSENSUS_THREADS", threads)
            .current_dir(d)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        outputs.push(std::fs::read(d.join(out).join("report.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    std::fs::write(
        d.join("cfg.json"),
        r#"{"lle":{"k_neighbors":8,"dim":4},"som":{"iter_max":400},"ensemble":{"n_p":9},"consensus":{"k_max":4},"master_seed":99}"#,
    )
    .unwrap();
    let o = run(&["cluster", "--config", "cfg.json", "-i", "d.csv", "--seed", "3", "--n-p", "6", "-o", "."], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["config"]["master_seed"], 3);
    assert_eq!(r["config"]["ensemble"]["n_p"], 6);
    assert_eq!(r["config"]["som"]["iter_max"], 400);
    assert_eq!(r["config"]["consensus"]["k_max"], 4);
}

#[test]
fn stability_subcommand_adds_block() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    let mut args = small_cluster_args(&["--reruns", "2", "-o", "."]);
    args[0] = "stability";
    let o = run(&args, d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let methods = r["stability"]["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 2);
    assert_eq!(methods[0]["method"], "consensus");
    assert_eq!(methods[1]["method"], "single_som");
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    std::fs::write(d.join("bad.csv"), "sample_id,subject_id,f0\na,p,1\nb,p,oops\n").unwrap();
    std::fs::write(d.join("bad.json"), "{\"ensemble\": {\"n_p\": \"many\"}}").unwrap();
    let cases: [&[&str]; 7] = [
        &["cluster", "-i", "d.csv"],
        &["cluster", "-i", "d.csv", "--seed", "x"],
        &["cluster", "-i", "d.csv", "--seed", "1", "--k-min", "6", "--k-max", "3"],
        &["cluster", "-i", "bad.csv", "--seed", "1"],
        &["cluster", "-i", "missing.csv", "--seed", "1"],
        &["cluster", "--config", "bad.json", "--seed", "1"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = run(args, d);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn numeric_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&["generate", "--seed", "2", "--n-subjects", "12", "--n-features", "8", "--separation", "0", "-o", "d.csv"], d);
    assert_eq!(code(&o), 0);
    // no SOM on overlapping clusters keeps every subject's replicates together
    let o = run(&small_cluster_args(&["--ics-threshold", "1e-9", "--grid-rows", "6", "--grid-cols", "6"]), d);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no partition passed"));
}

#[test]
fn help_documents_every_flag() {
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(code(&o), 0);
    let top = String::from_utf8_lossy(&o.stdout).to_string();
    for sub in ["generate", "embed", "cluster", "stability", "metrics"] {
        assert!(top.contains(sub), "{sub}");
    }
    let o = bin().args(["stability", "--help"]).output().unwrap();
    let help = String::from_utf8_lossy(&o.stdout).to_string();
    for flag in [
        "--config", "--input", "--standardize", "--no-standardize", "--lle-k", "--lle-dim", "--lle-reg", "--seed",
        "--grid-rows", "--grid-cols", "--lr-init", "--lr-threshold", "--radius-init", "--iter-max", "--n-p",
        "--ics-threshold", "--k-min", "--k-max", "--score-space", "--out-dir", "--assignments", "--coassoc",
        "--partitions", "--reruns", "--threads", "CONSENSUS_THREADS",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
}
