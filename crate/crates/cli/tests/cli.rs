use std::path::Path;
use std::process::{Command, Output};

fn data(file: &str) -> String {
    format!("{}/../core/data/{file}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiered-vqa"))
        .args(args)
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&run_ok(args)).unwrap()
}

#[test]
fn queue_sim_rows_cover_the_grid() {
    let csv = run_ok(&["queue-sim", &data("scenario.toml"), "--seeds", "4"]);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with(
        "policy,runtime_fraction,seed,throughput,mean_relative_fidelity,completion_time"
    ));
    assert_eq!(lines.count(), 6 * 9);
}

#[test]
fn queue_sim_flag_overrides() {
    let csv = run_ok(&[
        "queue-sim",
        &data("scenario.toml"),
        "--policies",
        "tiered,eqc",
        "--runtime-fractions",
        "0.3",
        "--seeds",
        "1,2",
        "--fidelity-metric",
        "circuits",
    ]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2);
    assert!(rows[0].starts_with("tiered,0.3,1,"));
    assert!(rows[1].starts_with("eqc,0.3,1,"));
}

#[test]
fn missing_or_bad_inputs_fail_with_a_diagnostic() {
    for args in [
        vec![
            "queue-sim".to_string(),
            "/nonexistent/scenario.toml".to_string(),
        ],
        vec![
            "queue-sim".into(),
            data("scenario.toml"),
            "--policies".into(),
            "fastest".into(),
        ],
        vec![
            "multirestart".into(),
            "--fleet".into(),
            data("fleet.toml"),
            "--restarts".into(),
            "0".into(),
        ],
        vec![
            "multirestart".into(),
            "--fleet".into(),
            data("h2_sample.ham"),
        ],
        vec![
            "vqe".into(),
            "--fleet".into(),
            data("fleet.toml"),
            "--hamiltonian".into(),
            data("fleet.toml"),
        ],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = run(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn failed_run_leaves_no_file_behind() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let out = run(&[
        "multirestart",
        "--fleet",
        &data("fleet.toml"),
        "--restarts",
        "0",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(!Path::new(&target).exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn multirestart_reports_tiered_and_each_device() {
    let report = json(&[
        "multirestart",
        "--fleet",
        &data("fleet.toml"),
        "--nodes",
        "5",
        "--layers",
        "1",
        "--restarts",
        "6",
        "--max-iters",
        "30",
    ]);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["tiers"], serde_json::json!(["low", "high"]));
    let configs = report["configurations"].as_array().unwrap();
    let names: Vec<&str> = configs
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["tiered", "single:low", "single:high"]);
    let rows: usize = configs
        .iter()
        .map(|c| c["restarts"].as_array().unwrap().len())
        .sum();
    assert_eq!(rows, 6 * (1 + 2));
    for c in configs {
        let per_device: u64 = c["executions_per_device"]
            .as_object()
            .unwrap()
            .values()
            .map(|v| v.as_u64().unwrap())
            .sum();
        assert_eq!(per_device, c["total_executions"].as_u64().unwrap());
    }
}

#[test]
fn single_restart_climbs_tiers_in_order() {
    let report = json(&[
        "single-restart",
        "--fleet",
        &data("fleet.toml"),
        "--nodes",
        "5",
        "--layers",
        "1",
        "--max-iters",
        "40",
    ]);
    let tiered = &report["configurations"][0];
    assert_eq!(tiered["name"], "tiered");
    let devices: Vec<&str> = tiered["device_sequence"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["device"].as_str().unwrap())
        .collect();
    assert_eq!(devices[0], "low");
    assert!(devices.len() <= 2);
    assert_ne!(tiered["status"], "Pruned");
}

#[test]
fn vqe_reports_the_brute_force_ground_energy() {
    let report = json(&[
        "vqe",
        "--hamiltonian",
        &data("h2_sample.ham"),
        "--fleet",
        &data("fleet.toml"),
        "--restarts",
        "2",
        "--max-iters",
        "20",
    ]);
    assert!((report["ground_truth"].as_f64().unwrap() + 1.857275).abs() < 1e-5);
    assert_eq!(report["problem"], "vqe-two-local");
}

#[test]
fn p_correct_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("p.csv");
    let table = run_ok(&[
        "p-correct",
        "--fleet",
        &data("fleet.toml"),
        "--layers",
        "1,3",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(table.lines().count(), 1 + 2 * 2);
    let csv = std::fs::read_to_string(csv_path).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let p = |i: usize| rows[i][6].parse::<f64>().unwrap();
    // high beats low on every layer count, and deeper circuits score lower
    assert!(p(1) > p(0) && p(3) > p(2));
    assert!(p(2) < p(0) && p(3) < p(1));
}
