//! End-to-end behavior of the `aoi-evt` binary: exit codes, precedence,
//! file shapes and the documented command examples.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_aoi-evt")
}

fn run(args: &[&str]) -> Output {
    Command::new(exe())
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aoi-evt-cli-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_config(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["analyze", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["analyze", "--preset", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));

    let out = run(&["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no parameter source"));
}

#[test]
fn invalid_alpha_names_the_field_and_exits_2() {
    let out = run(&["analyze", "--preset", "fig2-g10", "--alphas", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alphas"));
}

#[test]
fn unknown_tolerance_metric_exits_2() {
    let out = run(&["validate", "--preset", "fig2-g10", "--tolerance", "wat=0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown metric"));
}

#[test]
fn analyze_reports_derived_override() {
    let dir = temp_dir("analyze-derived");
    let cfg = write_config(
        &dir,
        "gp.cfg",
        "[derived]\ng = 10\np = 0.5\n[report]\nalphas = 0.95\n",
    );
    let out = run(&["analyze", "--config", cfg.to_str().unwrap()]);
    let json = stdout_json(&out);
    assert_eq!(json["schema_version"], 1);
    assert!((json["mean_aoi"].as_f64().unwrap() - 192.0 / 11.0).abs() < 1e-9);
    assert!(json["theta"].is_null());
    let risk = json["risk"].as_array().unwrap();
    assert_eq!(risk.len(), 1);
    assert!(risk[0]["cvar"].as_f64().unwrap() >= risk[0]["var"].as_f64().unwrap());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_preset_reports_g_near_10() {
    let out = run(&["analyze", "--preset", "fig2-g10"]);
    let json = stdout_json(&out);
    let g = json["g"].as_f64().unwrap();
    assert!((g / 10.0 - 1.0).abs() < 5e-3, "g = {g}");
    let p = json["p"].as_f64().unwrap();
    assert!((p - 0.5).abs() < 1e-3, "p = {p}");
    // the preset documents its noise-power choice
    assert!(json["preset_note"].as_str().unwrap().contains("N0"));
}

#[test]
fn three_layer_precedence_fixture() {
    let dir = temp_dir("precedence");
    let cfg = write_config(
        &dir,
        "layered.cfg",
        "[system]\nantennas_n = 2\n[run]\ncycles = 1234\nseed = 5\n",
    );
    let out = run(&[
        "simulate",
        "--preset",
        "fig2-g10",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "42",
        "--alphas",
        "0.9",
    ]);
    let json = stdout_json(&out);
    // file overrides the preset
    assert_eq!(json["cycles_per_replication"], 1234);
    // command line overrides the file
    assert_eq!(json["seed"], 42);
    // the file's partial [system] override (antennas 1 -> 2) lowers p well
    // below the preset's ~0.5 while the preset's other fields stay put
    let p = json["p"].as_f64().unwrap();
    assert!(p < 0.2, "p = {p}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_rerun_is_byte_identical() {
    let a = run(&["analyze", "--preset", "fig3-S1e-4"]);
    let b = run(&["analyze", "--preset", "fig3-S1e-4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn single_point_sweep_matches_analyze() {
    let analyze = stdout_json(&run(&[
        "analyze", "--preset", "fig2-g10", "--alphas", "0.95",
    ]));
    let sweep = run(&[
        "sweep",
        "--preset",
        "fig2-g10",
        "--alphas",
        "0.95",
        "--sweep-param",
        "capacitor-size-s",
        "--from",
        "2e-4",
        "--to",
        "2e-4",
        "--steps",
        "1",
    ]);
    assert!(sweep.status.success());
    let csv = String::from_utf8(sweep.stdout).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| -> f64 {
        let idx = header.iter().position(|&h| h == name).unwrap();
        row[idx].parse().unwrap()
    };
    assert_eq!(col("g"), analyze["g"].as_f64().unwrap());
    assert_eq!(col("p"), analyze["p"].as_f64().unwrap());
    assert_eq!(col("mean_aoi"), analyze["mean_aoi"].as_f64().unwrap());
    assert_eq!(col("var_aoi"), analyze["var_aoi"].as_f64().unwrap());
    assert_eq!(col("var_0.95"), analyze["risk"][0]["var"].as_f64().unwrap());
    assert_eq!(
        col("cvar_0.95"),
        analyze["risk"][0]["cvar"].as_f64().unwrap()
    );
}

#[test]
fn sweep_log_scale_is_geometric() {
    let out = run(&[
        "sweep",
        "--preset",
        "fig3-S1e-4",
        "--alphas",
        "0.95",
        "--sweep-param",
        "capacitor-size-s",
        "--from",
        "1e-4",
        "--to",
        "1e-3",
        "--steps",
        "3",
        "--scale",
        "log",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    assert!((values[1] / values[0] - values[2] / values[1]).abs() < 1e-9);
    // a bigger capacitor charges slower: the mean age must grow along the grid
    let means: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
}

#[test]
fn system_param_sweep_rejects_derived_override() {
    let dir = temp_dir("sweep-derived");
    let cfg = write_config(&dir, "gp.cfg", "[derived]\ng = 10\np = 0.5\n");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--sweep-param",
        "tx-power-pt",
        "--from",
        "1",
        "--to",
        "10",
        "--steps",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("full [system] parameters"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_zero_steps_exits_2() {
    let out = run(&[
        "sweep",
        "--preset",
        "fig2-g10",
        "--sweep-param",
        "alpha",
        "--from",
        "0.7",
        "--to",
        "0.9",
        "--steps",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("steps"));
}

#[test]
fn replicated_simulation_merges_all_cycles() {
    let dir = temp_dir("replications");
    let cfg = write_config(
        &dir,
        "rep.cfg",
        "[derived]\ng = 5\np = 0.2\n[run]\ncycles = 5000\nreplications = 4\nseed = 11\n\
         [report]\nalphas = 0.9\n",
    );
    let json = stdout_json(&run(&["simulate", "--config", cfg.to_str().unwrap()]));
    assert_eq!(json["cycles_per_replication"], 5000);
    assert_eq!(json["replications"], 4);
    assert_eq!(json["total_cycles"], 20000);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_rejects_bad_grids() {
    let base = ["sweep", "--preset", "fig2-g10", "--sweep-param"];
    let out = run(&[
        &base[..],
        &["tx-power-pt", "--from", "10", "--to", "5", "--steps", "4"],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));

    let out = run(&[
        &base[..],
        &["antennas-n", "--from", "1", "--to", "2", "--steps", "8"],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("antennas_n"));

    let out = run(&[
        &base[..],
        &[
            "capacitor-size-s",
            "--from",
            "1e-4",
            "--to",
            "1e-3",
            "--steps",
            "4",
            "--scale",
            "dbm",
        ],
    ]
    .concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dbm"));
}

#[test]
fn simulate_zero_outage_has_unit_success_rate() {
    let dir = temp_dir("zero-outage");
    let cfg = write_config(
        &dir,
        "p0.cfg",
        "[derived]\ng = 10\np = 0\n[run]\ncycles = 20000\nseed = 3\n[report]\nalphas = 0.9\n",
    );
    let json = stdout_json(&run(&["simulate", "--config", cfg.to_str().unwrap()]));
    assert_eq!(json["success_rate"].as_f64().unwrap(), 1.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn validate_passes_reference_preset_at_default_tolerances() {
    let out = run(&[
        "validate", "--preset", "fig2-g10", "--cycles", "1000000", "--seed", "11",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["pass"], true);
    let metrics = json["metrics"].as_array().unwrap();
    // mean, variance, success_rate + var at the two default alphas
    assert_eq!(metrics.len(), 5);
    assert!(metrics.iter().all(|m| m["pass"] == true));
}

#[test]
fn validate_zero_tolerances_fails_every_metric() {
    let out = run(&[
        "validate",
        "--preset",
        "fig2-g10",
        "--cycles",
        "50000",
        "--tolerance",
        "mean=0",
        "--tolerance",
        "variance=0",
        "--tolerance",
        "success_rate=0",
        "--tolerance",
        "var=0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["pass"], false);
    let metrics = json["metrics"].as_array().unwrap();
    assert_eq!(metrics.len(), 5);
    assert!(
        metrics.iter().all(|m| m["pass"] == false),
        "all metrics must be listed as failing"
    );
}

#[test]
fn validate_at_zero_outage_adds_limit_form_gate() {
    let dir = temp_dir("validate-p0");
    let cfg = write_config(
        &dir,
        "p0.cfg",
        "[derived]\ng = 10\np = 0\n[run]\ncycles = 400000\nseed = 8\n[report]\nalphas = 0.95\n",
    );
    let out = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = json["metrics"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["metric"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"variance_massive_n"), "metrics: {names:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn tail_self_test_curves_agree() {
    let dir = temp_dir("tail-self");
    let out_path = dir.join("tail.csv");
    let out = run(&[
        "tail",
        "--preset",
        "fig2-g10",
        "--cycles",
        "1000000",
        "--seed",
        "13",
        "--self-test",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# bin_width="));
    assert_eq!(
        lines.next().unwrap(),
        "x,empirical_cdf,gumbel_cdf,empirical_pdf,gumbel_pdf"
    );
    let mut sup = 0.0_f64;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        sup = sup.max((f[1] - f[2]).abs());
    }
    assert!(sup < 0.01, "sup-norm CDF gap {sup}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn tail_accepts_block_maxima_sampling() {
    let out = run(&[
        "tail",
        "--preset",
        "fig2-g10",
        "--cycles",
        "30000",
        "--seed",
        "4",
        "--block-size",
        "64",
        "--bins",
        "50",
        "--alphas",
        "0.9",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    // 30000/64 = 468 block maxima, binned into 50 rows plus two header lines
    assert_eq!(csv.lines().count(), 52);
}

#[test]
fn tail_insufficient_samples_leaves_no_file() {
    let dir = temp_dir("tail-small");
    let out_path = dir.join("tail.csv");
    let out = run(&[
        "tail",
        "--preset",
        "fig2-g10",
        "--cycles",
        "50",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        !out_path.exists(),
        "failed run must not leave a partial file"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_side_files_have_documented_shapes() {
    let dir = temp_dir("side-files");
    let peaks = dir.join("peaks.csv");
    let traj = dir.join("traj.csv");
    let out = run(&[
        "simulate",
        "--preset",
        "fig2-g10",
        "--cycles",
        "200",
        "--seed",
        "6",
        "--alphas",
        "0.9",
        "--peaks-out",
        peaks.to_str().unwrap(),
        "--trajectory-out",
        traj.to_str().unwrap(),
        "--trajectory-slots",
        "50",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let peaks = std::fs::read_to_string(&peaks).unwrap();
    let mut lines = peaks.lines();
    assert_eq!(lines.next(), Some("cycle,Y"));
    assert_eq!(peaks.lines().count(), 201);
    assert!(!peaks.contains('\r') && peaks.ends_with('\n') && !peaks.ends_with(",\n"));
    // cycle index is 1-based and dense
    assert!(peaks.lines().nth(1).unwrap().starts_with("1,"));
    assert!(peaks.lines().nth(200).unwrap().starts_with("200,"));

    let traj = std::fs::read_to_string(&traj).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("slot,aoi"));
    assert_eq!(traj.lines().count(), 51);
    // age restarts at 1 and never exceeds the slot index
    for line in traj.lines().skip(1) {
        let (slot, age) = line.split_once(',').unwrap();
        let (slot, age): (u64, u64) = (slot.parse().unwrap(), age.parse().unwrap());
        assert!(age >= 1 && age <= slot);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn analyze_csv_has_fixed_header() {
    let out = run(&[
        "analyze", "--preset", "fig2-g10", "--format", "csv", "--alphas", "0.9,0.99",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "g,p,theta,mean_aoi,var_aoi,gumbel_mu,gumbel_sigma,validity_lg,low_validity,\
         var_0.9,cvar_0.9,var_0.99,cvar_0.99"
    );
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn low_validity_configurations_warn_in_report() {
    let dir = temp_dir("low-validity");
    let cfg = write_config(&dir, "low.cfg", "[derived]\ng = 2\np = 0.1\n");
    let json = stdout_json(&run(&["analyze", "--config", cfg.to_str().unwrap()]));
    assert_eq!(json["gumbel"]["low_validity"], true);
    let warnings = json["warnings"].as_array().unwrap();
    assert!(warnings
        .iter()
        .any(|w| w.as_str().unwrap().contains("regime product")));
    std::fs::remove_dir_all(&dir).ok();
}
