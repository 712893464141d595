use fogprov::scenario::ScenarioConfig;
use fogprov::sim::{read_metrics_csv, write_metrics_csv};
use fogprov::traffic::emit_trace;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn small_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/small.toml")
}

fn fogprov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogprov"))
        .args(args)
        .env_remove("FOGPROV_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = fogprov(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn compare_writes_one_row_per_policy() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario();
    ok(&[
        "compare",
        "--scenario",
        scenario.to_str().unwrap(),
        "--policy",
        "all_cloud,hbpcro",
        "--seeds",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(data_rows(&dir.path().join("comparison.csv")), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let rows = summary.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["runs"] == 3));
    assert_eq!(rows[0]["policy"], "all_cloud");
    for seed in 0..3 {
        assert!(dir
            .path()
            .join(format!("metrics_hbpcro_seed{seed}.csv"))
            .exists());
    }
    let header = fs::read_to_string(dir.path().join("cost_series.csv")).unwrap();
    assert!(header.starts_with("interval,all_cloud,hbpcro\n"));
    assert_eq!(data_rows(&dir.path().join("delay_series.csv")), 4);
}

#[test]
fn sweep_range_gives_twenty_points() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario();
    ok(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--thresholds",
        "1:100:5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let thresholds: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(thresholds.len(), 20);
    assert_eq!(thresholds[0], 1.0);
    assert_eq!(thresholds[19], 96.0);
}

#[test]
fn metrics_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario();
    ok(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--policy",
        "min_viol",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let bytes = fs::read(dir.path().join("metrics_min_viol_seed0.csv")).unwrap();
    let rows = read_metrics_csv(bytes.as_slice()).unwrap();
    assert_eq!(rows.len(), 4);
    let mut again = Vec::new();
    write_metrics_csv(&rows, &mut again).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn outputs_are_reproducible() {
    let scenario = small_scenario();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        ok(&[
            "compare",
            "--scenario",
            scenario.to_str().unwrap(),
            "--policy",
            "bpso,hbpcro",
            "--seeds",
            "2",
            "--out",
            d.path().to_str().unwrap(),
        ]);
    }
    let mut names: Vec<_> = fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = fs::read(dirs[0].path().join(&name)).unwrap();
        let b = fs::read(dirs[1].path().join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
    }
}

#[test]
fn trace_file_matches_synthetic_traffic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario();
    let sc = ScenarioConfig::load(&scenario).unwrap().build().unwrap();
    let trace = dir.path().join("trace.csv");
    fs::write(&trace, emit_trace(&sc.synthetic_schedule().unwrap())).unwrap();
    let (from_trace, synthetic) = (dir.path().join("a"), dir.path().join("b"));
    let base = ["run", "--scenario", scenario.to_str().unwrap(), "--out"];
    ok(&[
        &base[..],
        &[
            from_trace.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ],
    ]
    .concat());
    ok(&[&base[..], &[synthetic.to_str().unwrap(), "--synthetic"]].concat());
    let name = "metrics_hbpcro_seed0.csv";
    assert_eq!(
        fs::read(from_trace.join(name)).unwrap(),
        fs::read(synthetic.join(name)).unwrap()
    );
}

#[test]
fn out_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario();
    let out = Command::new(env!("CARGO_BIN_EXE_fogprov"))
        .args([
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--policy",
            "all_cloud",
        ])
        .env("FOGPROV_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("metrics_all_cloud_seed0.csv").exists());
}

#[test]
fn search_writes_every_trial() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario();
    ok(&[
        "search",
        "--scenario",
        scenario.to_str().unwrap(),
        "--trials",
        "3",
        "--gamma",
        "2:4",
        "--particles",
        "5:8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(data_rows(&dir.path().join("search.csv")), 3);
}

#[test]
fn preset_prints_a_loadable_scenario() {
    let out = ok(&["scenario", "--preset", "exp2"]);
    let cfg = ScenarioConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let sc = cfg.build().unwrap();
    assert_eq!(sc.topology.n_fog(), 10);
    assert_eq!(sc.topology.n_cloud(), 5);
    assert_eq!(sc.topology.n_services(), 50);
}

#[test]
fn bad_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let scenario = small_scenario();
    let scenario = scenario.to_str().unwrap();
    let missing = dir.path().join("missing.toml");
    let cases: [&[&str]; 6] = [
        &[
            "run",
            "--scenario",
            scenario,
            "--policy",
            "greedy",
            "--out",
            out_dir,
        ],
        &[
            "run",
            "--scenario",
            missing.to_str().unwrap(),
            "--out",
            out_dir,
        ],
        &[
            "run",
            "--scenario",
            scenario,
            "--trace",
            "/no/such/trace.csv",
            "--out",
            out_dir,
        ],
        &["run", "--preset", "exp9", "--out", out_dir],
        &[
            "sweep",
            "--scenario",
            scenario,
            "--thresholds",
            "9:1:1",
            "--out",
            out_dir,
        ],
        &[
            "search",
            "--scenario",
            scenario,
            "--particles",
            "1:3",
            "--out",
            out_dir,
        ],
    ];
    for args in cases {
        let out = fogprov(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}
