use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homvis_cli::ExperimentConfig;

fn homvis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homvis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p
}

fn parse_table(text: &str) -> (String, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn check_golden(axis: &str) {
    let cfg = golden(&format!("{axis}.json"));
    let out = stdout(&homvis(&["sweep", "--config", cfg.to_str().unwrap()]));
    let want = std::fs::read_to_string(golden(&format!("{axis}.csv"))).unwrap();
    let (h_got, got) = parse_table(&out);
    let (h_want, want) = parse_table(&want);
    assert_eq!(h_got, h_want);
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g.len(), w.len());
        for (a, b) in g.iter().zip(w) {
            // ten printed significant digits
            assert!(
                (a - b).abs() <= 1e-9 * b.abs() + 1e-15,
                "{axis}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn golden_dead_time() {
    check_golden("dead_time");
}

#[test]
fn golden_photon_number() {
    check_golden("photon_number");
}

#[test]
fn golden_intensity_ratio() {
    check_golden("intensity_ratio");
}

#[test]
fn golden_polarization_voltage() {
    check_golden("polarization_voltage");
}

#[test]
fn headline_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"detector_c": {"dark_count": 0}, "detector_d": {"dark_count": 0}}"#,
    );
    let out = stdout(&homvis(&[
        "visibility",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "text",
    ]));
    let v: f64 = out
        .lines()
        .last()
        .unwrap()
        .split(" = ")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 0.489).abs() < 5e-4, "{out}");
}

#[test]
fn sweep_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"detector_c": {"dark_count": 0}, "detector_d": {"dark_count": 0},
            "sweep": {"axis": "photon_number", "start": 0.000001, "stop": 2, "steps": 50}}"#,
    );
    let (_, rows) = parse_table(&stdout(&homvis(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
    ])));
    assert!((rows[0][4] - 0.5).abs() < 1e-3);
    assert!(rows.windows(2).all(|w| w[1][4] < w[0][4]));

    let cfg = write_config(
        dir.path(),
        r#"{"sweep": {"axis": "polarization_voltage", "start": 0, "stop": 5.25, "steps": 50}}"#,
    );
    let (_, rows) = parse_table(&stdout(&homvis(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
    ])));
    assert!(rows[49][4].abs() < 1e-12);
}

#[test]
fn invalid_splitter_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"transmittance": 1.2}"#);
    let o = homvis(&["visibility", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("InvalidBeamSplitter"));

    let cfg = write_config(dir.path(), r#"{"mu_a": "#);
    let o = homvis(&["visibility", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("InvalidConfig"));
}

#[test]
fn runtime_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let tags = dir.path().join("bad.txt");
    std::fs::write(&tags, "# tick_ps=81\nGC,10\nXX,11\n").unwrap();
    let o = homvis(&["analyze-timetags", tags.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("ParseError") && err.contains("offset 19"),
        "{err}"
    );

    std::fs::write(&tags, "# tick_ps=81\nGC,10\n").unwrap();
    let o = homvis(&["analyze-timetags", tags.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NoGates"));
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_gates": 200000, "seed": 7}"#);
    let tags = dir.path().join("tags.txt");
    let est = stdout(&homvis(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--timetags",
        tags.to_str().unwrap(),
        "--format",
        "json",
    ]));
    let est: serde_json::Value = serde_json::from_str(&est).unwrap();
    let rep = stdout(&homvis(&[
        "analyze-timetags",
        tags.to_str().unwrap(),
        "--format",
        "json",
    ]));
    let rep: serde_json::Value = serde_json::from_str(&rep).unwrap();
    assert_eq!(rep["coinciding_gates"], est["n_open_pairs"]);
    assert_eq!(rep["coincidences"], est["coincidences"]);
    assert_eq!(rep["singles_c"], est["singles_c"]);
    assert_eq!(rep["singles_d"], est["singles_d"]);

    let kv = stdout(&homvis(&[
        "analyze-timetags",
        tags.to_str().unwrap(),
        "--format",
        "text",
    ]));
    assert!(kv.starts_with("coinciding_gates = "));
}

#[test]
fn simulate_is_deterministic_and_seed_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n_gates": 50000}"#);
    let c = cfg.to_str().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let tags = dir.path().join(format!("{name}.tags"));
        stdout(&homvis(&[
            "simulate",
            "--config",
            c,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
            "--timetags",
            tags.to_str().unwrap(),
        ]));
        (std::fs::read(out).unwrap(), std::fs::read(tags).unwrap())
    };
    let a = run("5", "a");
    assert_eq!(a, run("5", "b"));
    assert_ne!(a, run("6", "c"));
}

#[test]
fn fit_recovers_simulated_afterpulsing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"mu_a": 0.4, "mu_b": 0, "gate_period_us": 0.5, "n_gates": 12000000, "seed": 3,
            "detector_c": {"dark_count": 1e-4, "dead_time_us": 0.1,
                           "afterpulse_p0": 0.033, "afterpulse_tau_us": 1.41}}"#,
    );
    let hist = dir.path().join("hist.csv");
    stdout(&homvis(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--histogram",
        hist.to_str().unwrap(),
    ]));
    let fit = stdout(&homvis(&[
        "fit-afterpulse",
        hist.to_str().unwrap(),
        "--format",
        "json",
    ]));
    let fit: serde_json::Value = serde_json::from_str(&fit).unwrap();
    let p0 = fit["p0"].as_f64().unwrap();
    let tau = fit["tau_us"].as_f64().unwrap();
    assert!((p0 / 0.033 - 1.0).abs() < 0.1, "{fit}");
    assert!((tau / 1.41 - 1.0).abs() < 0.1, "{fit}");
}

#[test]
fn config_round_trip_gives_identical_runs() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(golden("dead_time.json")).unwrap();
    let parsed = ExperimentConfig::from_json(&text).unwrap();
    let again = write_config(dir.path(), &parsed.to_json());
    let a = stdout(&homvis(&[
        "sweep",
        "--config",
        golden("dead_time.json").to_str().unwrap(),
    ]));
    let b = stdout(&homvis(&["sweep", "--config", again.to_str().unwrap()]));
    assert_eq!(a, b);
}
