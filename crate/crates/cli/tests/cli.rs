use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lpball(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpball"))
        .args(args)
        .env_remove("LPBALL_OUT_DIR")
        .current_dir(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn epsilon_out_of_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpball(&["sandwich", "--epsilon", "1.5"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
}

#[test]
fn missing_moment_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpball(&["oracle", "--dist", "product_student_t", "--nu", "3", "--p", "3"], dir.path());
    assert_eq!(code(&o), 3);
    let o = lpball(&["compare", "--nu", "3.5", "--p", "4", "--trials", "1"], dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["lemma-check", "--trials", "0"][..],
        &["ratio-check", "--delta", "0.6"],
        &["sandwich", "--threads", "0", "--trials", "1", "--directions", "1"],
        &["sandwich", "--no-such-flag"],
        &["frobnicate"],
        &["oracle", "--dist", "cauchy"],
    ] {
        assert_eq!(code(&lpball(args, dir.path())), 2, "{args:?}");
    }
    assert_eq!(code(&lpball(&["--help"], dir.path())), 0);
}

#[test]
fn corrupted_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let nan = dir.path().join("nan.txt");
    let mut body: String = (1..=100).map(|i| format!("{}\n", i as f64 / 40.0)).collect();
    body.push_str("nan\n");
    fs::write(&nan, body).unwrap();
    let o = lpball(&["lemma-check", "--sample-file", nan.to_str().unwrap(), "--laws", "gaussian"], dir.path());
    assert_eq!(code(&o), 1);
    let csv = fs::read_to_string(dir.path().join("lpball-out/lemma-check.csv")).unwrap();
    assert!(csv.lines().skip(2).all(|l| l.contains(",fail,")), "{csv}");

    let junk = dir.path().join("junk.txt");
    fs::write(&junk, "0.5\nabc\n").unwrap();
    let o = lpball(&["lemma-check", "--sample-file", junk.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn clean_sample_file_passes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.txt");
    // evenly spread |N(0,1)| quantiles
    let body: String = (0..4000).map(|i| format!("{}\n", 3.0 * (i as f64 + 0.5) / 4000.0)).collect();
    fs::write(&file, body).unwrap();
    let o = lpball(
        &[
            "lemma-check",
            "--sample-file",
            file.to_str().unwrap(),
            "--laws",
            "cube_uniform",
            "--delta",
            "0.05",
            "--theta",
            "0.3",
        ],
        dir.path(),
    );
    assert!(code(&o) <= 1);
    assert!(dir.path().join("lpball-out/lemma-check.csv").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"seed": 5, "out_dir": "from-config", "format": "json", "trials": 3, "directions": 4, "d": 3, "p": 2.0}"#,
    )
    .unwrap();
    let o = lpball(&["sandwich", "--config", cfg.to_str().unwrap(), "--trials", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("from-config/sandwich.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 5);
    assert_eq!(json["config"]["trials"], 2);
    assert_eq!(json["config"]["directions"], 4);
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
    assert!(!dir.path().join("from-config/sandwich.csv").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"trails": 3}"#).unwrap();
    assert_eq!(code(&lpball(&["sandwich", "--config", cfg.to_str().unwrap()], dir.path())), 2);
    fs::write(&cfg, "[1, 2]").unwrap();
    assert_eq!(code(&lpball(&["oracle", "--config", cfg.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lpball"))
        .args(["oracle", "--p", "3"])
        .env("LPBALL_OUT_DIR", "via-env")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("via-env/oracle.csv")).unwrap();
    let value: f64 = csv.lines().find_map(|l| l.strip_prefix("value,")).unwrap().parse().unwrap();
    assert!((value - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9);

    let o = Command::new(env!("CARGO_BIN_EXE_lpball"))
        .args(["oracle", "--out-dir", "flag"])
        .env("LPBALL_OUT_DIR", "via-env2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("flag/oracle.csv").exists());
    assert!(!dir.path().join("via-env2").exists());
}

#[test]
fn csv_starts_with_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpball(
        &["ratio-check", "--d", "2", "--n", "300", "--directions", "3", "--trials", "2", "--reference-size", "1000"],
        dir.path(),
    );
    assert!(code(&o) <= 1);
    let csv = fs::read_to_string(dir.path().join("lpball-out/ratio-check.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# ratio-check config={"));
    assert_eq!(lines.next().unwrap(), "trial,direction,prop1_dev,prop2_margin,prop3_sup,pass");
    // 3 sphere directions plus 4 signed coordinates, two trials
    assert_eq!(lines.count(), 14);
}

#[test]
fn same_seed_same_bytes_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = format!("t{threads}");
        let o = lpball(
            &[
                "compare",
                "--d",
                "5",
                "--directions",
                "20",
                "--trials",
                "6",
                "--mc-draws",
                "50000",
                "--threads",
                threads,
                "--out-dir",
                &out,
            ],
            dir.path(),
        );
        assert!(code(&o) <= 1);
        outputs.push((
            fs::read(dir.path().join(&out).join("compare.csv")).unwrap(),
            fs::read(dir.path().join(&out).join("compare.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}
