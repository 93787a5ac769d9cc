use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn autotumor(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autotumor"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn presets_lists_the_catalogue() {
    let dir = tempfile::tempdir().unwrap();
    let o = autotumor(&["presets"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert!(names.len() >= 12);
    assert!(names.iter().any(|n| n == "fig-s4limit-gamma80"));
}

#[test]
fn analytic_radius_matches_sinh_law() {
    let dir = tempfile::tempdir().unwrap();
    let o = autotumor(
        &[
            "analytic", "radius", "--mu", "1", "--g", "1", "--cB", "1", "--R0", "1", "--t-end", "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t,R,speed"));
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let exact = (1f64.sinh() * 1f64.exp()).asinh();
    assert!((last[0] - 1.0).abs() < 1e-12);
    assert!((last[1] - exact).abs() < 1e-6, "{} vs {exact}", last[1]);
    assert!((exact - 1.87823).abs() < 1e-5);
}

#[test]
fn analytic_profiles_have_headers_and_zero_boundary_pressure() {
    let dir = tempfile::tempdir().unwrap();
    let o = autotumor(
        &["analytic", "pressure", "--mu", "0.5", "--R", "2", "--points", "5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x,p");
    assert_eq!(rows.len(), 6);
    let p_edge: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(p_edge.abs() < 1e-12);

    let o = autotumor(&["analytic", "nutrient", "--mu", "0.5", "--points", "3"], dir.path());
    assert_eq!(stdout(&o).lines().next(), Some("x,c"));

    let o = autotumor(&["analytic", "nutrient", "--mu", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_preset_writes_documented_csvs_and_checks_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = autotumor(&["run", "--preset", "fig-s4limit-gamma80", "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("r");
    for f in ["timeseries.csv", "profile_t1.0000.csv", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let o = autotumor(&["check", "r"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("clean"));
}

#[test]
fn run_from_config_file_uses_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"preset": "fig-s3unicon-gamma2"}"#).unwrap();
    let o = autotumor(&["run", "cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("runs/fig-s3unicon-gamma2/timeseries.csv").is_file());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("typo.json"), r#"{"name": "x", "gamm": 1}"#).unwrap();
    for args in [
        vec!["run"],
        vec!["run", "--preset", "fig-s9"],
        vec!["run", "typo.json"],
        vec!["run", "missing.json", "--preset", "fig-s4fin"],
        vec!["sweep", "--preset", "fig-s4fin"],
        vec!["sweep", "--preset", "fig-s4fin", "--vary", "model.gamma"],
        vec!["frobnicate"],
    ] {
        let o = autotumor(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = autotumor(&["run", "typo.json"], dir.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamm"));
}

#[test]
fn failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = autotumor(&["run", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = autotumor(&["check", "nowhere"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    fs::create_dir(dir.path().join("r")).unwrap();
    autotumor(&["run", "--preset", "fig-s4limit-gamma5", "--out", "r"], dir.path());
    fs::remove_file(dir.path().join("r/timeseries.csv")).unwrap();
    let o = autotumor(&["check", "r"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("missing output file timeseries.csv"));
}

#[test]
fn sweep_runs_every_combination() {
    let dir = tempfile::tempdir().unwrap();
    let o = autotumor(
        &[
            "sweep",
            "--preset",
            "fig-s4limit-gamma5",
            "--vary",
            "model.gamma=5,20",
            "--vary",
            "t_end=0.1,0.2",
            "--jobs",
            "2",
            "--out",
            "sw",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut members: Vec<String> = fs::read_dir(dir.path().join("sw"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    members.sort();
    assert_eq!(members.len(), 4, "{members:?}");
    for m in &members {
        assert!(dir.path().join("sw").join(m).join("manifest.json").is_file());
    }
    assert!(members.contains(&"fig-s4limit-gamma5_model.gamma=20_t_end=0.2".to_string()));
}
