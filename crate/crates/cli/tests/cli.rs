use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn out_dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("fac-cli").join(name);
    let _ = fs::remove_dir_all(&d);
    d
}

fn fac(out: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fac")).arg("--out").arg(out).args(args).output().expect("run fac")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn order_out_of_range_is_a_usage_error() {
    let d = out_dir("bad_s");
    let o = fac(&d, &["--s", "1.2", "constants"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(0.5, 1)"));
}

#[test]
fn malformed_arguments_are_usage_errors() {
    let d = out_dir("bad_args");
    assert_eq!(code(&fac(&d, &["--bogus", "constants"])), 64);
    assert_eq!(code(&fac(&d, &["verify", "nothing"])), 64);
    assert_eq!(code(&fac(&d, &["--eps", "0.5", "reduced"])), 64);
}

#[test]
fn config_file_is_validated_and_overridden() {
    let d = out_dir("config");
    fs::create_dir_all(&d).unwrap();
    let bad = d.join("bad.json");
    fs::write(&bad, r#"{"s": 0.75, "unknown_field": 1}"#).unwrap();
    assert_eq!(code(&fac(&d, &["--config", bad.to_str().unwrap(), "constants"])), 64);
    let tau = d.join("tau.json");
    fs::write(&tau, r#"{"tau": 1.5}"#).unwrap();
    let o = fac(&d, &["--config", tau.to_str().unwrap(), "constants"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));
    let ok = d.join("ok.json");
    fs::write(&ok, r#"{"s": 0.6, "s_grid": [0.6, 0.7]}"#).unwrap();
    let o = fac(&d, &["--config", ok.to_str().unwrap(), "--s", "0.8", "constants"]);
    assert_eq!(code(&o), 0);
    let r = json(d.join("constants.json"));
    assert_eq!(r["config"]["s"], 0.8);
    assert_eq!(r["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn constants_table_passes_the_identity() {
    let d = out_dir("constants");
    let o = fac(&d, &["constants"]);
    assert_eq!(code(&o), 0);
    let r = json(d.join("constants.json"));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    for row in rows {
        assert!(row["relative_residual"].as_f64().unwrap() < 1e-12);
    }
    let csv = fs::read_to_string(d.join("constants.csv")).unwrap();
    assert!(csv.starts_with("s,C1,C3,C5,identity,expected,relative_residual\r\n"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn single_order_row_shows_the_ratio() {
    let d = out_dir("constants_single");
    let o = fac(&d, &["--s", "0.75", "constants"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let row = stdout.lines().find(|l| l.trim_start().starts_with("0.750")).expect("row for s = 0.75");
    assert!(row.contains("0.4444"), "{row}");
}

#[test]
fn profile_reruns_are_byte_identical() {
    let a = out_dir("profile_a");
    let b = out_dir("profile_b");
    assert_eq!(code(&fac(&a, &["--s", "0.75", "profile1d"])), 0);
    assert_eq!(code(&fac(&b, &["--s", "0.75", "profile1d"])), 0);
    assert_eq!(fs::read(a.join("profile1d.csv")).unwrap(), fs::read(b.join("profile1d.csv")).unwrap());
    let ja = fs::read_to_string(a.join("profile1d.json")).unwrap();
    let jb = fs::read_to_string(b.join("profile1d.json")).unwrap();
    assert_eq!(ja.replace("profile_a", "profile_b"), jb);
    let r = json(a.join("profile1d.json"));
    assert!(r["layer"]["c_w"].as_f64().unwrap() > 0.0);
    assert!(r["C_bar"].as_f64().unwrap() > 0.0);
    assert!(r["C_bar_pm"].as_f64().unwrap() > 0.0);
    assert_eq!(r["config"]["z_max"], 100.0);
}

#[test]
fn continuation_reaches_an_order_near_one_half() {
    let d = out_dir("continuation");
    let o = fac(&d, &["--s", "0.51", "--continuation", "profile1d"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(d.join("profile1d.json"));
    assert_eq!(r["config"]["continuation"], true);
    assert!(r["layer"]["c_w"].as_f64().unwrap() > 0.0);
    // order-dependent defaults are resolved inside the allowed ranges
    let a = r["config"]["alpha_curv"].as_f64().unwrap();
    assert!(a > 0.0 && a < 2.0 * 0.51 - 1.0);
}

#[test]
fn reduced_tail_slope_matches_growth_exponent() {
    let d = out_dir("reduced");
    let o = fac(&d, &["--s", "0.75", "--eps", "1e-3", "--emit-plot-data", "reduced"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(d.join("reduced.json"));
    let slope = r["report"]["tail_slope"].as_f64().unwrap();
    assert!((slope / 0.8 - 1.0).abs() <= 0.05, "tail slope {slope}");
    assert_eq!(r["target_tail_slope"], 0.8);
    for f in ["neck.csv", "profile.csv", "profile_plot.csv"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let full = fs::read_to_string(d.join("profile.csv")).unwrap().lines().count();
    let plot = fs::read_to_string(d.join("profile_plot.csv")).unwrap().lines().count();
    assert!(plot < full && plot > 100);
    assert!(fs::read_to_string(d.join("neck.csv")).unwrap().starts_with("z,G,dG\r\n"));
}

#[test]
fn mid_region_residual_halves_like_eps_power() {
    let mid = |eps: &str| {
        let d = out_dir(&format!("mid_{eps}"));
        assert_eq!(code(&fac(&d, &["--eps", eps, "reduced"])), 0);
        json(d.join("reduced.json"))["report"]["residual_norms"]["mid_curvature"].as_f64().unwrap()
    };
    let slope = (mid("1e-2") / mid("5e-3")).log2();
    let target = 2.0 * 0.75 - 1.0;
    assert!((slope / target - 1.0).abs() <= 0.15, "slope {slope}");
}

#[test]
fn verify_kernels_passes() {
    let d = out_dir("verify_kernels");
    let o = fac(&d, &["verify", "kernels"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(d.join("verify.json"));
    assert_eq!(r["suite"], "kernels");
    assert_eq!(r["passed"], true);
    let ids: Vec<u64> = r["verdicts"].as_array().unwrap().iter().map(|v| v["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, vec![1, 2]);
}

#[test]
fn verify_geometry_passes() {
    let d = out_dir("verify_geometry");
    let o = fac(&d, &["verify", "geometry"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 2);
    assert!(json(d.join("verify.json"))["failing"].as_array().unwrap().is_empty());
}
