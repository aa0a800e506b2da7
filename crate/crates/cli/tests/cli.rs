use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn besselhit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besselhit"))
        .args(args)
        .env_remove("BESSELHIT_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = besselhit(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = rows[0].iter().position(|c| c == name).unwrap();
    rows[1..].iter().map(|r| r[i].clone()).collect()
}

#[test]
fn constants_at_half_cancel() {
    let v = json(&["constants", "--nu", "0.5", "--a", "2", "--b", "1"]);
    assert!((v["kappa"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["cancellation"].as_f64().unwrap(), 0.0);
    assert_eq!(v["regime"], "nu_lt_1");
}

#[test]
fn constants_at_one() {
    let v = json(&["constants", "--nu", "1", "--a", "2", "--b", "1"]);
    assert_eq!(v["c_nu"].as_f64().unwrap(), 1.5);
    assert_eq!(v["regime"], "nu_eq_1");
    assert!(v["kappa"].is_null());
    assert_eq!(v["dimension"].as_f64().unwrap(), 0.0);
}

#[test]
fn constants_small_index_values() {
    let v = json(&["constants", "--nu", "0.3", "--a", "1", "--b", "0.4"]);
    // C = (1 − 0.4^0.6)/(2^0.3 Γ(1.3)) and the binomial series for κ(0.3)
    assert!((v["c_nu"].as_f64().unwrap() - 0.382_762_150_844_181_2).abs() < 1e-12);
    assert!((v["kappa"].as_f64().unwrap() - 0.801_282_755_101_307_8).abs() < 1e-9);
    let k = v["kappa"].as_f64().unwrap();
    assert!((v["cancellation"].as_f64().unwrap() - (1.0 - 0.3 * k)).abs() < 1e-15);
    assert_eq!(v["sign"], "minus");
}

#[test]
fn invalid_parameters_fail_with_message() {
    for args in [
        ["constants", "--nu", "-1", "--a", "2", "--b", "1"],
        ["constants", "--nu", "1", "--a", "2", "--b", "3"],
    ] {
        let o = besselhit(&args);
        assert!(!o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn zero_level_tail_scales_to_the_constant() {
    let o = besselhit(&["tail", "--nu", "0.7", "--a", "2", "--t-grid", "1:1e8:9"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["t", "tail", "error", "source", "leading", "remainder", "t_nu_tail"]);
    assert!(column(&rows, "source").iter().all(|s| s == "closed_form"));
    let last: f64 = column(&rows, "t_nu_tail").last().unwrap().parse().unwrap();
    let c = json(&["constants", "--nu", "0.7", "--a", "2"])["c_nu"].as_f64().unwrap();
    assert!((last - c).abs() < 1e-4 * c);
}

#[test]
fn half_index_plus_tail_is_the_closed_form() {
    let v = json(&["tail", "--nu", "0.5", "--sign", "plus", "--a", "2", "--b", "1", "--t-grid", "1:100:3", "--format", "json"]);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    // (b/a)·erf((a − b)/√(2t)) at t = 1
    assert!((rows[0]["tail"].as_f64().unwrap() - 0.341_344_746_068_542_9).abs() < 1e-14);
    assert_eq!(rows[2]["t"].as_f64().unwrap(), 100.0);
}

#[test]
fn oracle_tail_uses_the_cache_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["tail", "--nu", "1", "--a", "2", "--b", "1", "--t-grid", "1:1e3:4", "--cache-dir", cache];
    let first = besselhit(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0);
    let second = besselhit(&args);
    assert_eq!(first.stdout, second.stdout);
    let rows = csv_rows(&stdout(&first));
    assert!(column(&rows, "source").iter().all(|s| s == "oracle"));
    // t·P(τ₁ > t) → C₁ = 1.5 from below, slowly
    let scaled: f64 = column(&rows, "t_nu_tail").last().unwrap().parse().unwrap();
    assert!(scaled > 1.45 && scaled < 1.5);
}

#[test]
fn cache_dir_defaults_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_besselhit"))
        .args(["tail", "--nu", "1", "--a", "2", "--b", "1", "--t-grid", "1:10:2"])
        .env("BESSELHIT_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(std::fs::read_dir(dir.path()).unwrap().count() > 0);
}

#[test]
fn oracle_grid_below_its_start_is_an_error() {
    let o = besselhit(&["tail", "--nu", "1", "--a", "2", "--b", "1", "--t-grid", "1e-5:1:3"]);
    assert!(!o.status.success());
}

#[test]
fn csv_floats_carry_17_digits() {
    let o = besselhit(&["tail", "--nu", "0.7", "--a", "2", "--t-grid", "1:10:2"]);
    let rows = csv_rows(&stdout(&o));
    for cell in &rows[1][..3] {
        let mantissa = cell.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{cell}");
    }
}

#[test]
fn simulate_is_independent_of_threads() {
    let run = |threads: &str| {
        let o = besselhit(&["--threads", threads, "simulate", "--nu", "0.8", "--a", "2", "--b", "1", "--t", "3", "--n", "4000"]);
        assert!(o.status.success());
        o.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn simulated_zero_level_tail_matches_the_closed_form() {
    let v = json(&["simulate", "--nu", "0.7", "--a", "1.5", "--t", "2", "--n", "50000", "--format", "json"]);
    let row = &v[0];
    assert_eq!(row["expected_kind"], "closed_form");
    assert_eq!(row["pass"], true);
    assert!(row["z"].as_f64().unwrap().abs() < 4.0);
}

#[test]
fn convolution_check_passes() {
    let o = besselhit(&["simulate", "--functional", "convolution", "--nu", "0.8", "--a", "2", "--b", "1", "--t", "5", "--n", "20000"]);
    assert!(o.status.success());
    assert_eq!(column(&csv_rows(&stdout(&o)), "pass"), ["true"]);
}

#[test]
fn rho_inf_compares_with_the_leading_order() {
    let v = json(&[
        "simulate", "--functional", "rho-inf", "--nu", "1", "--sign", "plus", "--a", "1", "--t", "50", "--n", "20000",
        "--dt", "1e-2", "--format", "json",
    ]);
    // a^{2ν}/(2^{ν+1}Γ(ν+1))/t^ν
    assert!((v[0]["expected"].as_f64().unwrap() - 0.005).abs() < 1e-15);
    assert!(v[0]["pass"].is_null());
}

#[test]
fn censoring_exits_nonzero() {
    let o = besselhit(&["simulate", "--nu", "0.5", "--a", "2", "--b", "1", "--t", "100", "--n", "1000", "--max-steps", "10"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("censored"));
}

#[test]
fn verify_identities_passes_with_the_check_schema() {
    let o = besselhit(&["verify", "identities"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["suite"], "identities");
    for c in v["checks"].as_array().unwrap() {
        let keys: Vec<&String> = c.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["claim", "paper_location", "measured", "expected", "tolerance", "pass"]);
        assert_eq!(c["pass"], true);
    }
}

#[test]
fn verify_oracle_passes() {
    let o = besselhit(&["verify", "oracle", "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("oracle: 3 checks, 0 failed\n"));
}

#[test]
fn verify_exit_code_follows_the_checks() {
    // ν = 0.4 carries the finite-time J-limit deviation, so this run fails
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("asym.json");
    let o = besselhit(&[
        "verify", "asymptotics", "--nu", "0.4", "--output", out.to_str().unwrap(), "--cache-dir",
        dir.path().to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let all_pass = v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true);
    assert_eq!(o.status.success(), all_pass);
    assert!(!all_pass);
    assert!(o.stdout.is_empty());
}

#[test]
fn rates_recover_the_second_order_slope() {
    let v = json(&["rates", "--nu", "1.5", "--a", "2", "--b", "1", "--t-grid", "10:1e5:81"]);
    assert!((v["slope"].as_f64().unwrap() - v["predicted_slope"].as_f64().unwrap()).abs() < 0.05);
    assert_eq!(v["window_hi"].as_f64().unwrap(), 1e5);
    assert_eq!(v["curve"].as_array().unwrap().len(), 81);
}

#[test]
fn rates_with_explicit_window() {
    let o = besselhit(&[
        "rates", "--nu", "0.4", "--a", "2", "--b", "1", "--t-grid", "10:1e5:81", "--window", "100:1e4", "--format", "csv",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(column(&rows, "window_lo"), ["1.0000000000000000e2"]);
    assert_eq!(column(&rows, "points"), ["41"]);
}

#[test]
fn output_file_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str| {
        let p = dir.path().join(name);
        let o = besselhit(&["simulate", "--nu", "1.5", "--a", "3", "--b", "1", "--t", "2", "--n", "3000", "--output", p.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(Path::new(&p)).unwrap()
    };
    assert_eq!(write("a.csv"), write("b.csv"));
}
