use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn radwave(args: &[&str]) -> Output {
    radwave_env(args, &[])
}

fn radwave_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radwave"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Writes `name` with `edit` applied to a temporary config file.
fn edited_config(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut cfg = read_json(&config_path(name));
    edit(&mut cfg);
    let path = dir.join(format!("edited-{name}"));
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_diagnostic(out: &Output, code: i32, kind: &str) {
    assert_eq!(out.status.code(), Some(code), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    let diag: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(diag["error"], kind);
    assert_eq!(diag["exit_code"], code);
}

#[test]
fn reference_run_conserves_energy_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = radwave(&["simulate", s(&config_path("p3_reference.json")), "--outputs", s(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&run.join("summary.json"));
    let drift = summary["energy_drift"].as_f64().unwrap();
    assert!(drift < summary["energy_tolerance"].as_f64().unwrap());
    assert_eq!(summary["energy_within_tolerance"], true);
    let manifest = read_json(&run.join("manifest.json"));
    assert!(manifest["version"].as_str().unwrap().starts_with("radwave "));
    assert_eq!(manifest["config"]["outputs"], s(&run));
    assert_eq!(manifest["config"]["p"], 3.0);
    for file in ["field.bin", "energy.csv", "decay.csv", "probes.csv"] {
        assert!(run.join(file).exists(), "{file}");
    }
}

#[test]
fn zero_amplitude_gives_zero_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_config(dir.path(), "p3_reference.json", |c| {
        c["data"]["amplitude"] = 0.0.into();
    });
    let run = dir.path().join("run");
    assert!(radwave(&["simulate", s(&cfg), "--outputs", s(&run)]).status.success());
    let summary = read_json(&run.join("summary.json"));
    assert_eq!(summary["all_zero"], true);
    assert_eq!(summary["max_abs_phi"], 0.0);

    let out = radwave(&["transform", s(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_json(&run.join("transform/summary.json"));
    assert_eq!(t["dual_discrepancy"], 0.0);
    assert_eq!(t["sup_psi"], 0.0);
    assert_eq!(t["max_flux_ratio"], 0.0);

    // nothing to fit in a zero field
    let fit = radwave(&["fit", s(&run), "--probes", "0.1", "--windows", "2:4"]);
    assert_diagnostic(&fit, 2, "noise_floor");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("linear_h_sweep.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for run in [&a, &b] {
        assert!(radwave(&["simulate", s(&cfg), "--outputs", s(run)]).status.success());
    }
    for file in ["field.bin", "energy.csv", "decay.csv", "probes.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn flag_overrides_replace_top_level_fields() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = radwave(&[
        "simulate",
        s(&config_path("linear_h_sweep.json")),
        "--outputs",
        s(&run),
        "--seed",
        "17",
        "--store-every",
        "16",
    ]);
    assert!(out.status.success());
    let manifest = read_json(&run.join("manifest.json"));
    assert_eq!(manifest["config"]["seed"], 17);
    assert_eq!(manifest["config"]["store_every"], 16);
    assert_eq!(read_json(&run.join("summary.json"))["levels_stored"], 6);
}

#[test]
fn invalid_configs_exit_with_one_line_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad_grid = edited_config(dir.path(), "p3_reference.json", |c| c["grid"]["r_max"] = 1.3.into());
    assert_diagnostic(&radwave(&["simulate", s(&bad_grid)]), 1, "config");

    let bad_probe = edited_config(dir.path(), "linear_h_sweep.json", |c| c["probes"] = vec![50.0].into());
    assert_diagnostic(&radwave(&["simulate", s(&bad_probe)]), 1, "config");

    let wide = edited_config(dir.path(), "p4_transform.json", |c| c["data"]["support_radius"] = 0.3.into());
    assert_diagnostic(&radwave(&["simulate", s(&wide), "--outputs", s(&dir.path().join("w"))]), 1, "support");

    assert_diagnostic(&radwave(&["simulate", "/does/not/exist.json"]), 1, "io");
    assert_diagnostic(&radwave(&["frobnicate"]), 1, "usage");
    assert_diagnostic(&radwave(&["simulate", s(&config_path("p3_reference.json")), "--p", "two"]), 1, "usage");
}

#[test]
fn transform_of_a_short_run_is_a_coverage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited_config(dir.path(), "p3_reference.json", |c| {
        c["grid"]["t_end"] = 2.0.into();
        c["grid"]["r_max"] = 1.5.into();
    });
    let run = dir.path().join("run");
    assert!(radwave(&["simulate", s(&cfg), "--outputs", s(&run)]).status.success());
    assert_diagnostic(&radwave(&["transform", s(&run)]), 3, "coverage");
}

#[test]
fn cubic_transform_respects_the_flux_bound() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(radwave(&["simulate", s(&config_path("p3_reference.json")), "--outputs", s(&run)]).status.success());
    let out = dir.path().join("t");
    let res = radwave(&["transform", s(&run), "--outputs", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let flux = fs::read_to_string(out.join("flux.csv")).unwrap();
    let mut rows = 0;
    for line in flux.lines().skip(1) {
        let ratio: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(ratio <= 1.01, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 4);
    for file in ["pushed.bin", "dual.bin", "pseudo_energy.csv", "manifest.json"] {
        assert!(out.join(file).exists(), "{file}");
    }
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "transform");
}

#[test]
fn quartic_dual_discrepancy_shrinks_fourfold() {
    let dir = tempfile::tempdir().unwrap();
    let mut d = Vec::new();
    for (k, h) in [1.0 / 128.0, 1.0 / 256.0].into_iter().enumerate() {
        let cfg = edited_config(dir.path(), "p4_transform.json", |c| {
            c["grid"]["h"] = h.into();
            c["transform"]["h"] = h.into();
        });
        let run = dir.path().join(format!("run{k}"));
        assert!(radwave(&["simulate", s(&cfg), "--outputs", s(&run)]).status.success());
        let out = radwave(&["transform", s(&run)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        d.push(read_json(&run.join("transform/summary.json"))["dual_discrepancy"].as_f64().unwrap());
    }
    let ratio = d[0] / d[1];
    assert!((3.0..5.5).contains(&ratio), "{d:?}");
}

#[test]
fn fit_writes_fits_and_decay_tables() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(radwave(&["simulate", s(&config_path("p3_reference.json")), "--outputs", s(&run)]).status.success());
    let out = radwave(&["fit", s(&run), "--probes", "0.1,0.2", "--windows", "6:11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fits = fs::read_to_string(run.join("fit/fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 3);
    assert!(fits.starts_with("r_probe,t_lo,t_hi,exponent"));
    assert!(run.join("fit/decay.csv").exists());

    let outside = radwave(&["fit", s(&run), "--probes", "0.1", "--windows", "6:40"]);
    assert_diagnostic(&outside, 1, "domain");
}

fn sweep_column(csv: &str, column: &str) -> Vec<Option<f64>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == column).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().ok()).collect()
}

#[test]
fn h_sweep_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let res = radwave(&[
        "sweep",
        s(&config_path("linear_h_sweep.json")),
        "--axis",
        "h",
        "--values",
        "0.03125,0.015625,0.0078125",
        "--outputs",
        s(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let values = sweep_column(&csv, "value");
    assert_eq!(values, vec![Some(0.0078125), Some(0.015625), Some(0.03125)]);
    let order = sweep_column(&csv, "order")[0].unwrap();
    assert!((order - 2.0).abs() < 0.3, "{csv}");
    assert!(out.join("h=0.0078125/manifest.json").exists());
    assert_eq!(read_json(&out.join("manifest.json"))["command"], "sweep");
}

#[test]
fn p_sweep_recovers_small_data_tail_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let res = radwave(&[
        "sweep",
        s(&config_path("p_sweep_tails.json")),
        "--axis",
        "p",
        "--values",
        "4.5,3,4,3.5",
        "--outputs",
        s(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let ps = sweep_column(&csv, "value");
    let exps = sweep_column(&csv, "exponent");
    assert_eq!(ps, vec![Some(3.0), Some(3.5), Some(4.0), Some(4.5)]);
    for (p, e) in ps.iter().zip(&exps) {
        let (p, e) = (p.unwrap(), e.unwrap());
        assert!((e + (p - 1.0)).abs() < 0.25, "p = {p}: {e}");
    }
}

#[test]
fn sweep_output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let res = radwave_env(
            &[
                "sweep",
                s(&config_path("linear_h_sweep.json")),
                "--axis",
                "amplitude",
                "--values",
                "3e-6,1e-6,0,2e-6",
                "--outputs",
                s(&out),
            ],
            &[("RADWAVE_WORKERS", workers)],
        );
        assert!(res.status.success());
        tables.push(fs::read(out.join("sweep.csv")).unwrap());
        tables.push(fs::read(out.join("amplitude=0.000002/energy.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[2]);
    assert_eq!(tables[1], tables[3]);
    let bad = radwave_env(&["sweep", s(&config_path("linear_h_sweep.json")), "--axis", "p", "--values", "3"], &[("RADWAVE_WORKERS", "zero")]);
    assert_diagnostic(&bad, 1, "config");
}

#[test]
fn failed_sweep_rows_are_marked_and_empty_sweeps_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let res = radwave(&[
        "sweep",
        s(&config_path("linear_h_sweep.json")),
        "--axis",
        "p",
        "--values",
        "3,2",
        "--outputs",
        s(&out),
    ]);
    assert!(res.status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows[0].starts_with("2,failed: config"), "{csv}");
    assert!(rows[1].starts_with("3,ok"), "{csv}");

    let empty = radwave(&["sweep", s(&config_path("linear_h_sweep.json")), "--axis", "p", "--values"]);
    assert_diagnostic(&empty, 1, "config");
}

#[test]
fn validate_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = radwave(&["validate", "--criteria", "4,5", "--outputs", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.lines().all(|l| l.contains("[PASS]")), "{stdout}");
    let report = read_json(&dir.path().join("validation.json"));
    assert_eq!(report["criteria"].as_array().unwrap().len(), 2);
    assert_diagnostic(&radwave(&["validate", "--criteria", "12"]), 1, "config");
}
