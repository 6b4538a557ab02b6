//! End-to-end runs of the `sgflab` binary.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

static NEXT: AtomicUsize = AtomicUsize::new(0);

/// Fresh scratch directory per call.
fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join(format!("cli-{}-{name}-{}", std::process::id(), NEXT.fetch_add(1, Ordering::Relaxed)));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn dir(&self) -> PathBuf {
        PathBuf::from(self.stdout.lines().last().expect("run directory on stdout"))
    }

    fn results(&self) -> Vec<Vec<String>> {
        let text = std::fs::read_to_string(self.dir().join("results.csv")).unwrap();
        text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
    }

    fn manifest(&self) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.dir().join("manifest.json")).unwrap()).unwrap()
    }
}

fn sgflab(work: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_sgflab"))
        .args(args)
        .args(["--out", work.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn with_config(work: &Path, args: &[&str], config: &str) -> Run {
    let path = work.join("config.json");
    std::fs::write(&path, config).unwrap();
    let mut all = args.to_vec();
    all.extend(["--config", path.to_str().unwrap()]);
    sgflab(work, &all)
}

/// Column `name` of every data row.
fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[k].clone()).collect()
}

fn num(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    column(rows, name).iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn riesz_table_reference_rows() {
    let w = scratch("riesz");
    let r = with_config(&w, &["riesz-table"], r#"{"alpha_list": [0, 1], "d_list": [1, 3], "radii": [0.5]}"#);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.results();
    let (alpha, d, c) = (num(&rows, "alpha"), column(&rows, "d"), num(&rows, "c_alpha"));
    // (1, 1) is outside the admissible range and skipped
    assert_eq!(rows.len() - 1, 3);
    for i in 0..3 {
        if alpha[i] == 0.0 {
            assert_eq!(c[i], 1.0);
        } else {
            assert_eq!(d[i], "3");
            assert!((c[i] - 4.0).abs() < 1e-9);
        }
    }
    let notes = r.manifest()["notes"].as_array().unwrap().len();
    assert_eq!(notes, 1);
}

#[test]
fn riesz_table_empty_list_is_header_only() {
    let w = scratch("riesz-empty");
    let r = with_config(&w, &["riesz-table"], r#"{"alpha_list": []}"#);
    assert_eq!(r.code, 0);
    let text = std::fs::read_to_string(r.dir().join("results.csv")).unwrap();
    assert_eq!(text, "alpha,d,regime,c_alpha,r,h_alpha\n");
}

#[test]
fn capacity_of_constant_field_is_one() {
    let w = scratch("cap-d0");
    let cfg = r#"{"kernel": {"source": "spectrum", "spectrum": {"kind": "delta0", "mass": 1, "dim": 1}},
                  "radii": [1, 4], "resolution": {"kind": "lattice"}}"#;
    let r = with_config(&w, &["capacity"], cfg);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(num(&r.results(), "capacity").iter().all(|&c| (c - 1.0).abs() < 1e-12));
    let m = r.manifest();
    assert_eq!(m["status"], "ok");
    assert!(m["spectrum_hash"].as_str().unwrap().starts_with("sha256:"));
    // every listed output exists and matches its digest
    for o in m["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(r.dir().join(o["file"].as_str().unwrap())).unwrap();
        let hex: String = sha2_hex(&bytes);
        assert_eq!(o["sha256"].as_str().unwrap(), hex);
    }
    assert!(r.dir().join("solution_1.csv").exists());
}

fn sha2_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn riesz_capacity_approaches_four_under_refinement() {
    let w = scratch("cap-riesz");
    let errs: Vec<f64> = [8.0, 16.0]
        .iter()
        .map(|n| {
            let cfg = format!(r#"{{"resolution": {{"kind": "absolute", "spacing": {}}}}}"#, 1.0 / n);
            let r = with_config(&w, &["capacity"], &cfg);
            assert_eq!(r.code, 0, "{}", r.stderr);
            let rows = r.results();
            assert!((num(&rows, "reference")[0] - 4.0).abs() < 1e-9);
            (num(&rows, "capacity")[0] - 4.0).abs()
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[1] < 0.05, "{errs:?}");
}

#[test]
fn malformed_config_is_a_schema_error() {
    let w = scratch("bad");
    for cfg in [r#"{"radii": "x"}"#, r#"{"bogus": 1}"#, "not json"] {
        let r = with_config(&w, &["capacity"], cfg);
        assert_eq!(r.code, 2, "{cfg}");
        assert!(r.stderr.contains("error"), "{}", r.stderr);
    }
    assert!(!w.join("out").exists());
}

#[test]
fn non_convergence_exits_nonzero_and_is_listed() {
    let w = scratch("noconv");
    let r = with_config(&w, &["capacity"], r#"{"solver": {"gap_tol_abs": 1e-8, "gap_tol_rel": 1e-6, "max_iter": 2, "pot_tol": 1e-3, "refresh": 500}}"#);
    assert_eq!(r.code, 1, "{}", r.stderr);
    let m = r.manifest();
    assert_eq!(m["status"], "partial_failure");
    assert_eq!(m["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn iid_persistence_is_a_power_of_two() {
    let w = scratch("iid");
    let r = sgflab(&w, &["persist"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.results();
    let (theta, se) = (num(&rows, "theta_hat")[0], num(&rows, "se_theta")[0]);
    assert!((theta - 8.0 * std::f64::consts::LN_2).abs() < 3.0 * se, "{theta} +- {se}");
}

#[test]
fn constant_field_persists_half_the_time() {
    let w = scratch("d0");
    let cfg = r#"{"spectrum": {"kind": "delta0", "mass": 1, "dim": 1},
                  "domain": {"kind": "points", "points": [[0], [1], [5]], "spacing": 1}, "n_samples": 20000}"#;
    let r = with_config(&w, &["persist"], cfg);
    let rows = r.results();
    let (p, se) = (num(&rows, "p_hat")[0], num(&rows, "se_p")[0]);
    assert!((p - 0.5).abs() < 3.0 * se);
}

#[test]
fn rare_events_are_flagged_with_a_bound() {
    let w = scratch("rare");
    let cfg = r#"{"spectrum": {"kind": "iid_lattice", "n": 10},
                  "domain": {"kind": "points", "points": [[0],[1],[2],[3],[4],[5],[6],[7],[8],[9]], "spacing": 1},
                  "levels": [2], "n_samples": 1000}"#;
    let r = with_config(&w, &["persist"], cfg);
    assert_eq!(r.code, 0);
    let rows = r.results();
    assert_eq!(column(&rows, "rare"), vec!["true"]);
    let bound = num(&rows, "p_upper")[0];
    assert!(bound > 0.0 && bound < 0.01);
    assert!(r.stderr.contains("no persisting sample"));
}

#[test]
fn importance_trend_on_a_singular_lattice_field() {
    let w = scratch("trend");
    let cfg = r#"{"spectrum": {"kind": "lattice_power", "alpha": 0.5, "mass": 1, "cells": 512},
                  "atomize_resolution": 0.001953125,
                  "domain": {"kind": "ball", "radii": [4, 8], "resolution": {"kind": "lattice"}},
                  "estimator": {"kind": "importance", "level": null},
                  "hypothesis": {"alpha": 0.5, "m": 1}, "n_samples": 20000}"#;
    let r = with_config(&w, &["persist"], cfg);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.results();
    assert_eq!(column(&rows, "method"), vec!["importance", "importance"]);
    assert!(num(&rows, "ratio").iter().all(|&x| x > 0.5 && x < 3.0));
}

#[test]
fn runs_reproduce_from_their_manifest() {
    let w = scratch("repro");
    let cfg = r#"{"n_samples": 5000, "levels": [0, 0.5], "seed": 11}"#;
    let a = with_config(&w, &["persist"], cfg);
    let b = with_config(&w, &["persist"], cfg);
    let manifest = a.dir().join("manifest.json");
    let c = sgflab(&w, &["persist", "--config", manifest.to_str().unwrap(), "--threads", "2"]);
    let bytes = |r: &Run| std::fs::read(r.dir().join("results.csv")).unwrap();
    assert_ne!(a.dir(), b.dir());
    assert_eq!(bytes(&a), bytes(&b));
    assert_eq!(bytes(&a), bytes(&c));
    assert_eq!(a.manifest()["config"], c.manifest()["config"]);
    let d = with_config(&w, &["persist", "--seed", "12"], cfg);
    assert_ne!(bytes(&a), bytes(&d));
    assert_eq!(d.manifest()["seeds"][0], 12);
}

#[test]
fn manifest_of_another_command_is_refused() {
    let w = scratch("wrong");
    let a = sgflab(&w, &["counterexample", "cantor"]);
    let m = a.dir().join("manifest.json");
    let r = sgflab(&w, &["persist", "--config", m.to_str().unwrap()]);
    assert_eq!(r.code, 2);
}

#[test]
fn cantor_first_blocks_give_four_quarter_intervals() {
    let w = scratch("cantor");
    let r = with_config(&w, &["counterexample", "cantor"], r#"{"sequence": [1, 2], "depth": 2}"#);
    assert_eq!(r.code, 0);
    let rows = r.results();
    assert_eq!(num(&rows, "left"), vec![1.0, 1.25, 1.5, 1.75]);
    assert!(num(&rows, "mass").iter().all(|&m| m == 0.25));
}

#[test]
fn irregular_capacity_jumps_past_the_threshold() {
    let w = scratch("irregular");
    let r = sgflab(&w, &["counterexample", "irregular"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.results();
    assert!(num(&rows, "ratio")[0] > 2.0);
    assert_eq!(column(&rows, "exceeds"), vec!["true"]);
}

#[test]
fn bad_counterexample_parameters_are_usage_errors() {
    let w = scratch("bad-ce");
    assert_eq!(with_config(&w, &["counterexample", "irregular"], r#"{"ratios": [4]}"#).code, 2);
    assert_eq!(with_config(&w, &["counterexample", "cantor"], r#"{"sequence": [2, 1]}"#).code, 2);
    assert_eq!(sgflab(&w, &["counterexample", "spiral"]).code, 2);
}

#[test]
fn repulsion_runs_on_a_small_budget() {
    let w = scratch("repulsion");
    let r = with_config(&w, &["repulsion"], r#"{"radii": [4], "experiment": {"resolution": {"kind": "lattice"}, "level": 0,
        "n_conditioned": 40, "min_accept_rate": 1e-4, "seed": 3,
        "solver": {"gap_tol_abs": 1e-8, "gap_tol_rel": 1e-6, "max_iter": 100000, "pot_tol": 1e-3, "refresh": 500}}}"#);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows = r.results();
    assert_eq!(num(&rows, "accepted"), vec![40.0]);
    assert!(num(&rows, "mean_pairing")[0] > 0.0);
}

#[test]
fn printed_defaults_are_valid_configs() {
    // the default repulsion run is long; its defaults are only parsed
    let cmds: [&[&str]; 6] =
        [&["riesz-table"], &["capacity"], &["persist"], &["counterexample", "cantor"], &["counterexample", "irregular"], &["repulsion"]];
    for cmd in cmds {
        let w = scratch("defaults");
        let printed = sgflab(&w, &[cmd, &["--print-defaults"]].concat());
        assert_eq!(printed.code, 0);
        let back: Value = serde_json::from_str(&printed.stdout).unwrap();
        assert!(back.is_object(), "{cmd:?}");
        if cmd != ["repulsion"] {
            let path = w.join("defaults.json");
            std::fs::write(&path, &printed.stdout).unwrap();
            let r = sgflab(&w, &[cmd, &["--config", path.to_str().unwrap()]].concat());
            assert_eq!(r.code, 0, "{cmd:?}: {}", r.stderr);
        }
    }
}
