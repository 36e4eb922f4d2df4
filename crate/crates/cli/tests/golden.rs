// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of every subcommand against stored outputs. Set
//! `UPDATE_GOLDEN=1` to rewrite the stored files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use noisetensor_cli::{run, Cli};

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> String {
    manifest().join("tests/fixtures").join(name).display().to_string()
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

fn golden(case: &str, args: &[&str]) {
    let out = tempfile::tempdir().unwrap();
    let mut argv = vec!["noisetensor".to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    argv.extend(["--out".to_string(), out.path().display().to_string()]);
    let cli = Cli::try_parse_from(&argv).unwrap();
    let report = run(&cli).unwrap();
    let failing: Vec<_> = report.failures().map(|c| (&c.check, c.value, c.tolerance)).collect();
    assert!(failing.is_empty(), "{case}: failing checks {failing:?}");

    let stored = manifest().join("tests/golden").join(case);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let _ = fs::remove_dir_all(&stored);
        fs::create_dir_all(&stored).unwrap();
        for name in sorted_files(out.path()) {
            fs::copy(out.path().join(&name), stored.join(&name)).unwrap();
        }
        return;
    }
    assert_eq!(sorted_files(out.path()), sorted_files(&stored), "{case}: file set differs");
    for name in sorted_files(&stored) {
        let got = fs::read_to_string(out.path().join(&name)).unwrap();
        let want = fs::read_to_string(stored.join(&name)).unwrap();
        assert!(got == want, "{case}: {name} differs from the stored output");
    }
}

#[test]
fn ensemble() {
    golden("ensemble", &["ensemble", "--input", &fixture("ensemble.json"), "--n", "3"]);
}

#[test]
fn spin() {
    golden("spin", &["spin", "--input", &fixture("spin.json")]);
}

#[test]
fn check_descent_spin() {
    golden("check_descent_spin", &["check-descent", "--input", &fixture("spin.json"), "--n", "3"]);
}

#[test]
fn check_descent_ensemble() {
    golden("check_descent_ensemble", &["check-descent", "--input", &fixture("check_ensemble.json"), "--n", "4"]);
}

#[test]
fn check_descent_bipartite() {
    golden("check_descent_bipartite", &["check-descent", "--input", &fixture("check_bipartite.json"), "--n", "3"]);
}

#[test]
fn ito() {
    golden("ito", &["ito", "--input", &fixture("dephasing.json"), "--seed", "7"]);
}

#[test]
fn jump() {
    golden("jump", &["jump", "--input", &fixture("decay.json"), "--seed", "9"]);
}

#[test]
fn qtensor() {
    golden("qtensor", &["qtensor", "--input", &fixture("bipartite.json")]);
}

#[test]
fn master_optical() {
    golden("master_optical", &["master", "--input", &fixture("optical.json"), "--n", "3"]);
}

#[test]
fn master_brownian() {
    golden("master_brownian", &["master", "--input", &fixture("brownian.json")]);
}

#[test]
fn collisional() {
    golden("collisional", &["collisional", "--input", &fixture("collisional.json")]);
}

#[test]
fn reduce_reducing() {
    golden("reduce_reducing", &["reduce", "--input", &fixture("reduce.json"), "--variant", "reducing"]);
}

#[test]
fn reduce_nonreducing() {
    golden("reduce_nonreducing", &["reduce", "--input", &fixture("reduce.json"), "--variant", "nonreducing"]);
}

#[test]
fn reduce_outcomes() {
    golden("reduce_outcomes", &["reduce", "--input", &fixture("reduce_outcomes.json")]);
}
