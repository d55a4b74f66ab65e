//! End-to-end checks of the `hrisk` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hrisk(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hrisk"));
    cmd.args(args).env_remove("HRISK_OUT_DIR");
    cmd
}

fn ok(mut cmd: Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn simulate(dir: &Path) -> PathBuf {
    let inputs = dir.join("inputs");
    ok(hrisk(&[
        "simulate",
        "--out",
        inputs.to_str().unwrap(),
        "--seed",
        "7",
    ]));
    inputs.join("config.toml")
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn assert_same_bundle(a: &Path, b: &Path) {
    let (fa, fb) = (files(a), files(b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (k, v) in &fa {
        assert!(fb[k] == *v, "{} differs", k.display());
    }
}

fn csv_row(path: &Path, first: &str) -> BTreeMap<String, String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let row = r
        .records()
        .map(Result::unwrap)
        .find(|rec| &rec[0] == first)
        .unwrap_or_else(|| panic!("no row {first} in {}", path.display()));
    header
        .iter()
        .map(String::from)
        .zip(row.iter().map(String::from))
        .collect()
}

/// A full run and a stage-by-stage run produce the same bundle, and a
/// stage rerun from cached intermediates changes nothing.
#[test]
fn stages_reproduce_a_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path());
    let config = config.to_str().unwrap();
    let full = dir.path().join("full");
    ok(hrisk(&[
        "run",
        "--config",
        config,
        "--out",
        full.to_str().unwrap(),
    ]));

    let staged = dir.path().join("staged");
    for stage in [
        "ingest", "factor", "tgarch", "index", "regress", "quantile", "select", "breaks",
        "forecast", "report",
    ] {
        let mut cmd = hrisk(&[stage, "--config", config]);
        cmd.env("HRISK_OUT_DIR", &staged);
        ok(cmd);
    }
    assert_same_bundle(&full, &staged);

    for stem in [
        "forecast_comparison.csv",
        "forecast_comparison.md",
        "model_ranking.csv",
    ] {
        std::fs::remove_file(staged.join("tables").join(stem)).unwrap();
    }
    std::fs::remove_file(staged.join("series").join("risk_index.csv")).unwrap();
    for stage in ["index", "select", "forecast", "report"] {
        ok(hrisk(&[
            stage,
            "--config",
            config,
            "--out",
            staged.to_str().unwrap(),
        ]));
    }
    assert_same_bundle(&full, &staged);

    // the planted loading on the lagged index shows up as a positive, significant beta
    let row = csv_row(
        &full.join("tables").join("predictive_ols.csv"),
        "Univariate",
    );
    let beta: f64 = row["coef"].parse().unwrap();
    let p: f64 = row["p_value"].parse().unwrap();
    assert!(beta > 0.0 && p < 0.05, "beta {beta}, p {p}");
}

#[test]
fn missing_returns_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path());
    let returns = dir.path().join("inputs").join("returns.csv");
    std::fs::remove_file(&returns).unwrap();
    let out = hrisk(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("b").to_str().unwrap(),
    ])
    .output()
    .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("returns.csv"), "{stderr}");
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path());
    let text = std::fs::read_to_string(&config).unwrap();
    std::fs::write(&config, format!("colour = \"blue\"\n{text}")).unwrap();
    let out = hrisk(&["ingest", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn stage_without_its_inputs_names_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path());
    let out = hrisk(&[
        "index",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("empty").to_str().unwrap(),
    ])
    .output()
    .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("[index]") && stderr.contains("volatility.csv"),
        "{stderr}"
    );
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(hrisk(&[
            "simulate",
            "--out",
            d.to_str().unwrap(),
            "--seed",
            "3",
            "--n",
            "120",
        ]));
    }
    assert_same_bundle(&a, &b);
}

#[test]
fn help_lists_defaults() {
    let out = ok(hrisk(&["--help"]));
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["bootstrap_reps", "max_breaks", "ratio", "HRISK_OUT_DIR"] {
        assert!(text.contains(key), "missing {key}");
    }
}
