//! Helpers shared by the CLI test targets.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Set to rewrite golden files from the current output instead of comparing.
pub const BLESS_VAR: &str = "WOLDKIT_BLESS";

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn fixture(name: &str) -> PathBuf {
    tests_dir().join("fixtures").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    tests_dir().join("golden").join(name)
}

/// Runs the binary with the size budget left at its default.
pub fn woldkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_woldkit"))
        .args(args)
        .env_remove("WOLDKIT_BUDGET")
        .output()
        .expect("woldkit binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// Compares against the stored golden file, or rewrites it when blessing.
/// Returns a description of the first differing line on mismatch.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os(BLESS_VAR).is_some() {
        std::fs::write(&path, actual).map_err(|e| format!("writing {}: {e}", path.display()))?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    if expected == actual {
        return Ok(());
    }
    let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).unwrap_or(expected.lines().count().min(actual.lines().count()));
    Err(format!(
        "{name} differs at line {}: expected {:?}, got {:?}",
        line + 1,
        expected.lines().nth(line),
        actual.lines().nth(line)
    ))
}
