//! Golden CLI cases shared by the CLI tests and the acceptance suite.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

/// Runs the binary from the crate root so relative data paths resolve.
pub fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxvar"))
        .args(args)
        .current_dir(manifest_dir())
        .output()
        .expect("spawn maxvar")
}

/// `(golden file stem, arguments)`; every case exits 0.
pub const GOLDEN_CASES: &[(&str, &[&str])] = &[
    (
        "d4_maxvar_n2",
        &["maxvar", "--input", "data/d4.csv", "--n", "2"],
    ),
    (
        "d4_cvar_half",
        &["cvar", "--input", "data/d4.csv", "--alpha", "0.5"],
    ),
    (
        "d4_var_half",
        &["var", "--input", "data/d4.csv", "--alpha", "0.5"],
    ),
    (
        "d4_minvar_n2",
        &["minvar", "--input", "data/d4.csv", "--n", "2"],
    ),
    (
        "d4_envelope_n2",
        &["envelope", "--input", "data/d4.csv", "--n", "2"],
    ),
    (
        "d4_curve_maxvar",
        &[
            "curve",
            "--input",
            "data/d4.csv",
            "--measure",
            "maxvar",
            "--grid",
            "1..3",
        ],
    ),
    (
        "var_equity",
        &[
            "var",
            "--input",
            "data/scenarios.csv",
            "--column",
            "equity",
            "--alpha",
            "0.9",
        ],
    ),
    (
        "cvar_mix_choquet",
        &[
            "cvar",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--alpha",
            "0.9",
            "--method",
            "choquet",
        ],
    ),
    (
        "cvar_mix",
        &[
            "cvar",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--alpha",
            "0.9",
        ],
    ),
    (
        "maxvar_mix_n3",
        &[
            "maxvar",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--n",
            "3",
        ],
    ),
    (
        "maxvar_mix_spectral",
        &[
            "maxvar",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--n",
            "3",
            "--method",
            "spectral",
        ],
    ),
    (
        "maxvar_mix_exact",
        &[
            "maxvar",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--n",
            "3",
            "--method",
            "mixture-exact",
        ],
    ),
    (
        "maxvar_mix_quad",
        &[
            "maxvar",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--n",
            "3",
            "--method",
            "mixture-quad",
        ],
    ),
    (
        "maxvar_mix_mc",
        &[
            "maxvar",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--n",
            "3",
            "--method",
            "mc",
            "--trials",
            "200000",
            "--seed",
            "7",
        ],
    ),
    (
        "minvar_credit",
        &[
            "minvar",
            "--input",
            "data/scenarios.csv",
            "--column",
            "credit",
            "--n",
            "4",
        ],
    ),
    (
        "envelope_equity_n3",
        &[
            "envelope",
            "--input",
            "data/scenarios.csv",
            "--column",
            "equity",
            "--n",
            "3",
        ],
    ),
    (
        "curve_cvar_equity",
        &[
            "curve",
            "--input",
            "data/scenarios.csv",
            "--column",
            "equity",
            "--measure",
            "cvar",
            "--grid",
            "0,0.25,0.5,0.75,0.9,0.99",
        ],
    ),
    (
        "curve_maxvar_mix",
        &[
            "curve",
            "--input",
            "data/scenarios.csv",
            "--weights",
            "equity=0.6,bond=0.4",
            "--measure",
            "maxvar",
            "--grid",
            "1..10",
        ],
    ),
    (
        "verify_scenarios",
        &["verify", "--input", "data/scenarios.csv"],
    ),
];

pub fn golden_path(stem: &str) -> PathBuf {
    manifest_dir()
        .join("tests/golden")
        .join(format!("{stem}.out"))
}

/// Compares one case against its golden file; returns a mismatch message.
pub fn check_golden(stem: &str, args: &[&str]) -> Result<(), String> {
    let out = run_cli(args);
    if !out.status.success() {
        return Err(format!(
            "{stem}: exit {:?}, stderr {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let expected = std::fs::read(golden_path(stem)).map_err(|e| format!("{stem}: {e}"))?;
    if out.stdout != expected {
        return Err(format!("{stem}: output differs from golden file"));
    }
    Ok(())
}
