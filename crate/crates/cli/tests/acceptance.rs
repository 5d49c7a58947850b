//! Acceptance criterion 12: byte-determinism of the identities command for
//! a fixed run configuration, checked both through the library API and the
//! installed binary.

use polypotential_cli::{run_identities, OutputFormat, RunConfig};
use std::process::Command;

fn criterion(number: u32, description: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {number}: {description} ({detail})");
    assert!(pass, "criterion {number} failed: {description}: {detail}");
}

#[test]
fn criterion_12_identities_byte_determinism() {
    let cfg = RunConfig {
        seed: 2024,
        format: OutputFormat::Csv,
        tol: None,
        sphere_level: Some(16),
        radial: Some(24),
    };
    let (a, _) = run_identities(&[3], &cfg).unwrap();
    let (b, _) = run_identities(&[3], &cfg).unwrap();
    let lib_identical = a == b;

    // same through the binary, writing real files
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    for out in [&out1, &out2] {
        let status = Command::new(env!("CARGO_BIN_EXE_polypotential"))
            .args([
                "identities",
                "--n",
                "3",
                "--seed",
                "2024",
                "--sphere-level",
                "16",
                "--radial",
                "24",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let f1 = std::fs::read(&out1).unwrap();
    let f2 = std::fs::read(&out2).unwrap();
    let bin_identical = f1 == f2;

    criterion(
        12,
        "two runs of the identities command with one RunConfig are byte-identical",
        lib_identical && bin_identical,
        format!(
            "library {} bytes, binary {} bytes",
            a.len(),
            f1.len()
        ),
    );
}
