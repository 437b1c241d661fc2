//! End-to-end checks of the binary: exit codes, config precedence, artifact
//! shapes, and replay mismatch detection.

use std::path::Path;
use std::process::Command;

use isoprune_cli::config::PROFILE_ENV;

const TINY: &[&str] = &[
    "--net",
    "mlp:20,16,10",
    "--blob-train-per-class",
    "30",
    "--blob-eval-per-class",
    "10",
    "--max-iters",
    "60",
    "--eval-every",
    "30",
    "--spectrum-examples",
    "4",
];

fn run(sub: &str, args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_isoprune"))
        .arg(sub)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove(PROFILE_ENV)
        .output()
        .unwrap()
}

#[test]
fn prune_writes_report_sparsity_table_and_masks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prune");
    let output = run("prune", &[TINY, &["--kappa", "0.8"]].concat(), &out);
    assert!(output.status.success());
    for name in ["manifest.json", "prune_report.json", "saliency_summary.json", "sparsity.csv"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let sparsity = std::fs::read_to_string(out.join("sparsity.csv")).unwrap();
    let mut lines = sparsity.lines();
    assert_eq!(
        lines.next().unwrap(),
        "layer,rows,cols,total,retained,pruned_fraction"
    );
    assert_eq!(lines.count(), 2);
    assert!(out.join("mask_layer1.pgm").is_file());
    assert!(out.join("mask_layer2.pgm").is_file());
}

#[test]
fn compare_init_emits_one_row_per_scheme_loss_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let output = run(
        "compare-init",
        &[TINY, &["--kappa", "0.5", "--n-seeds", "1"]].concat(),
        &out,
    );
    assert!(output.status.success());
    let table = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,loss,seed,status,cn_dense,cn_sparse,error_pct,disconnected"
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    for scheme in ["vs_lecun", "vs_glorot", "vs_he", "orthogonal"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(scheme)).count(), 2);
    }
}

#[test]
fn sculpt_reports_budget_matched_sparsity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sculpt");
    let output = run(
        "sculpt",
        &[TINY, &["--big-net", "mlp:20,64,64,10"]].concat(),
        &out,
    );
    assert!(output.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sculpt_report.json")).unwrap())
            .unwrap();
    let budget = summary["base_weights"].as_u64().unwrap();
    let retained = summary["retained_weights"].as_u64().unwrap();
    assert!(summary["big_weights"].as_u64().unwrap() > budget);
    assert!(retained <= budget);
    assert!(budget - retained < 40);
}

#[test]
fn flag_overrides_config_file_and_both_land_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, r#"{"kappa": 0.25, "seed": 7}"#).unwrap();
    let out = dir.path().join("spec");
    let output = run(
        "spectrum",
        &[
            TINY,
            &["--config", file.to_str().unwrap(), "--kappa", "0.75"],
        ]
        .concat(),
        &out,
    );
    assert!(output.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["kappa"].as_f64().unwrap(), 0.75);
    assert_eq!(manifest["config"]["seed"].as_u64().unwrap(), 7);
}

#[test]
fn unknown_config_field_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\n  \"learning_rate\": 0.1\n}\n").unwrap();
    let output = run(
        "meanfield",
        &["--config", file.to_str().unwrap()],
        &dir.path().join("mf"),
    );
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("learning_rate"), "stderr: {stderr}");
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn report_flags_tampered_outputs_as_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("train");
    let output = run("train", &[TINY, &["--kappa", "0.5"]].concat(), &out);
    assert!(output.status.success());
    let curve = out.join("curve.csv");
    let mut text = std::fs::read_to_string(&curve).unwrap();
    text.push_str("999,0.0,0.0,0.0\n");
    std::fs::write(&curve, text).unwrap();
    let report = Command::new(env!("CARGO_BIN_EXE_isoprune"))
        .arg("report")
        .arg(out.join("manifest.json"))
        .arg("--out")
        .arg(dir.path().join("replay"))
        .env_remove(PROFILE_ENV)
        .output()
        .unwrap();
    assert_eq!(report.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&report.stdout);
    assert!(stdout.contains("MISMATCH"), "stdout: {stdout}");
    assert!(stdout.contains("curve.csv"), "stdout: {stdout}");
}
