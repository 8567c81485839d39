//! The `proxnest` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proxnest_cli::{Comparison, MetricsReport, Verdict};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_proxnest"));
    c.env("RUST_LOG", "warn");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(cfg)
        .arg("--output-dir")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn smoke_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("smoke_wavelet.json"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "posterior_mean.bin", "posterior_mean.json", "posterior_mean.csv", "run_log.jsonl", "status.json"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let report = MetricsReport::read(&dir.path().join("report.json")).unwrap();
    assert!(report.log_evidence.is_finite());
    assert!(report.snr_db_reconstruction.is_finite());
    assert_eq!(report.n_dead, 200);
    assert_eq!(report.diagnostics.constraint_violations, 0);
    let log = fs::read_to_string(dir.path().join("run_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 200);
    let status = fs::read_to_string(dir.path().join("status.json")).unwrap();
    assert!(status.contains("complete"));
}

#[test]
fn seed_override_changes_only_the_sampler() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&config("smoke_wavelet.json"), a.path(), &[]).status.success());
    assert!(run(&config("smoke_wavelet.json"), b.path(), &["--seed-override", "99"]).status.success());
    let ra = MetricsReport::read(&a.path().join("report.json")).unwrap();
    let rb = MetricsReport::read(&b.path().join("report.json")).unwrap();
    assert_eq!(ra.data_seed_hash, rb.data_seed_hash);
    assert_ne!(ra.log_evidence, rb.log_evidence);
}

#[test]
fn compare_subcommand_reads_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut report: MetricsReport = serde_json::from_str(&format!(
        r#"{{"model": "a", "log_evidence": -1350.0, "log_evidence_std": 1.0, "information": 5.0,
            "snr_db_reconstruction": 10.0, "analytic_log_evidence": null, "sigma": 0.1,
            "data_seed_hash": "h", "n_live": 10, "n_dead": 10, "wall_time_s": 1.0,
            "diagnostics": {}}}"#,
        serde_json::to_string(&proxnest::nested::KernelDiagnostics::default()).unwrap()
    ))
    .unwrap();
    let pa = dir.path().join("a.json");
    fs::write(&pa, serde_json::to_string(&report).unwrap()).unwrap();
    report.model = "b".into();
    report.log_evidence = -2960.0;
    let pb = dir.path().join("b.json");
    fs::write(&pb, serde_json::to_string(&report).unwrap()).unwrap();

    let out = bin().arg("compare").arg(&pa).arg(&pb).output().unwrap();
    assert!(out.status.success());
    let c: Comparison = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(c.log_bayes_factor, 1610.0);
    assert_eq!(c.verdict, Verdict::PrefersA);

    report.data_seed_hash = "other".into();
    fs::write(&pb, serde_json::to_string(&report).unwrap()).unwrap();
    let out = bin().arg("compare").arg(&pa).arg(&pb).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes_distinguish_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"image": 3}"#).unwrap();
    assert_eq!(run(&bad, dir.path(), &[]).status.code(), Some(1));
    assert_eq!(run(&dir.path().join("absent.json"), dir.path(), &[]).status.code(), Some(1));

    let text = fs::read_to_string(config("smoke_wavelet.json")).unwrap();
    let odd = dir.path().join("odd.json");
    fs::write(&odd, text.replace(r#""kind": "identity""#, r#""kind": "masked_fourier", "fraction": 0.5, "mask_seed": 1"#).replace(r#""rows": 16"#, r#""rows": 12"#)).unwrap();
    let out = run(&odd, &dir.path().join("odd"), &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let status = fs::read_to_string(dir.path().join("odd/status.json")).unwrap();
    assert!(status.contains("failed"));
}

#[test]
fn prior_sample_and_prox_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["prior-sample", "--count", "3", "--config"])
        .arg(config("smoke_wavelet.json"))
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let img = proxnest_cli::image_io::read_image(&dir.path().join("prior_sample_002.bin")).unwrap();
    assert_eq!(img.shape(), (16, 16));
    assert!(img.norm() > 0.0);

    for cfg in ["smoke_wavelet.json", "desk_wavelet.json", "desk_data_driven.json"] {
        let out = bin().args(["prox-check", "--config"]).arg(config(cfg)).output().unwrap();
        assert!(out.status.success(), "{cfg}: {}", String::from_utf8_lossy(&out.stdout));
    }
}
