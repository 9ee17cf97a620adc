//! End-to-end checks of the command-line surface and the file formats:
//! profile ingestion, CSV schemas, theory reports, manifests and their
//! byte-exact replay guarantee.

use std::fs;
use std::path::Path;
use std::process::Command;

use cobranet::cli::{self, Fig3Config, Fig3Scale, SimulateConfig};
use cobranet::degree::presets;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cobranet"))
}

fn write_profile(dir: &Path, name: &str, profile: &cobranet::degree::DegreeProfile) -> String {
    let path = dir.join(name);
    fs::write(&path, profile.to_json()).unwrap();
    path.display().to_string()
}

#[test]
fn theory_subcommand_prints_the_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "regular6.json", &presets::regular6(1000));
    let output = bin()
        .args(["theory", "--profile", &profile, "--p", "0.3"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!((report["rho"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert!((report["p_c"].as_f64().unwrap() - 0.4772).abs() < 1e-3);
    assert!((report["q_star_closed"].as_f64().unwrap() - 0.7796).abs() < 1e-3);
    assert!((report["q_star_sum"].as_f64().unwrap() - 0.7796).abs() < 1e-3);
    assert_eq!(report["regime"], "Subcritical");
}

#[test]
fn theory_subcommand_rejects_other_stubbornness() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "regular6.json", &presets::regular6(100));
    let output = bin()
        .args(["theory", "--profile", &profile, "--p", "0.3", "--s", "3"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("only for s=2"), "{stderr}");
}

#[test]
fn simulate_subcommand_writes_csv_theory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.json", &presets::half_10_2(100));
    let out = dir.path().join("run.csv");
    let dump = dir.path().join("graph.txt");
    let output = bin()
        .args([
            "simulate",
            "--profile",
            &profile,
            "--n",
            "100",
            "--p",
            "0.3",
            "--t-max",
            "2",
            "--sample-dt",
            "0.5",
            "--trials",
            "2",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
            "--dump-graph",
            dump.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("effective seed: 5"), "{stderr}");

    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "trial,time,red_density");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first, ["0", "0", "1"]);
    // 2 trials x 5 samples (t = 0, 0.5, ..., 2.0)
    assert_eq!(csv.lines().count(), 1 + 2 * 5);

    let theory: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.csv.theory.json")).unwrap())
            .unwrap();
    assert!((theory["rho"].as_f64().unwrap() - 13.0 / 30.0).abs() < 1e-12);
    assert!(theory["p_c"].is_f64());
    assert!(theory["q_star_sum"].is_f64());

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("run.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["tool"], "cobranet");
    assert_eq!(manifest["base_seed"], 5);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for entry in outputs {
        assert_eq!(entry["sha256"].as_str().unwrap().len(), 64);
    }
    // graph dump: one line per edge, tail then head
    let dump_text = fs::read_to_string(&dump).unwrap();
    assert_eq!(dump_text.lines().count(), 600);

    // n mismatch is rejected
    let bad = bin()
        .args([
            "simulate",
            "--profile",
            &profile,
            "--n",
            "99",
            "--p",
            "0.3",
            "--out",
            dir.path().join("x.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn simulate_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimulateConfig {
        profile: presets::regular6(200),
        expected_n: Some(200),
        p: 0.35,
        s: 2,
        t_max: 3.0,
        sample_dt: 0.5,
        trials: 3,
        seed: 777,
        out: dir.path().join("a.csv"),
        dump_graph: None,
    };
    cli::run_simulate(&cfg).unwrap();
    let mut cfg2 = cfg.clone();
    cfg2.out = dir.path().join("b.csv");
    cli::run_simulate(&cfg2).unwrap();
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn dual_subcommand_reports_estimate_and_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.json", &presets::regular6(100));
    let output = bin()
        .args([
            "dual",
            "--profile",
            &profile,
            "--p",
            "0",
            "--vertex",
            "3",
            "--t-max",
            "2",
            "--trials",
            "32",
            "--seed",
            "9",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    // no deaths at p = 0
    assert!(stdout.contains("survival estimate 1.000000"), "{stdout}");
    assert!(stdout.contains("theory prediction 1.000000"), "{stdout}");
}

#[test]
fn tree_subcommand_reports_estimate_and_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.json", &presets::regular6(100));
    let output = bin()
        .args([
            "tree",
            "--profile",
            &profile,
            "--p",
            "1",
            "--root-degree",
            "6",
            "--trials",
            "500",
            "--gen-cap",
            "10",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("survival estimate 0.000000"), "{stdout}");
    assert!(stdout.contains("closed-form prediction 0.000000"), "{stdout}");
}

#[test]
fn verify_duality_subcommand_exits_zero_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.json", &presets::half_10_2(50));
    let output = bin()
        .args([
            "verify-duality",
            "--profile",
            &profile,
            "--p",
            "0.5",
            "--s",
            "2",
            "--t-max",
            "5",
            "--seeds",
            "25",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("25 seeds verified, zero mismatches"), "{stdout}");
}

#[test]
fn phase_diagram_subcommand_emits_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phase.csv");
    let output = bin()
        .args([
            "phase-diagram",
            "--rho-min",
            "0.1",
            "--rho-max",
            "0.5",
            "--rho-count",
            "5",
            "--p-count",
            "3",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("rho,p,regime,p_c\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 3);
    // rho = 0.5 rows carry the closed-form boundary sqrt(2) - 1
    assert!(csv.contains("0.41421356237309"), "{csv}");
    assert!(fs::metadata(dir.path().join("phase.csv.manifest.json")).is_ok());
}

#[test]
fn fig3_desk_scale_bundle_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Fig3Config {
        scale: Fig3Scale::Desk,
        trials: 5,
        seed: 4242,
        out_dir: dir.path().join("one"),
    };
    let summary = cli::run_fig3(&cfg).unwrap();
    assert_eq!(summary.n, 2000);
    assert_eq!(summary.combos.len(), 6);

    // desk-scale plateau: p = 0.3 rows within 0.03 of the prediction
    for (name, target) in [
        ("regular6", 0.7796),
        ("half-10-5", 0.7810),
        ("half-10-2", 0.6902),
    ] {
        let combo = summary
            .combos
            .iter()
            .find(|c| c.profile_name == name && c.p == 0.3)
            .unwrap();
        let mean = combo.mean_series.window_mean(20.0, 30.0);
        assert!(
            (mean - target).abs() <= 0.03,
            "{name}: plateau {mean} vs {target}"
        );
    }
    // supercritical decay at desk scale
    let blue = summary
        .combos
        .iter()
        .find(|c| c.profile_name == "half-10-2" && c.p == 0.45)
        .unwrap();
    assert!(*blue.mean_series.red_density.last().unwrap() < 0.1);

    // bundle contents
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary.manifest_path).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 13); // 6 raw + 6 mean CSVs + plot script
    let script = fs::read_to_string(&summary.plot_script_path).unwrap();
    assert!(script.contains("fig3_regular6_p0.30_mean.csv"));
    assert!(script.contains("set multiplot"));

    // replay with the manifest's seed: byte-identical CSVs
    let cfg2 = Fig3Config {
        scale: Fig3Scale::Desk,
        trials: 5,
        seed: manifest["base_seed"].as_u64().unwrap(),
        out_dir: dir.path().join("two"),
    };
    cli::run_fig3(&cfg2).unwrap();
    for entry in fs::read_dir(dir.path().join("one")).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name.to_string_lossy().ends_with(".csv") {
            let a = fs::read(entry.path()).unwrap();
            let b = fs::read(dir.path().join("two").join(&name)).unwrap();
            assert_eq!(a, b, "replay differs for {name:?}");
        }
    }
}

#[test]
fn fig3_subcommand_writes_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let output = bin()
        .args([
            "experiment",
            "fig3",
            "--scale",
            "desk",
            "--trials",
            "1",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("n = 2000"), "{stdout}");
    for file in [
        "fig3_regular6_p0.30.csv",
        "fig3_half-10-2_p0.45_mean.csv",
        "fig3.gp",
        "manifest.json",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
}

#[test]
fn threads_env_variable_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_profile(dir.path(), "p.json", &presets::regular6(50));
    let output = bin()
        .env("COBRANET_THREADS", "2")
        .args([
            "dual",
            "--profile",
            &profile,
            "--p",
            "0",
            "--all-vertices",
            "--t-max",
            "1",
            "--trials",
            "8",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");

    let bad = bin()
        .env("COBRANET_THREADS", "abc")
        .args([
            "dual",
            "--profile",
            &profile,
            "--p",
            "0",
            "--all-vertices",
            "--t-max",
            "1",
            "--trials",
            "8",
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
