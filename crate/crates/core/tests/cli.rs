use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use stoch_ch::experiments::{decode_snapshot, RunManifest, RunStatus};

const BIN: &str = env!("CARGO_BIN_EXE_stoch-ch");

const SMALL: &str = r#"{
  "schema_version": 1,
  "model": {"epsilon": 0.01, "sigma": {"kind": "mean_plus_sine", "mean": 0.5, "amp": 0.2}, "n": 8},
  "stepper": {"scheme": "split_stratonovich", "dt": 0.001, "t_end": 0.02},
  "initial": {"kind": "single_mode", "j": 1, "amp": 0.5},
  "ensemble": {"n_paths": 4, "master_seed": 5, "stop_radii": [1, 4]},
  "outputs": {"directory": "unused", "record_every": 5}
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], workers: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("STOCH_CH_WORKERS", w);
    }
    let out = cmd.output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let m = RunManifest::load(dir).unwrap();
    m.files.iter().map(|f| (f.path.clone(), fs::read(dir.join(&f.path)).unwrap())).collect()
}

#[test]
fn simulate_writes_layout_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let (code, text) = run(&["simulate", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()], None);
        assert_eq!(code, 0, "{text}");
    }
    assert_eq!(data_files(&a), data_files(&b));

    let ledger = fs::read_to_string(a.join("ledger.csv")).unwrap();
    let mut lines = ledger.lines();
    assert_eq!(lines.next().unwrap(), "t,h1_sq,hm_sq,diss_accum,sigma_term_a,sigma_term_b,min_slope,w1inf_sq_accum");
    assert_eq!(lines.count(), 5);

    let snaps: Vec<_> = fs::read_dir(a.join("fields")).unwrap().collect();
    assert_eq!(snaps.len(), 5);
    let u0 = decode_snapshot(&fs::read(a.join("fields/0000.snap")).unwrap()).unwrap();
    assert_eq!(u0.n_modes(), 8);
    assert!((u0.eval_at(0.0) - 0.5).abs() < 1e-14);

    let m = RunManifest::load(&a).unwrap();
    assert_eq!(m.status, RunStatus::Completed);
    assert_eq!(m.config["model"]["n"], 8);
    assert_eq!(m.generator, stoch_ch::noise::GENERATOR_ID);
    assert_eq!(m.files.len(), 6);
}

#[test]
fn verify_manifest_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("run");
    assert_eq!(run(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None).0, 0);
    assert_eq!(run(&["verify-manifest", out.to_str().unwrap()], None).0, 0);
    fs::write(out.join("fields/0002.snap"), b"SCHS").unwrap();
    let (code, text) = run(&["verify-manifest", out.to_str().unwrap()], None);
    assert_eq!(code, 4);
    assert!(text.contains("fields/0002.snap"));
}

#[test]
fn ensemble_stats_independent_of_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let mut stats = Vec::new();
    for w in ["1", "3"] {
        let d = tmp.path().join(format!("w{w}"));
        let (code, text) = run(&["ensemble", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()], Some(w));
        assert_eq!(code, 0, "{text}");
        stats.push(fs::read(d.join("stats.csv")).unwrap());
    }
    assert_eq!(stats[0], stats[1]);
    let text = String::from_utf8(stats.remove(0)).unwrap();
    assert!(text.starts_with("functional,t,mean,stderr,n_samples\n"));
    assert!(text.contains("stop_prob_r4,"));
    assert!(text.contains("moment_sup_h1_p8,"));
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("x");
    let args = |extra: &'static str| vec!["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--set", extra];
    let (code, text) = run(&args("model.typo=1"), None);
    assert_eq!(code, 2);
    assert!(text.contains("typo"), "{text}");
    assert_eq!(run(&args("stepper.dt=0.003"), None).0, 2);
    assert_eq!(run(&args("ensemble.n_paths=0"), None).0, 2);
    assert_eq!(run(&["ensemble", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], Some("zero")).0, 2);
    let bad = write_config(tmp.path(), "{ \"schema_version\": 1,\n  oops }");
    let (code, text) = run(&["simulate", bad.to_str().unwrap()], None);
    assert_eq!(code, 2);
    assert!(text.contains("line 2"), "{text}");
}

#[test]
fn blowup_is_recorded_with_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("boom");
    let (code, text) = run(
        &[
            "simulate",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--set",
            "stepper.scheme=euler_maruyama",
            "--set",
            "model.n=64",
            "--set",
            "model.sigma.amp=3",
            "--set",
            "stepper.dt=0.01",
            "--set",
            "stepper.t_end=5",
            "--set",
            "outputs.record_every=1",
        ],
        None,
    );
    assert_eq!(code, 3, "{text}");
    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.status, RunStatus::Blowup);
    assert_eq!(m.failures.len(), 1);
}

#[test]
fn gronwall_and_uniqueness_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let with_sections = SMALL.trim_end().trim_end_matches('}').to_string()
        + r#", "uniqueness": {"amplitudes": [0.01, 0.001]},
        "gronwall": {"simulation": {"preset": {"kind": "deterministic", "a_rate": 1.0},
                     "samples": 10, "steps": 50, "t_end": 1.0, "xi0": 1.0, "seed": 2}, "nu": 0.5, "r": 0.75}}"#;
    let cfg = write_config(tmp.path(), &with_sections);
    let g = tmp.path().join("g");
    assert_eq!(run(&["gronwall", cfg.to_str().unwrap(), "--out", g.to_str().unwrap()], None).0, 0);
    let corrupted = tmp.path().join("gc");
    let (code, _) = run(
        &[
            "gronwall",
            cfg.to_str().unwrap(),
            "--out",
            corrupted.to_str().unwrap(),
            "--set",
            r#"gronwall.simulation.preset={"kind":"corrupted","a_rate":1.0,"eta":0.5,"beta":1.0}"#,
        ],
        None,
    );
    assert_eq!(code, 4);
    let u = tmp.path().join("u");
    let (code, text) = run(&["uniqueness", cfg.to_str().unwrap(), "--out", u.to_str().unwrap()], None);
    assert_eq!(code, 0, "{text}");
    let csv = fs::read_to_string(u.join("uniqueness.csv")).unwrap();
    assert!(csv.lines().next().unwrap() == "kind,parameter,sup_h1_distance,final_h1_distance");
    assert_eq!(csv.lines().filter(|l| l.starts_with("perturbation")).count(), 2);
}

#[test]
fn converge_delta_axis_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let with_sections = SMALL.trim_end().trim_end_matches('}').to_string()
        + r#", "converge": {"axis": "delta", "levels": [0.2, 0.1, 0.05]},
        "commutators": {"j_max": 200, "samples": 1}}"#;
    let cfg = write_config(tmp.path(), &with_sections);
    let d = tmp.path().join("d");
    let (code, text) = run(&["converge", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()], None);
    assert_eq!(code, 0, "{text}");
    let csv = fs::read_to_string(d.join("converge.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "delta,norm_E1,norm_E2,norm_E3,norm_R,residual");
    assert_eq!(csv.lines().count(), 4);
    let (code, _) = run(&["converge", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--axis", "n"], None);
    assert_eq!(code, 2);
}
