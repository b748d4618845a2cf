//! End-to-end tests for the `crowdgen` binary: exercise each subcommand
//! through the real executable and check files and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use crowdgen::behavior::BehaviorClass;
use crowdgen::dataset::{default_camera, ScenarioSpec, SweepSpec};
use crowdgen::render::BackgroundStyle;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdgen"))
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        background: BackgroundStyle::Flat,
        behavior_class: BehaviorClass::Shy,
        camera: default_camera(),
        density: 0.25,
        environment: "open".to_string(),
        light: 0.6,
        pedestrian_count: 6,
        duration: 60,
        dt: 0.1,
        seed,
        noise_std: 0.0,
        agent_shade: 0.15,
        class_margin: 0.1,
    }
}

#[test]
fn simulate_then_annotate_reproduces_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scenario.json");
    std::fs::write(&cfg, serde_json::to_string(&small_spec(11)).unwrap()).unwrap();
    let out_dir = tmp.path().join("run");
    ok(&bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--no-frames")
        .output()
        .unwrap());

    let scen = out_dir.join("s0000");
    for f in ["trajectories.csv", "annotations.json", "boxes.csv", "scenario.json"] {
        assert!(scen.join(f).is_file(), "missing {f}");
    }
    assert!(!scen.join("frames").exists(), "--no-frames wrote frames");
    let csv = std::fs::read_to_string(scen.join("trajectories.csv")).unwrap();
    assert!(csv.starts_with("frame,agent_id,x,y,vx,vy\n"));

    // Re-annotating from the stored trajectories must reproduce the label
    // files byte for byte.
    let redo = tmp.path().join("redo");
    ok(&bin()
        .args(["annotate", "--config"])
        .arg(scen.join("scenario.json"))
        .arg("--out")
        .arg(&redo)
        .output()
        .unwrap());
    for f in ["annotations.json", "boxes.csv"] {
        assert_eq!(
            std::fs::read(scen.join(f)).unwrap(),
            std::fs::read(redo.join(f)).unwrap(),
            "{f} differs after re-annotation"
        );
    }
}

#[test]
fn table_then_classify_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scenario.json");
    std::fs::write(&cfg, serde_json::to_string(&small_spec(5)).unwrap()).unwrap();
    let out_dir = tmp.path().join("run");
    ok(&bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--no-frames")
        .output()
        .unwrap());

    let table = tmp.path().join("table.json");
    ok(&bin()
        .args(["table", "--samples", "5", "--margin", "0.05", "--seed", "1", "--out"])
        .arg(&table)
        .output()
        .unwrap());

    let result = tmp.path().join("result.json");
    ok(&bin()
        .args(["classify", "--config"])
        .arg(out_dir.join("s0000/trajectories.csv"))
        .arg("--table")
        .arg(&table)
        .arg("--out")
        .arg(&result)
        .output()
        .unwrap());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert!(v["class"].is_string());
    assert_eq!(v["fits"].as_array().unwrap().len(), 6);
}

fn small_sweep(root: &Path) -> SweepSpec {
    SweepSpec {
        backgrounds: vec![BackgroundStyle::Flat],
        behaviors: vec![BehaviorClass::Shy, BehaviorClass::Aggressive],
        cameras: vec![default_camera()],
        densities: vec![0.25],
        environments: vec!["open".to_string()],
        lights: vec![0.6],
        counts: vec![6],
        base_seed: 9,
        duration: 60,
        dt: 0.1,
        noise_std: 0.0,
        agent_shade: 0.15,
        class_margin: 0.1,
        output_root: Some(root.to_path_buf()),
    }
}

#[test]
fn generate_is_deterministic_and_eval_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let cfg = tmp.path().join("sweep.json");
    std::fs::write(&cfg, serde_json::to_string(&small_sweep(&a)).unwrap()).unwrap();

    ok(&bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--no-frames")
        .output()
        .unwrap());
    ok(&bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .arg("--no-frames")
        .output()
        .unwrap());

    // Same sweep into two roots: identical manifests and trajectories.
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("s0001/trajectories.csv")).unwrap(),
        std::fs::read(b.join("s0001/trajectories.csv")).unwrap()
    );

    let table = tmp.path().join("table.json");
    ok(&bin()
        .args(["table", "--samples", "5", "--margin", "0.05", "--seed", "1", "--out"])
        .arg(&table)
        .output()
        .unwrap());
    let out = bin()
        .args(["eval", "--config"])
        .arg(a.join("manifest.json"))
        .arg("--table")
        .arg(&table)
        .output()
        .unwrap();
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("accuracy:"), "eval output: {text}");
}

#[test]
fn config_errors_exit_with_2() {
    // Missing file.
    let out = bin()
        .args(["generate", "--config", "/nonexistent/sweep.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Unparseable config.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{not json").unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--out", "/tmp/unused"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Invalid flag value.
    let out = bin()
        .args(["classify", "--config", "x.csv", "--table", "t.json", "--dt", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn log_env_var_controls_verbosity() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("table.json");
    let quiet = bin()
        .env("LCROWD_LOG", "error")
        .args(["table", "--samples", "2", "--margin", "0.0", "--seed", "1", "--out"])
        .arg(&table)
        .output()
        .unwrap();
    ok(&quiet);
    assert!(quiet.stderr.is_empty());
    let chatty = bin()
        .env("LCROWD_LOG", "info")
        .args(["table", "--samples", "2", "--margin", "0.0", "--seed", "1", "--out"])
        .arg(&table)
        .output()
        .unwrap();
    ok(&chatty);
    assert!(String::from_utf8_lossy(&chatty.stderr).contains("class table"));
}
