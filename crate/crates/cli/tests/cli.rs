use std::path::{Path, PathBuf};
use std::process::Command;

use cellscope_cli::config::{self, Scale};
use cellscope_cli::{compute, run, ExperimentKind, RunOptions};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cellscope-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn data_rows(bytes: &[u8]) -> Vec<String> {
    String::from_utf8(bytes.to_vec())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

const ZERO_STEPS: &str = r#"
[model]
kind = "kicked_rotor"
kick = 4.7
cells = 5

[[experiment]]
kind = "quantum_section"
name = "q"
n_steps = 0
"#;

#[test]
fn zero_steps_give_a_blank_section_and_two_files() {
    let cfg = config::parse(ZERO_STEPS, Scale::Desk).unwrap();
    let out = scratch("zero");
    let manifest = run(&cfg, &RunOptions::default(), &out).unwrap();
    let names: Vec<_> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["q.csv", "q.ppm"]);
    let csv = std::fs::read(out.join("q.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|r| r.ends_with(",0.0")), "{rows:?}");
    let manifest_text = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    for f in &manifest.files {
        assert!(manifest_text.contains(&f.sha256));
    }
}

#[test]
fn outputs_carry_metadata_headers() {
    let cfg = config::parse(ZERO_STEPS, Scale::Desk).unwrap();
    let files = compute(&cfg, &RunOptions::default()).unwrap();
    let text = String::from_utf8(files[0].bytes.clone()).unwrap();
    for key in [
        "# cellscope ",
        "# model: kicked_rotor kick=4.7 cells=5",
        "# hbar: ",
        "# grid: ",
    ] {
        assert!(text.contains(key), "missing {key:?} in\n{text}");
    }
}

#[test]
fn rotor_section_has_one_row_per_cell() {
    let cfg = config::load(&configs().join("rotor_sections.toml"), Scale::Desk).unwrap();
    let files = compute(
        &cfg,
        &RunOptions {
            only: Some(ExperimentKind::ClassicalSection),
            ..Default::default()
        },
    )
    .unwrap();
    let csv = files.iter().find(|f| f.name == "classical.csv").unwrap();
    assert_eq!(data_rows(&csv.bytes).len(), 900);
}

#[test]
fn every_shipped_config_parses_at_both_scales() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        for scale in [Scale::Desk, Scale::Paper] {
            config::load(&path, scale).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    assert!(cellscope_cli::determinism_probe().unwrap());
}

#[test]
fn seed_changes_the_classical_section() {
    let cfg = config::parse(
        r#"
        [model]
        kind = "kicked_rotor"
        kick = 4.7
        cells = 6
        [[experiment]]
        kind = "classical_section"
        samples = 20
        iterations = 10
        "#,
        Scale::Desk,
    )
    .unwrap();
    let with = |seed| {
        compute(
            &cfg,
            &RunOptions {
                seed: Some(seed),
                ..Default::default()
            },
        )
        .unwrap()
    };
    assert_eq!(with(1), with(1));
    assert_ne!(with(1), with(2));
}

fn cellscope(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cellscope"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn validation_failures_are_json_on_stderr() {
    let dir = scratch("invalid");
    let cfg = dir.join("bad.toml");
    std::fs::write(
        &cfg,
        ZERO_STEPS.replace("n_steps = 0", "n_steps = 2\ndt = 0.5"),
    )
    .unwrap();
    let out = cellscope(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "validation");
    assert_eq!(err["field"], "experiment[0].dt");

    std::fs::write(
        &cfg,
        ZERO_STEPS.replace("n_steps = 0", "n_steps = 0\nkind_of = 1"),
    )
    .unwrap();
    let out = cellscope(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let off_grid = r#"
        [model]
        kind = "iho"
        hbar = 0.01
        dx = 0.01
        [[experiment]]
        kind = "otoc_curve"
        points = [[2.0, 0.0]]
        n_steps = 1
        dt = 0.1
    "#;
    std::fs::write(&cfg, off_grid).unwrap();
    let out = cellscope(&[
        "otoc-curve",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["field"], "experiment[0].points[0]", "{err}");
}

#[test]
fn subcommand_runs_only_its_kind() {
    let dir = scratch("subcommand");
    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, ZERO_STEPS).unwrap();
    let out = cellscope(&[
        "entropy-curve",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = cellscope(&[
        "quantum-section",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn heatmap_round_trip_and_ragged_input() {
    let dir = scratch("heatmap");
    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, ZERO_STEPS.replace("n_steps = 0", "n_steps = 1")).unwrap();
    let out = cellscope(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = dir.join("q.csv");
    let ppm = dir.join("again.ppm");
    let out = cellscope(&[
        "render-heatmap",
        csv.to_str().unwrap(),
        "--out",
        ppm.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::read(&ppm).unwrap(),
        std::fs::read(dir.join("q.ppm")).unwrap()
    );

    let text = std::fs::read_to_string(&csv).unwrap();
    let ragged: String = text
        .lines()
        .take(text.lines().count() - 1)
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&csv, ragged).unwrap();
    let out = cellscope(&["render-heatmap", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("ragged"));
}
