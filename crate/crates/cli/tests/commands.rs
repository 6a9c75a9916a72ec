use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cascade_cli::scenario::digest;
use cascade_cli::{run, CliError, Command, RunOptions};

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn opts(scenario: PathBuf, out: &Path) -> RunOptions {
    RunOptions {
        scenario,
        seed: None,
        workers: Some(2),
        out_dir: out.to_path_buf(),
        exhaustive: false,
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn text(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Writes a copy of a bundled scenario with one substring replaced.
fn variant(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let original = std::fs::read_to_string(bundled(name)).unwrap();
    assert!(original.contains(from), "{name} lacks `{from}`");
    let path = dir.join(name);
    std::fs::write(&path, original.replacen(from, to, 1)).unwrap();
    path
}

fn column<'a>(csv: &'a str, name: &str) -> Vec<&'a str> {
    let mut lines = csv.lines();
    let i = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap()).collect()
}

#[test]
fn dyad_sweep_rows_below_unit_gain_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::DyadSweep, &opts(bundled("fig3.scn"), dir.path())).unwrap();
    let grid = text(dir.path(), "fig3_grid.csv");
    let k = column(&grid, "K");
    let class = column(&grid, "class");
    assert_eq!(k.len(), 2500);
    for (k, c) in k.iter().zip(&class) {
        if k.parse::<f64>().unwrap() < 1.0 {
            assert_eq!(*c, "stable", "K = {k}");
        }
    }
    assert!(class.contains(&"unstable"));
}

#[test]
fn empty_grid_is_a_validation_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(dir.path(), "fig3.scn", "count = 50 }", "count = 0 }");
    let out = dir.path().join("out");
    let err = run(Command::DyadSweep, &opts(path, &out)).unwrap_err();
    assert!(matches!(err, CliError::Validation(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn unknown_dependency_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(
        dir.path(),
        "fire.scn",
        r#"dependencies = ["U2", "U3"]"#,
        r#"dependencies = ["U2", "U9"]"#,
    );
    let err = run(Command::TeamSim, &opts(path, &dir.path().join("out"))).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("U9"), "{err}");
}

#[test]
fn command_must_match_model() {
    let dir = tempfile::tempdir().unwrap();
    let err = run(
        Command::TeamSim,
        &opts(bundled("fig3.scn"), &dir.path().join("out")),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let mut o = opts(bundled("fig8.scn"), &dir.path().join("out"));
    o.exhaustive = true;
    assert_eq!(run(Command::NetSim, &o).unwrap_err().exit_code(), 2);
    o.exhaustive = false;
    o.workers = Some(0);
    assert_eq!(run(Command::NetSim, &o).unwrap_err().exit_code(), 2);
}

#[test]
fn exhaustive_cap_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = variant(
        dir.path(),
        "fire.scn",
        "[optimizer]",
        "[optimizer]\nexhaustive_cap = 1000",
    );
    let mut o = opts(path, &dir.path().join("out"));
    o.exhaustive = true;
    let err = run(Command::TeamOpt, &o).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let err = run(
        Command::DyadSweep,
        &opts(bundled("fig3.scn"), &blocker.join("out")),
    )
    .unwrap_err();
    assert!(matches!(err, CliError::Runtime(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn net_sweep_broker_outlasts_hierarchy() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::NetSweep, &opts(bundled("fig8.scn"), dir.path())).unwrap();
    let summary = text(dir.path(), "fig8_summary.csv");
    let threshold = |name: &str| -> f64 {
        let line = summary
            .lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(threshold("broker") > threshold("hierarchy"));

    run(Command::NetSweep, &opts(bundled("fig9.scn"), dir.path())).unwrap();
    let stable = |name: &str| {
        let env = text(dir.path(), &format!("fig9_{name}_envelope.csv"));
        column(&env, "class")
            .iter()
            .filter(|c| **c == "stable")
            .count()
    };
    assert!(stable("broker") >= stable("hierarchy"));
}

#[test]
fn net_sim_stimulus_reaches_every_other_leaf() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::NetSim, &opts(bundled("fig9.scn"), dir.path())).unwrap();
    for name in ["hierarchy", "broker"] {
        let csv = text(dir.path(), &format!("fig9_{name}_propagation.csv"));
        let deltas = column(&csv, "delta");
        assert!(!deltas.is_empty());
        assert!(
            deltas.iter().all(|d| d.parse::<f64>().unwrap() > 0.0),
            "{name}"
        );
    }
}

#[test]
fn fire_team_sim_fitness_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(Command::TeamSim, &opts(bundled("fire.scn"), dir.path())).unwrap();
    assert_eq!(outcome.summary, "fitness 0.753141783568472\n");
    let accuracy = text(dir.path(), "fire_accuracy.csv");
    assert_eq!(
        column(&accuracy.replace("# fitness=", "#"), "decision").len(),
        4 * 36 + 1
    );
}

#[test]
fn fire_exhaustive_optimum_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(bundled("fire.scn"), dir.path());
    o.exhaustive = true;
    run(Command::TeamOpt, &o).unwrap();
    let report = text(dir.path(), "fire_report.txt");
    assert!(report.contains("fitness: 0.8049214190634884\n"), "{report}");
    assert!(report.contains("531441 structures"));
    assert!(!dir.path().join("fire_history.csv").exists());
}

#[test]
fn fire_ga_reaches_the_optimum_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::TeamOpt, &opts(bundled("fire.scn"), dir.path())).unwrap();
    let history = text(dir.path(), "fire_history.csv");
    let best: Vec<f64> = column(&history, "best_fitness")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(best.len(), 101);
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    assert!(*best.last().unwrap() >= 0.99 * 0.8049214190634884);

    // the emitted structure scores the reported fitness under team-sim
    let best_toml = text(dir.path(), "fire_best.toml");
    let original = std::fs::read_to_string(bundled("fire.scn")).unwrap();
    let cut = original.find("[structure]").unwrap();
    let end = original[cut..]
        .find("\n[optimizer]")
        .map_or(original.len(), |i| cut + i);
    let replay = dir.path().join("replay.scn");
    std::fs::write(
        &replay,
        format!("{}{}{}", &original[..cut], best_toml, &original[end..]),
    )
    .unwrap();
    let out = dir.path().join("replay");
    let sim = run(Command::TeamSim, &opts(replay, &out)).unwrap();
    let reported = best_toml
        .lines()
        .find_map(|l| l.strip_prefix("# fitness: "))
        .unwrap();
    assert_eq!(sim.summary, format!("fitness {reported}\n"));
}

#[test]
fn slower_fire_changes_the_best_structure() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(bundled("fire.scn"), &dir.path().join("fast"));
    o.exhaustive = true;
    run(Command::TeamOpt, &o).unwrap();
    o.scenario = bundled("fire_slow.scn");
    o.out_dir = dir.path().join("slow");
    run(Command::TeamOpt, &o).unwrap();
    let body = |d: &str, f: &str| {
        let t = text(&dir.path().join(d), f);
        t[t.find("responsibility:").unwrap()..].to_string()
    };
    assert_ne!(
        body("fast", "fire_report.txt"),
        body("slow", "fire_slow_report.txt")
    );
}

#[test]
fn manifest_lists_exactly_the_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = bundled("fig9.scn");
    let before = std::fs::read(&scenario).unwrap();
    let out = dir.path().join("out");
    let outcome = run(Command::NetSim, &opts(scenario.clone(), &out)).unwrap();
    let written = files(&out);
    let manifest_name = outcome
        .manifest_path
        .file_name()
        .unwrap()
        .to_string_lossy()
        .into_owned();
    assert_eq!(manifest_name, "fig9_net-sim_manifest.json");
    let listed: Vec<&str> = outcome
        .manifest
        .files
        .iter()
        .map(|f| f.name.as_str())
        .collect();
    let mut on_disk: Vec<&str> = written
        .keys()
        .map(String::as_str)
        .filter(|n| *n != manifest_name)
        .collect();
    on_disk.sort();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(sorted, on_disk);
    for f in &outcome.manifest.files {
        let bytes = &written[&f.name];
        assert_eq!(f.bytes, bytes.len());
        assert_eq!(f.sha256, digest(bytes));
    }
    assert_eq!(outcome.manifest.scenario, "fig9.scn");
    assert_eq!(outcome.manifest.scenario_sha256, digest(&before));
    assert_eq!(std::fs::read(&scenario).unwrap(), before);
    let json: serde_json::Value = serde_json::from_slice(&written[&manifest_name]).unwrap();
    assert_eq!(json["command"], "net-sim");
    assert!(json.get("workers").is_none());
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(bundled("fire.scn"), dir.path());
    o.seed = Some(7);
    let outcome = run(Command::TeamOpt, &o).unwrap();
    assert_eq!(outcome.manifest.seed, 7);
    assert!(text(dir.path(), "fire_report.txt").contains("seed 7"));
}

#[test]
fn reruns_are_byte_identical_apart_from_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut o = opts(bundled("fig8.scn"), &a);
    o.workers = Some(1);
    run(Command::NetSweep, &o).unwrap();
    o.out_dir = b.clone();
    o.workers = Some(3);
    run(Command::NetSweep, &o).unwrap();
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        if !name.ends_with("_manifest.json") {
            assert_eq!(bytes, &fb[name], "{name}");
        }
    }
}
