use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pleiolv");

const CONFIG: &str = "\
[run]
seed = 21
[simulate]
scenario = S5_3a
families = 30
times = 3
[sampler]
iterations = 120
burn_in = 40
[priors]
spike_slab = true
[bf]
target = lambda:1
grid = 0,0.5,1
iterations = 30
burn_in = 10
[diag]
max_lag = 5
";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .env_remove("PLEIOLV_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let o = run(dir, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    std::fs::write(root.join("run.ini"), CONFIG).unwrap();
    ok(&root, &["--config", "run.ini", "--out", "sim", "simulate"]);
    (dir, root)
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn fit_select_diag_bf_pipeline() {
    let (_tmp, root) = workspace();
    ok(&root, &["--config", "run.ini", "--out", "fit", "fit", "--data", "sim/dataset.csv"]);
    let draws = read(root.join("fit/draws.csv"));
    assert_eq!(draws.lines().count(), 81);
    assert!(draws.lines().next().unwrap().contains("omega_7"));

    ok(&root, &["--config", "run.ini", "--out", "sel", "select", "--draws", "fit/draws.csv"]);
    let sel = read(root.join("sel/selection.csv"));
    assert_eq!(sel.lines().count(), 8);
    assert!(sel.starts_with("phenotype,probability,selected"));

    ok(&root, &["--config", "run.ini", "--out", "dg", "diag", "--draws", "fit/draws.csv"]);
    assert_eq!(read(root.join("dg/acf.csv")).lines().count(), 7);
    assert!(read(root.join("dg/diag.csv")).starts_with("name,mean,sd,ess,iact,ess_per_1000"));

    ok(&root, &["--config", "run.ini", "--out", "bf", "bf", "--data", "sim/dataset.csv"]);
    let bf = read(root.join("bf/bf.csv"));
    assert_eq!(bf.lines().count(), 2);
    assert_eq!(read(root.join("bf/bf_grid.csv")).lines().count(), 4);

    let manifest: serde_json::Value = serde_json::from_str(&read(root.join("fit/manifest.json"))).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn rerun_is_byte_identical() {
    let (_tmp, root) = workspace();
    ok(&root, &["--config", "run.ini", "--out", "sim2", "simulate"]);
    assert_eq!(read(root.join("sim/dataset.csv")), read(root.join("sim2/dataset.csv")));
    for out in ["a", "b"] {
        ok(&root, &["--config", "run.ini", "--out", out, "fit", "--data", "sim/dataset.csv"]);
    }
    for f in ["draws.csv", "summary.csv"] {
        assert_eq!(read(root.join("a").join(f)), read(root.join("b").join(f)), "{f}");
    }
}

#[test]
fn seed_flag_and_env_override_change_the_stream() {
    let (_tmp, root) = workspace();
    ok(&root, &["--config", "run.ini", "--seed", "22", "--out", "s22", "simulate"]);
    assert_ne!(read(root.join("sim/dataset.csv")), read(root.join("s22/dataset.csv")));
    let o = Command::new(BIN)
        .current_dir(&root)
        .args(["--config", "run.ini", "--out", "env", "simulate"])
        .env("PLEIOLV_RUN_SEED", "22")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read(root.join("s22/dataset.csv")), read(root.join("env/dataset.csv")));
}

#[test]
fn exit_codes() {
    let (_tmp, root) = workspace();
    std::fs::write(root.join("bad.ini"), "[sampler]\nnot_a_key = 1\n").unwrap();
    let o = run(&root, &["--config", "bad.ini", "simulate"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(root.join("zero.ini"), "[sampler]\niterations = 0\n").unwrap();
    let o = run(&root, &["--config", "zero.ini", "--out", "z", "fit", "--data", "sim/dataset.csv"]);
    assert_eq!(o.status.code(), Some(2));

    // Binary cell outside {0, 1}.
    let text = read(root.join("sim/dataset.csv"));
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[1].split(',').map(String::from).collect();
    cells[8] = "2".into();
    lines[1] = cells.join(",");
    std::fs::write(root.join("bad.csv"), lines.join("\n") + "\n").unwrap();
    let o = run(&root, &["--out", "v", "fit", "--data", "bad.csv"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    // A draws file without indicator columns cannot drive selection.
    std::fs::write(root.join("plain.ini"), "[sampler]\niterations = 20\nburn_in = 5\n").unwrap();
    ok(&root, &["--config", "plain.ini", "--out", "plain", "fit", "--data", "sim/dataset.csv"]);
    let o = run(&root, &["--out", "p", "select", "--draws", "plain/draws.csv"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(&root, &["--out", "m", "fit", "--data", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn replicate_writes_per_replicate_directories() {
    let (_tmp, root) = workspace();
    std::fs::write(
        root.join("rep.ini"),
        "[run]\nseed = 5\n[simulate]\nscenario = S5_1\nfamilies = 20\n[sampler]\niterations = 60\nburn_in = 20\n[replicate]\ncount = 2\nindependence = both\n",
    )
    .unwrap();
    ok(&root, &["--config", "rep.ini", "--out", "r", "replicate"]);
    for f in ["replicates.csv", "replicates_independence.csv", "rep_0001/summary.csv", "rep_0002/summary_independence.csv"] {
        assert!(root.join("r").join(f).exists(), "{f}");
    }
    let o = run(&root, &["--config", "rep.ini", "--out", "r1", "replicate", "--count", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
