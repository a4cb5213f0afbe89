use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsewire"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_presets_prints_required_ids() {
    let o = run(&["list-presets"], &repo_root());
    assert!(o.status.success());
    let ids: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    for id in [
        "fig3", "fig5", "fig6", "fig7-scaled", "fig8-scaled", "fig9", "fig11", "fig13-synthetic", "fig15", "fig16",
        "fig17",
    ] {
        assert!(ids.iter().any(|l| l == id), "missing {id}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let root = repo_root();
    assert_eq!(run(&["frobnicate"], &root).status.code(), Some(2));
    assert_eq!(run(&[], &root).status.code(), Some(2));
    assert_eq!(run(&["experiment", "no-such-preset"], &root).status.code(), Some(2));
    assert_eq!(run(&["experiment", "fig15", "--trials", "0"], &root).status.code(), Some(2));
    let o = run(&["experiment", "fig15", "--trials", "many"], &root);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[experiment]\nscenario = \"warp-drive\"\ntrials = 1\nseed = 0\n[sweep]\naxis = \"snr\"\nvalues = [1]\n").unwrap();
    let o = run(&["experiment", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gaussian-cs"));
}

#[test]
fn missing_matrix_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["diagnose", "absent.txt"], dir.path()).status.code(), Some(1));
}

#[test]
fn diagnose_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h.txt"), "2 3 0\n1 0 0.7071067811865476\n0 1 0.7071067811865476\n").unwrap();
    let o = run(&["diagnose", "h.txt"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("spark=3"), "{text}");
    assert!(text.contains("mu=0.707106781187"), "{text}");
}

#[test]
fn solve_prints_support() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h.txt"), "2 3 0\n1 0 0.7071067811865476\n0 1 0.7071067811865476\n").unwrap();
    fs::write(dir.path().join("y.txt"), "2 1 0\n0\n3\n").unwrap();
    fs::write(
        dir.path().join("solve.cfg"),
        "[problem]\nmatrix = \"h.txt\"\nobservation = \"y.txt\"\nk = 1\n\n[solver]\nid = \"omp\"\n",
    )
    .unwrap();
    let o = run(&["solve", "solve.cfg"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("support=[1]"));
}

#[test]
fn experiment_runs_are_reproducible() {
    let root = repo_root();
    let out = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for run_id in ["a", "b"] {
        let dir = out.path().join(run_id);
        let o = run(
            &["experiment", "presets/fig15.cfg", "--seed", "7", "--trials", "20", "--out", dir.to_str().unwrap()],
            &root,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<PathBuf> = stdout(&o).lines().map(PathBuf::from).collect();
        files.sort();
        assert_eq!(files.len(), 6);
        texts.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(texts[0], texts[1]);
}
