use std::fs;
use std::process::Command;

fn sdap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdap"))
}

fn config(dir: &tempfile::TempDir, body: &str) -> String {
    let p = dir.path().join("scenario.cfg");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_the_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "# tiny\nn_das = 4\nn_eves = 1\n");
    let out = dir.path().join("out");
    let st = sdap()
        .args(["run", "--config", &cfg, "--samples", "1000", "--seed", "7", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["solution.csv", "summary.csv", "trace.csv", "mc_report.csv", "constellation.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert!(text.starts_with("# sdap config_digest="), "{f}");
        assert!(text.lines().next().unwrap().ends_with("seed=7"), "{f}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = config(&dir, "n_dass = 4\n");
    let st = sdap().args(["run", "--config", &bad_key]).arg("--out-dir").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));

    let st = sdap().args(["run", "--variant", "imperfect"]).arg("--out-dir").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));

    let missing = dir.path().join("nope.cfg");
    let st = sdap().arg("validate").arg("--config").arg(&missing).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn infeasible_instances_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "n_das = 2\nn_eves = 1\ngamma_d_db = 90\np_da_mw = 0.000001\n");
    let st = sdap()
        .args(["run", "--config", &cfg, "--variant", "imperfect-det", "--out-dir"])
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn validate_and_bruteforce_on_a_small_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "n_das = 4\nn_eves = 2\n");
    let out = sdap()
        .args(["validate", "--config", &cfg, "--samples", "2000", "--variant", "imperfect-prob,unknown-det"])
        .output()
        .unwrap();
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert!(table.lines().all(|l| l.starts_with("PASS")));

    let st = sdap()
        .args(["bruteforce", "--config", &cfg, "--out-dir"])
        .arg(dir.path().join("bf"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(dir.path().join("bf/bruteforce.csv").exists());
}

#[test]
fn sweep_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&dir, "n_das = 4\nn_eves = 1\nedge_fraction = 1.0\n");
    let out = dir.path().join("sw");
    let st = sdap()
        .args(["sweep", "--config", &cfg, "--var", "n_eves", "--values", "1,2", "--trials", "2"])
        .args(["--layouts", "da_grid,ca_center", "--samples", "0", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let rows = fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count();
    assert_eq!(rows, 2 + 2 * 2 * 2);

    let st = sdap()
        .args(["heatmap", "--config", &cfg, "--trials", "3", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.join("heatmap.csv").exists());

    let st = sdap()
        .args(["sweep", "--config", &cfg, "--var", "n_eves", "--values", "2,1", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}
