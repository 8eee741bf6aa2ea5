//! Command-line behaviour: outputs, file contracts and exit codes.

use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sekbest");

fn sekbest(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SE_KBEST_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
name = "small"
antenna_sizes = [2, 4]
m_orders = [16]
k_values = [2]
snr_grid_db = [10.0, inf]
frames = 50
run_seed = 3
"#;

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out = dir.path().join("out");
    let args = ["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = sekbest(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,m,k,snr_db,frames,bits_total,bit_errors,ber,mean_nodes_per_frame,algorithm,run_seed"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.ends_with(",se_kbest,3")));
    let noise_free: Vec<&&str> = rows.iter().filter(|r| r.split(',').nth(3) == Some("inf")).collect();
    assert_eq!(noise_free.len(), 2);
    assert!(noise_free.iter().all(|r| r.split(',').nth(6) == Some("0")));

    let summary: String = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"points\"") && summary.contains("\"version\""));

    // Existing results are kept unless --force is given.
    let o = sekbest(&args);
    assert_eq!(o.status.code(), Some(2));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(sekbest(&forced).status.success());
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = sekbest(&["run", config.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read_to_string(out.join("results.csv")).unwrap()
    };
    let (a, b, c) = (run("9", "a"), run("9", "b"), run("10", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(c.contains(",se_kbest,10"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, SMALL.replace("snr_grid_db = [10.0, inf]", "snr_grid_db = []")).unwrap();
    let out = dir.path().join("out");
    let o = sekbest(&["run", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("results.csv").exists());

    let o = sekbest(&["run", "--preset", "model9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(sekbest(&["run"]).status.code(), Some(2));
}

#[test]
fn sweep_prints_csv() {
    let o = sekbest(&["sweep", "--n", "2", "--m", "16", "--k", "3", "--snr", "0:10:20", "--frames", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("2,16,3,0.0,20,160,"));
}

#[test]
fn complexity_formula_mode() {
    let o = sekbest(&["complexity"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("this-work  8x8 K=5  10^2.2"));
    assert!(text.contains("IV  this-work  (K + K - 1) x 2N_T"));
}

#[test]
fn oracle_check_outcomes() {
    let o = sekbest(&["oracle-check", "--trials", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("hard_mismatches=0"));

    let o = sekbest(&["oracle-check", "--nt", "8", "--m", "256", "--k", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ML budget exceeded"));

    assert_eq!(sekbest(&["oracle-check", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn presets_listing_and_dump() {
    let o = sekbest(&["presets"]);
    let text = stdout(&o);
    assert!(text.contains("model1") && text.contains("model2") && text.contains("model3"));
    let o = sekbest(&["presets", "model2"]);
    assert!(stdout(&o).contains("k_values = [5, 10, 15, 20, 100]"), "{}", stdout(&o));
}
