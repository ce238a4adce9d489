use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mec_cli::output::read_summary;
use mec_core::Policy;

fn mec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mec")).args(args).current_dir(cwd).output().unwrap()
}

#[test]
fn run_writes_summary_metadata_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = mec(
        &[
            "run", "--policy", "even", "--slots", "40", "--seed", "9", "--V", "1e11", "--trace",
            "--out", "r",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_summary(&dir.path().join("r/summary.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].policy, rows[0].seed, rows[0].slots), (Policy::Even, 9, 40));

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r/summary.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["config"]["V"], 1e11);
    assert_eq!(meta["config"]["seed"], 9);
    assert!(meta["poisson_sampler"].as_str().unwrap().contains("Poisson"));
    assert!(meta["version"].is_string());

    let trace = fs::read_to_string(dir.path().join("r/traces/trace_even_seed9.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "t,k,Q,A,f,p_tx,a,D_l,D_tx,P,objective");
    assert_eq!(lines.count(), 40 * 7);
}

#[test]
fn baseline_compare_runs_both_policies_on_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = mec(&["baseline-compare", "--slots", "60", "--out", "c"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_summary(&dir.path().join("c/summary.csv")).unwrap();
    let policies: Vec<Policy> = rows.iter().map(|r| r.policy).collect();
    assert_eq!(policies, vec![Policy::Optimal, Policy::Even]);
    assert_eq!(rows[0].seed, rows[1].seed);
    assert!(String::from_utf8_lossy(&out.stdout).contains("even/optimal"));
}

#[test]
fn sweep_follows_plan_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("net.toml"), small_config()).unwrap();
    fs::write(
        dir.path().join("plan.toml"),
        "config = \"net.toml\"\naxis = \"lambda\"\nvalues = [1e5, 2e5]\npolicies = [\"optimal\"]\nseeds = [1, 2]\nout = \"sweep\"\n",
    )
    .unwrap();
    let out = mec(&["sweep", "plan.toml", "--trace"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_summary(&dir.path().join("sweep/summary.csv")).unwrap();
    let keys: Vec<(f64, u64)> = rows.iter().map(|r| (r.value, r.seed)).collect();
    assert_eq!(keys, vec![(1e5, 1), (1e5, 2), (2e5, 1), (2e5, 2)]);
    assert!(rows.iter().all(|r| r.axis == "lambda" && r.slots == 30));
    assert!(dir.path().join("sweep/traces/trace_lambda200000_optimal_seed2.csv").exists());
}

#[test]
fn bad_inputs_exit_with_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "K = 0\n").unwrap();
    let out = mec(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = mec(&["run", "--policy", "greedy"], dir.path());
    assert!(!out.status.success());

    fs::write(dir.path().join("plan.toml"), "axis = \"V\"\nvalues = [-1.0]\nout = \"o\"\n")
        .unwrap();
    let out = mec(&["sweep", "plan.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quick_verify_prints_one_line_per_check() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("net.toml"), small_config()).unwrap();
    let out = mec(&["verify", "--quick", "--config", "net.toml"], dir.path());
    assert!(out.status.code().unwrap() <= 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let verdicts = stdout.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]"));
    assert_eq!(verdicts.count(), 6, "{stdout}");
}

fn small_config() -> String {
    mec_core::ConfigFile { horizon_slots: 30, ..Default::default() }.to_toml()
}

#[test]
fn shipped_plans_load() {
    let plans = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans");
    let reference = mec_core::ConfigFile::load(plans.join("reference.toml")).unwrap();
    assert_eq!(reference, mec_core::ConfigFile::default());
    for name in ["v_sweep.toml", "lambda_sweep.toml", "queue_trace.toml"] {
        let plan = mec_cli::ExperimentPlan::load(&plans.join(name)).unwrap();
        assert_eq!(plan.base, reference, "{name}");
    }
}
