use std::path::PathBuf;
use std::process::Command;
use wallgrowth::growth_sim::TrajectoryRecord;
use wallgrowth::harness::ValidationReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wallgrowth"))
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wallgrowth-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn simulate_jsonl_is_reproducible() {
    let cfg = write_config("sim.toml", "kind = \"simulate\"\nreplicas = 3\nformat = \"jsonl\"\n[params]\nn_max = 4\ntimes = [0.5, 2.0]\n");
    let c = cfg.to_str().unwrap();
    let (code, a, _) = run(&["simulate", "--config", c, "--seed", "11"]);
    assert_eq!(code, 0);
    let (_, b, _) = run(&["simulate", "--config", c, "--seed", "11"]);
    let (_, other, _) = run(&["simulate", "--config", c, "--seed", "12"]);
    assert_eq!(a, b);
    assert_ne!(a, other);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 6);
    let rec: TrajectoryRecord = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(rec.t, 2.0);
    assert_eq!(rec.levels.len(), 4);
}

#[test]
fn exact_outputs() {
    let cfg = write_config(
        "cov.toml",
        "kind = \"covariance\"\n[params]\ntuples = [[\"3\", \"1/2\", \"2\", \"3/4\"], [\"1/3\", \"2/3\", \"5/4\", \"2/3\"]]\nks = [[1, 1]]\n",
    );
    let (code, out, _) = run(&["covariance", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "k_i,k_j,eta_i,tau_i,eta_j,tau_j,branch,value,value_float");
    // τ₁²η₂² + ½τ₁η₁η₂² = 1 + 3
    assert!(rows[1].starts_with("1,1,3,1/2,2,3/4,spacelike,4,"));
    assert!(rows[2].contains(",timelike,"));

    let cfg = write_config("coeffs.toml", "kind = \"coeffs\"\n[params]\nk_max = 2\ntau2 = \"5/3\"\ntau1 = \"1/2\"\neta2 = \"7/4\"\n");
    let (_, out, _) = run(&["coeffs", "--config", cfg.to_str().unwrap()]);
    // c_{2,1} = 4η₂(τ₂ − τ₁) = 7·7/6
    assert!(out.lines().any(|l| l.starts_with("2,1,49/6,")));
    assert!(out.lines().any(|l| l.starts_with("2,2,1,")));
}

#[test]
fn kernel_and_limitshape_csv() {
    let cfg = write_config("k.toml", "kind = \"kernel\"\n[params]\npoints = [[1, \"-\", 0.0, 0], [1, \"-\", 0.0, 1]]\n");
    let (code, out, _) = run(&["kernel", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let diag: Vec<f64> = out
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("0,0,") || l.starts_with("1,1,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!((diag[0] - 1.0).abs() < 1e-9 && diag[1].abs() < 1e-9);

    let cfg = write_config("ls.toml", "kind = \"limitshape\"\n[params]\neta = 1.0\ntau = [0.5, 1.0]\nsteps = 10\n");
    let (_, out, _) = run(&["limitshape", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.lines().next().unwrap(), "nu,eta,tau,re_z0,im_z0,h");
    assert_eq!(out.lines().count(), 21);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let cfg = write_config("mismatch.toml", "kind = \"kernel\"\n");
    let (code, _, err) = run(&["corr", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("does not match"));
    let cfg = write_config("zero.toml", "kind = \"simulate\"\nreplicas = 0\n");
    let (code, _, _) = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["nonsense"]);
    assert_ne!(code, 0);
}

#[test]
fn validate_writes_report_and_sets_exit_code() {
    let out = std::env::temp_dir().join(format!("wallgrowth-report-{}.json", std::process::id()));
    let cfg = write_config("v.toml", "kind = \"validate\"\n");
    let (code, _, _) = run(&["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]);
    let report = ValidationReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.criteria.len(), 11);
    assert_eq!(report.master_seed, 5);
    assert_eq!(code == 0, report.passed);
    assert!(report.criteria.iter().all(|c| c.rows.iter().all(|r| !r.tolerance.is_empty())));
}
