use std::path::Path;
use std::process::Command;

use cylns_cli::{run_cli_with, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

fn config(dir: &Path, which: &str) -> std::path::PathBuf {
    let text = format!(
        "# small run\n[grid]\nnr = 24\nnz = 32\nrmax = 4\nlz = 4\nkmodes = 3\n\n\
         [solver]\ndt = 0.004\ntfinal = 0.08\nsave_every = 5\n\n\
         [experiment]\nwhich = {which}\neps_list = 0.04, 0.02, 0.01\noutput_dir = {}\n\n\
         [data]\nseed = 7\n",
        dir.join("out").display()
    );
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["cylns"];
    full.extend_from_slice(args);
    let code = run_cli_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let (code, _, err) = cli(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn check_config_accepts_and_rejects() {
    let d = tempfile::tempdir().unwrap();
    let p = config(d.path(), "odevity");
    let (code, out, _) = cli(&["check-config", "--config", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("scheme = IMEX2"), "{out}");

    let text = std::fs::read_to_string(&p).unwrap().replace("nr = 24", "nrr = 24");
    std::fs::write(&p, text).unwrap();
    let (code, _, err) = cli(&["check-config", "--config", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("nrr"), "{err}");
}

#[test]
fn odevity_experiment_passes_end_to_end() {
    let d = tempfile::tempdir().unwrap();
    let p = config(d.path(), "eps-scaling");
    let (code, out, err) = cli(&["experiment", "--which", "odevity", "--config", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
    let summary = std::fs::read_to_string(d.path().join("out/odevity/parity_summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("eps,norm,slope,r2,pass"));
    assert!(lines.next().unwrap().ends_with(",1"));
    let series = std::fs::read_to_string(d.path().join("out/odevity/odevity_eps0.04.csv")).unwrap();
    assert!(series.starts_with("time,l2,h1dot,h1axi,linf,divmax,energy_defect,parity_violation\n"));
}

#[test]
fn simulate_then_compare() {
    let d = tempfile::tempdir().unwrap();
    let p = config(d.path(), "odevity");
    let cfg = p.to_str().unwrap();
    assert_eq!(cli(&["simulate", "--config", cfg]).0, EXIT_OK);
    assert_eq!(cli(&["axisym", "--config", cfg]).0, EXIT_OK);
    assert_eq!(cli(&["hierarchy", "--config", cfg]).0, EXIT_OK);
    let a = d.path().join("out/simulate/final.snap");
    let b = d.path().join("out/axisym/final.snap");
    let (code, out, _) = cli(&["compare", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "l2,h1dot,h1axi,linf,divmax\n0e0,0e0,0e0,0e0,0e0\n");
    let (code, out, _) = cli(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(!out.lines().nth(1).unwrap().starts_with("0e0"), "{out}");
    assert!(d.path().join("out/hierarchy/order2.snap").exists());

    let (code, _, err) = cli(&["compare", a.to_str().unwrap(), "/nonexistent.snap"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("nonexistent"));
}

#[test]
fn binary_reports_failed_acceptance_with_code_two() {
    // eps of order one makes the perturbation large enough that the
    // energy defect of the full runs exceeds its tolerance
    let d = tempfile::tempdir().unwrap();
    let p = config(d.path(), "expansion");
    let text = std::fs::read_to_string(&p)
        .unwrap()
        .replace("0.04, 0.02, 0.01", "0.9, 0.5, 0.3")
        .replace("tfinal = 0.08", "tfinal = 0.02");
    std::fs::write(&p, text).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_cylns"))
        .args(["experiment", "--config", p.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_FAILED), "{}", String::from_utf8_lossy(&status.stdout));
}

#[test]
fn shipped_desk_config_is_valid() {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.cfg");
    let (code, out, err) = cli(&["check-config", "--config", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("nz = 64") && out.contains("which = eps-scaling"));
}
