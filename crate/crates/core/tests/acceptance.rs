//! Acceptance suite at desk scale. Prints one line per criterion and exits
//! nonzero if any fails. Tolerances are written out here rather than taken
//! from the library so the two cannot drift together.

mod common;

use std::path::Path;
use std::time::Instant;

use cylns_core::experiments::{manufactured_slope, run_experiment, ExperimentConfig, ExperimentReport, Which};
use cylns_core::io::write_report;
use cylns_core::Scheme;

struct Line {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn value(r: &ExperimentReport, name: &str) -> f64 {
    r.check(name).map(|c| c.value).unwrap_or(f64::NAN)
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn run(which: Which) -> ExperimentReport {
    let cfg = ExperimentConfig::desk(which, "unused");
    let t = Instant::now();
    let r = run_experiment(&cfg).unwrap_or_else(|e| panic!("{} failed to run: {e}", which.name()));
    eprintln!("  {} ran in {:.1?}", which.name(), t.elapsed());
    r
}

fn worst_matching(reports: &[&ExperimentReport], suffix: &str) -> f64 {
    reports
        .iter()
        .flat_map(|r| r.checks.iter())
        .filter(|c| c.name.ends_with(suffix))
        .map(|c| if c.value.is_nan() { f64::INFINITY } else { c.value })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Runs `which` inside a pool of `threads` threads and writes the report.
fn run_in_pool(cfg: &ExperimentConfig, threads: usize, dir: &Path) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let r = run_experiment(cfg).unwrap();
        write_report(&r, dir).unwrap();
    });
}

fn dirs_identical(a: &Path, b: &Path) -> (bool, usize) {
    let mut names: Vec<_> = walk(a).into_iter().map(|p| p.strip_prefix(a).unwrap().to_path_buf()).collect();
    names.sort();
    let mut other: Vec<_> = walk(b).into_iter().map(|p| p.strip_prefix(b).unwrap().to_path_buf()).collect();
    other.sort();
    if names != other {
        return (false, names.len());
    }
    let same = names
        .iter()
        .all(|n| std::fs::read(a.join(n)).unwrap() == std::fs::read(b.join(n)).unwrap());
    (same, names.len())
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn main() {
    let eps = run(Which::EpsScaling);
    let exp = run(Which::Expansion);
    let odd = run(Which::Odevity);
    let inv = run(Which::Invariants);
    let mut lines = Vec::new();

    let (s, r2) = (value(&eps, "closeness/slope"), value(&eps, "closeness/r2"));
    lines.push(Line {
        id: 1,
        title: "eps-closeness of full and axisymmetric solutions",
        pass: within(s, 0.85, 1.15) && r2 >= 0.995,
        detail: format!("slope {s:.4} in [0.85, 1.15], r2 {r2:.6} >= 0.995"),
    });

    let (s, r2) = (value(&eps, "mean_closeness/slope"), value(&eps, "mean_closeness/r2"));
    lines.push(Line {
        id: 2,
        title: "theta-average closeness",
        pass: within(s, 1.7, 2.3) && r2 >= 0.99,
        detail: format!("slope {s:.4} in [1.7, 2.3], r2 {r2:.6} >= 0.99"),
    });

    let s: Vec<f64> = (0..3).map(|n| value(&exp, &format!("remainder_n{n}/slope"))).collect();
    lines.push(Line {
        id: 3,
        title: "expansion remainders",
        pass: within(s[0], 0.85, 1.15) && within(s[1], 1.8, 2.2) && within(s[2], 2.6, 3.4),
        detail: format!("slopes N=0 {:.4}, N=1 {:.4}, N=2 {:.4}", s[0], s[1], s[2]),
    });

    let v = value(&exp, "profile_vanishing");
    lines.push(Line {
        id: 4,
        title: "mode-0 meridian part of the first-order profile vanishes",
        pass: v <= 1e-12,
        detail: format!("sup ratio {v:.3e} <= 1e-12"),
    });

    let (p, w) = (value(&odd, "parity_violation"), value(&odd, "swirl_mean_share"));
    lines.push(Line {
        id: 5,
        title: "odevity persistence",
        pass: p <= 1e-12 && w <= 1e-14,
        detail: format!("max parity violation {p:.3e} <= 1e-12, mean swirl share {w:.3e} <= 1e-14"),
    });

    let (leak, m) = (value(&inv, "axisymmetry/leak"), value(&inv, "axisymmetry/match"));
    lines.push(Line {
        id: 6,
        title: "axisymmetry persistence",
        pass: leak <= 1e-14 && m <= 1e-12,
        detail: format!("k>=1 energy share {leak:.3e} <= 1e-14, mismatch {m:.3e} <= 1e-12"),
    });

    let all = [&eps, &exp, &odd, &inv];
    let e = worst_matching(&all, "/energy_defect");
    let om = value(&inv, "omega_over_r/max_increase");
    lines.push(Line {
        id: 7,
        title: "energy inequality and omega/r monotonicity",
        pass: e <= 1e-6 && om <= 1e-8,
        detail: format!("worst energy defect {e:.3e} <= 1e-6, max omega/r increase {om:.3e} <= 1e-8"),
    });

    let fails = value(&inv, "poincare/failures");
    let avg = value(&inv, "averaging/identity");
    let idem = value(&inv, "projection/idempotence");
    let div = worst_matching(&all, "/step_divergence").max(value(&inv, "projection/divergence"));
    lines.push(Line {
        id: 8,
        title: "discrete calculus suite",
        pass: fails == 0.0 && avg <= 1e-12 && idem <= 1e-11 && div <= 1e-10,
        detail: format!(
            "poincare failures {fails} of 1000, averaging {avg:.3e}, idempotence {idem:.3e}, divergence {div:.3e}"
        ),
    });

    let (mms, e32, e64) = manufactured_slope(Scheme::Imex2).unwrap();
    let conv = common::convolution_error(11, 100);
    lines.push(Line {
        id: 9,
        title: "discretization verification",
        pass: within(mms, 1.8, 2.2) && conv <= 1e-11,
        detail: format!("MMS slope {mms:.4} (errors {e32:.3e}, {e64:.3e}), convolution vs oracle {conv:.3e} <= 1e-11"),
    });

    let t = Instant::now();
    let mut same_all = true;
    let mut files = 0;
    for which in [Which::Odevity, Which::EpsScaling] {
        let mut cfg = ExperimentConfig::desk(which, "unused");
        if which == Which::EpsScaling {
            cfg.solver.tfinal = 0.1;
        }
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_in_pool(&cfg, 1, a.path());
        run_in_pool(&cfg, 4, b.path());
        let (same, n) = dirs_identical(a.path(), b.path());
        same_all &= same && n > 0;
        files += n;
    }
    eprintln!("  reproducibility runs took {:.1?}", t.elapsed());
    lines.push(Line {
        id: 10,
        title: "reproducibility across thread counts",
        pass: same_all,
        detail: format!("{files} output files compared, 1 vs 4 threads"),
    });

    let mut ok = true;
    for l in &lines {
        println!(
            "criterion {:>2} {} {}: {}",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.title,
            l.detail
        );
        ok &= l.pass;
    }
    if !ok {
        std::process::exit(1);
    }
}
