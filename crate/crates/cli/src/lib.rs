//! `cylns` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 an experiment
//! ran but failed its acceptance checks.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cylns_core::data::{build_initial, initial_profiles};
use cylns_core::diagnostics::compare_fields;
use cylns_core::io::{format_config, write_norm_report_csv, write_series_csv};
use cylns_core::{
    load_config, read_snapshot, run_axisym, run_experiment, run_full, run_hierarchy, theta_average, write_report,
    write_snapshot, DiagnosticsSeries, ExperimentConfig, Which,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

/// Orders carried by the `hierarchy` subcommand.
const HIERARCHY_ORDER: usize = 2;

#[derive(Parser, Debug)]
#[command(name = "cylns", version, about = "Almost-axisymmetric Navier-Stokes solver and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full solver from the default data at the first eps of the list.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Axisymmetric solver from the theta-average of the same data.
    Axisym {
        #[arg(long)]
        config: PathBuf,
    },
    /// Profile hierarchy up to second order.
    Hierarchy {
        #[arg(long)]
        config: PathBuf,
    },
    /// One of the acceptance experiments.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `which` from the config file.
        #[arg(long, value_parser = ["eps-scaling", "expansion", "odevity", "invariants"])]
        which: Option<String>,
    },
    /// Norms of the difference of two snapshots, as CSV.
    Compare { a: PathBuf, b: PathBuf },
    /// Parses and validates a config file, then prints it normalized.
    CheckConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    load_config(path).with_context(|| format!("loading {}", path.display()))
}

fn out_dir(cfg: &ExperimentConfig, sub: &str) -> Result<PathBuf> {
    let dir = cfg.output_dir.join(sub);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_series(path: &Path, series: &DiagnosticsSeries) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_series_csv(f, series)?;
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, axisym: bool, out: &mut dyn Write) -> Result<i32> {
    let s = &cfg.solver;
    let u0 = build_initial(&cfg.data_family, &s.grid, s.kmax, cfg.eps_list[0])?;
    let (name, (state, series)) = if axisym {
        ("axisym", run_axisym(&theta_average(&u0), s)?)
    } else {
        ("simulate", run_full(&u0, s)?)
    };
    let dir = out_dir(cfg, name)?;
    write_series(&dir.join("series.csv"), &series)?;
    write_snapshot(&state.u, state.time, dir.join("final.snap"))?;
    writeln!(out, "{name}: t = {}, {} saves written to {}", state.time, series.len(), dir.display())?;
    Ok(EXIT_OK)
}

fn hierarchy(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32> {
    let s = &cfg.solver;
    let init = initial_profiles(&cfg.data_family, &s.grid, s.kmax)?;
    let (h, series) = run_hierarchy(&init, HIERARCHY_ORDER, s)?;
    let dir = out_dir(cfg, "hierarchy")?;
    write_series(&dir.join("order0.csv"), &series)?;
    let t = series.times.last().copied().unwrap_or(0.0);
    for (n, u) in h.orders().iter().enumerate() {
        write_snapshot(u, t, dir.join(format!("order{n}.snap")))?;
    }
    writeln!(out, "hierarchy: {} orders at t = {t} written to {}", h.orders().len(), dir.display())?;
    Ok(EXIT_OK)
}

fn experiment(mut cfg: ExperimentConfig, which: Option<String>, out: &mut dyn Write) -> Result<i32> {
    if let Some(w) = which {
        cfg.which = w.parse::<Which>()?;
        cfg.validate()?;
    }
    let report = run_experiment(&cfg)?;
    let files = write_report(&report, &cfg.output_dir)?;
    for c in &report.checks {
        writeln!(out, "{:40} {:>12.4e}  {}", c.name, c.value, if c.pass { "pass" } else { "FAIL" })?;
    }
    writeln!(
        out,
        "{}: {} ({} files under {})",
        cfg.which.name(),
        if report.passed() { "PASS" } else { "FAIL" },
        files.len(),
        cfg.output_dir.join(cfg.which.name()).display()
    )?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
}

fn compare(a: &Path, b: &Path, out: &mut dyn Write) -> Result<i32> {
    let sa = read_snapshot(a).with_context(|| format!("reading {}", a.display()))?;
    let sb = read_snapshot(b).with_context(|| format!("reading {}", b.display()))?;
    let report = compare_fields(&sa.field, &sb.field)?;
    write_norm_report_csv(out, &report)?;
    Ok(EXIT_OK)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Simulate { config } => simulate(&load(&config)?, false, out),
        Command::Axisym { config } => simulate(&load(&config)?, true, out),
        Command::Hierarchy { config } => hierarchy(&load(&config)?, out),
        Command::Experiment { config, which } => experiment(load(&config)?, which, out),
        Command::Compare { a, b } => compare(&a, &b, out),
        Command::CheckConfig { config } => {
            write!(out, "{}", format_config(&load(&config)?))?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (program name first), writing normal output to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
