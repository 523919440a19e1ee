//! Run configuration files, the binary snapshot format and CSV writers.

use std::collections::BTreeMap;
use std::fs;
use std::hash::Hasher;
use std::io::Write;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;

use crate::data::DataFamily;
use crate::diagnostics::DiagnosticsSeries;
use crate::error::{Error, Result};
use crate::experiments::{Check, ExperimentConfig, ExperimentReport, SummaryRow, Which};
use crate::grid::{make_grid, MeridianScalar};
use crate::modal::{num_slots, ModalScalarField, ModalVectorField, NormReport};
use crate::solver::{Scheme, SolverConfig};

const SECTIONS: [(&str, &[&str]); 4] = [
    ("grid", &["nr", "nz", "rmax", "lz", "kmodes"]),
    ("solver", &["dt", "tfinal", "save_every", "scheme"]),
    ("experiment", &["which", "eps_list", "output_dir"]),
    ("data", &["seed"]),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS
        .iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
}

struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut section: Option<String> = None;
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let lineno = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {lineno}: malformed section header '{line}'")))?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::Config(format!("line {lineno}: unknown section '[{name}]'")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            let value = value.trim();
            let home = section_of(key).ok_or_else(|| Error::Config(format!("line {lineno}: unknown key '{key}'")))?;
            match section.as_deref() {
                Some(s) if s == home => {}
                Some(s) => {
                    return Err(Error::Config(format!(
                        "line {lineno}: key '{key}' belongs in [{home}], found in [{s}]"
                    )))
                }
                None => {
                    return Err(Error::Config(format!(
                        "line {lineno}: key '{key}' appears before any section header"
                    )))
                }
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {lineno}: duplicate key '{key}'")));
            }
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{v}'")))
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.values.contains_key(key) {
            self.parse_as(key).map(Some)
        } else {
            Ok(None)
        }
    }
}

fn parse_eps_list(v: &str) -> Result<Vec<f64>> {
    let eps = v
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("key 'eps_list': cannot parse '{}'", s.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!("key 'eps_list': '{v}' is not strictly decreasing")));
    }
    Ok(eps)
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw = RawConfig::parse(text)?;
    let grid = make_grid(
        raw.parse_as("nr")?,
        raw.parse_as("nz")?,
        raw.parse_as("rmax")?,
        raw.parse_as("lz")?,
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let mut solver = SolverConfig::new(grid, raw.parse_as("kmodes")?, raw.parse_as("dt")?, raw.parse_as("tfinal")?)
        .map_err(|e| Error::Config(e.to_string()))?;
    if let Some(s) = raw.optional::<usize>("save_every")? {
        solver.save_every = s;
    }
    if raw.values.contains_key("scheme") {
        solver.scheme = raw.raw("scheme")?.parse::<Scheme>()?;
    }
    solver.validate().map_err(|e| Error::Config(e.to_string()))?;
    let cfg = ExperimentConfig {
        which: raw.raw("which")?.parse::<Which>()?,
        eps_list: parse_eps_list(raw.raw("eps_list")?)?,
        solver,
        data_family: DataFamily::default(),
        output_dir: PathBuf::from(raw.raw("output_dir")?),
        seed: raw.parse_as("seed")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Renders a configuration in the file grammar.
pub fn format_config(cfg: &ExperimentConfig) -> String {
    let s = &cfg.solver;
    let eps: Vec<String> = cfg.eps_list.iter().map(|e| e.to_string()).collect();
    format!(
        "[grid]\nnr = {}\nnz = {}\nrmax = {}\nlz = {}\nkmodes = {}\n\n\
         [solver]\ndt = {}\ntfinal = {}\nsave_every = {}\nscheme = {}\n\n\
         [experiment]\nwhich = {}\neps_list = {}\noutput_dir = {}\n\n\
         [data]\nseed = {}\n",
        s.grid.nr(),
        s.grid.nz(),
        s.grid.rmax(),
        s.grid.lz(),
        s.kmax,
        s.dt,
        s.tfinal,
        s.save_every,
        s.scheme.name(),
        cfg.which.name(),
        eps.join(", "),
        cfg.output_dir.display(),
        cfg.seed
    )
}

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"MNS1";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 4 + 3 * 8;

/// Decoded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub field: ModalVectorField,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

/// Little-endian snapshot bytes: header, `(r, θ, z)` × slots in
/// `cos 0, cos 1, sin 1, ...` order, then the FNV-1a 64 checksum of
/// everything before it.
pub fn encode_snapshot(u: &ModalVectorField, time: f64) -> Vec<u8> {
    let g = u.grid();
    let slots = num_slots(u.kmax());
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * slots * g.len() * 8 + 8);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    for v in [SNAPSHOT_VERSION, g.nr() as u32, g.nz() as u32, u.kmax() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [g.rmax(), g.lz(), time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in u.components() {
        for s in c.slots() {
            for v in s.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < 4 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!(
            "dimension mismatch: {} bytes is shorter than the header",
            bytes.len()
        )));
    }
    let version = u32_at(bytes, 4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let (nr, nz, kmax) = (u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize, u32_at(bytes, 16) as usize);
    let (rmax, lz, time) = (f64_at(bytes, 20), f64_at(bytes, 28), f64_at(bytes, 36));
    let slots = num_slots(kmax);
    let expected = (nr as u128) * (nz as u128) * 3 * (slots as u128) * 8 + HEADER_LEN as u128 + 8;
    if expected != bytes.len() as u128 {
        return Err(Error::Snapshot(format!(
            "dimension mismatch: Nr = {nr}, Nz = {nz}, K = {kmax} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let body = bytes.len() - 8;
    let stored = u64::from_le_bytes(bytes[body..].try_into().expect("8 bytes"));
    let actual = fnv1a(&bytes[..body]);
    if stored != actual {
        return Err(Error::Snapshot(format!(
            "checksum mismatch: stored {stored:016x}, computed {actual:016x}"
        )));
    }
    let grid = make_grid(nr, nz, rmax, lz).map_err(|e| Error::Snapshot(e.to_string()))?;
    let n = grid.len();
    let mut at = HEADER_LEN;
    let mut comps = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut ss = Vec::with_capacity(slots);
        for _ in 0..slots {
            let vals: Vec<f64> = (0..n).map(|i| f64_at(bytes, at + 8 * i)).collect();
            at += 8 * n;
            ss.push(MeridianScalar::from_values(&grid, vals)?);
        }
        comps.push(ModalScalarField::from_slots(&grid, kmax, ss)?);
    }
    let mut it = comps.into_iter();
    let field = ModalVectorField {
        r: it.next().expect("r"),
        theta: it.next().expect("theta"),
        z: it.next().expect("z"),
    };
    Ok(Snapshot { time, field })
}

pub fn write_snapshot(u: &ModalVectorField, time: f64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_snapshot(u, time)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}

/// Shortest round-trip scientific notation, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_pass(p: bool) -> String {
    if p { "1" } else { "0" }.to_string()
}

pub const SERIES_COLUMNS: [&str; 8] = [
    "time",
    "l2",
    "h1dot",
    "h1axi",
    "linf",
    "divmax",
    "energy_defect",
    "parity_violation",
];
pub const SUMMARY_COLUMNS: [&str; 5] = ["eps", "norm", "slope", "r2", "pass"];
pub const CHECK_COLUMNS: [&str; 5] = ["name", "value", "lo", "hi", "pass"];
pub const NORM_COLUMNS: [&str; 5] = ["l2", "h1dot", "h1axi", "linf", "divmax"];

pub fn write_series_csv<W: Write>(out: W, series: &DiagnosticsSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_COLUMNS)?;
    let defects = series.energy_defects();
    for i in 0..series.len() {
        let r = &series.reports[i];
        w.write_record([
            fmt_f64(series.times[i]),
            fmt_f64(r.l2),
            fmt_f64(r.h1dot),
            fmt_f64(r.h1axi),
            fmt_f64(r.linf),
            fmt_f64(r.divmax),
            fmt_f64(defects[i]),
            fmt_f64(series.parity_violation[i]),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([fmt_opt(r.eps), fmt_f64(r.norm), fmt_opt(r.slope), fmt_opt(r.r2), fmt_pass(r.pass)])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_checks_csv<W: Write>(out: W, checks: &[Check]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CHECK_COLUMNS)?;
    for c in checks {
        w.write_record([c.name.clone(), fmt_f64(c.value), fmt_opt(c.lo), fmt_opt(c.hi), fmt_pass(c.pass)])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// One-row CSV of a norm report.
pub fn write_norm_report_csv<W: Write>(out: W, r: &NormReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(NORM_COLUMNS)?;
    w.write_record([r.l2, r.h1dot, r.h1axi, r.linf, r.divmax].map(fmt_f64))?;
    w.flush().map_err(|e| Error::io("<csv>", e))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes a report under `dir/<experiment>/`: `checks.csv`, one
/// `<table>_summary.csv` per summary, and for each run its series CSV
/// (when recorded) and final snapshot. Returns the files in write order.
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref().join(report.which.name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    let p = dir.join("checks.csv");
    write_checks_csv(create(&p)?, &report.checks)?;
    files.push(p);
    for t in &report.summaries {
        let p = dir.join(format!("{}_summary.csv", t.name));
        write_summary_csv(create(&p)?, &t.rows)?;
        files.push(p);
    }
    for run in &report.runs {
        if !run.series.is_empty() {
            let p = dir.join(format!("{}.csv", run.name));
            write_series_csv(create(&p)?, &run.series)?;
            files.push(p);
        }
        let p = dir.join(format!("{}.snap", run.name));
        write_snapshot(&run.state.u, run.state.time, &p)?;
        files.push(p);
    }
    Ok(files)
}
