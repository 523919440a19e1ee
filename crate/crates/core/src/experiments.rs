//! Experiment drivers: ε-scaling against the axisymmetric solver, the
//! profile expansion remainders, parity persistence and the invariant
//! suite. Each returns an [`ExperimentReport`] with pass/fail checks; the
//! writers in [`crate::io`] turn it into files.

use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::data::{build_initial, initial_profiles, DataFamily};
use crate::diagnostics::{energy_budget, omega_over_r_monitor, scaling_slope, DiagnosticsSeries, ScalingReport};
use crate::elliptic::project_divfree;
use crate::error::{Error, Result};
use crate::grid::{make_grid, MeridianGrid, MeridianScalar};
use crate::modal::{
    meridian_dot, modal_curl, modal_divergence, norms, theta_average, ModalScalarField, ModalVectorField,
    ParityClass,
};
use crate::nonlinear::convolve_modes;
use crate::random::FieldRng;
use crate::solver::{assemble_expansion, hierarchy_orders, BodyForce, FlowState, Scheme, SolverConfig, Stepper};

pub const EPS_SLOPE_BAND: (f64, f64) = (0.85, 1.15);
pub const EPS_R2_MIN: f64 = 0.995;
pub const MEAN_SLOPE_BAND: (f64, f64) = (1.7, 2.3);
pub const MEAN_R2_MIN: f64 = 0.99;
pub const EXPANSION_SLOPE_BANDS: [(f64, f64); 3] = [(0.85, 1.15), (1.8, 2.2), (2.6, 3.4)];
pub const PROFILE_VANISHING_TOL: f64 = 1e-12;
pub const PARITY_TOL: f64 = 1e-12;
pub const SWIRL_MEAN_TOL: f64 = 1e-14;
pub const AXISYM_LEAK_TOL: f64 = 1e-14;
pub const AXISYM_MATCH_TOL: f64 = 1e-12;
pub const ENERGY_DEFECT_TOL: f64 = 1e-6;
pub const DIVERGENCE_TOL: f64 = 1e-10;
pub const AVERAGING_TOL: f64 = 1e-12;
pub const AVERAGING_REMAINDER_TOL: f64 = 1e-14;
pub const IDEMPOTENCE_TOL: f64 = 1e-11;
pub const BIOT_SAVART_BAND: (f64, f64) = (0.5, 2.0);
pub const MMS_SLOPE_BAND: (f64, f64) = (1.8, 2.2);

pub const POINCARE_SAMPLES: usize = 1000;
pub const AVERAGING_SAMPLES: usize = 100;
pub const PROJECTION_SAMPLES: usize = 100;
pub const BIOT_SAVART_SAMPLES: usize = 20;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    EpsScaling,
    Expansion,
    Odevity,
    Invariants,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::EpsScaling => "eps-scaling",
            Which::Expansion => "expansion",
            Which::Odevity => "odevity",
            Which::Invariants => "invariants",
        }
    }

    /// Whether the experiment regresses over ε.
    pub fn is_scaling(self) -> bool {
        matches!(self, Which::EpsScaling | Which::Expansion)
    }
}

impl std::str::FromStr for Which {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "eps-scaling" | "epsscaling" => Ok(Which::EpsScaling),
            "expansion" => Ok(Which::Expansion),
            "odevity" => Ok(Which::Odevity),
            "invariants" => Ok(Which::Invariants),
            _ => Err(Error::Config(format!(
                "unknown experiment '{}' (expected eps-scaling, expansion, odevity or invariants)",
                s.trim()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub which: Which,
    pub eps_list: Vec<f64>,
    pub solver: SolverConfig,
    pub data_family: DataFamily,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// 48×64 meridian grid on `[0, 4] × [0, 4)`.
pub fn desk_grid() -> MeridianGrid {
    make_grid(48, 64, 4.0, 4.0).expect("valid desk grid")
}

/// Desk-scale solver: `K = 6`, `dt = 2e-3`, `T = 0.5`, IMEX2.
pub fn desk_solver() -> SolverConfig {
    SolverConfig::new(desk_grid(), 6, 2e-3, 0.5).expect("valid desk solver")
}

impl ExperimentConfig {
    pub fn desk(which: Which, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            which,
            eps_list: vec![0.04, 0.02, 0.01],
            solver: desk_solver(),
            data_family: DataFamily::default(),
            output_dir: output_dir.into(),
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.eps_list.is_empty() {
            return Err(Error::Config("eps_list is empty".into()));
        }
        if self.eps_list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::Config("eps_list entries must be finite and nonnegative".into()));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps_list is not strictly decreasing".into()));
        }
        if self.which.is_scaling() && self.eps_list.len() < 3 {
            return Err(Error::Config(format!(
                "{} needs at least 3 eps values, got {}",
                self.which.name(),
                self.eps_list.len()
            )));
        }
        Ok(())
    }
}

/// A measured quantity against its acceptance window.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let pass = value.is_finite() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Self {
            name: name.into(),
            value,
            lo,
            hi,
            pass,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self::new(name, value, None, Some(hi))
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Self::new(name, value, Some(lo), None)
    }

    pub fn within(name: impl Into<String>, value: f64, band: (f64, f64)) -> Self {
        Self::new(name, value, Some(band.0), Some(band.1))
    }

    /// A check that could not be measured.
    pub fn failed(name: impl Into<String>) -> Self {
        Self::new(name, f64::NAN, None, None)
    }
}

/// One row of a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub eps: Option<f64>,
    pub norm: f64,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub name: String,
    pub rows: Vec<SummaryRow>,
}

/// Recorded diagnostics and final state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub name: String,
    pub series: DiagnosticsSeries,
    pub state: FlowState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub which: Which,
    pub checks: Vec<Check>,
    pub summaries: Vec<SummaryTable>,
    pub scaling: Vec<(String, ScalingReport)>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentReport {
    fn new(which: Which) -> Self {
        Self {
            which,
            checks: Vec::new(),
            summaries: Vec::new(),
            scaling: Vec::new(),
            runs: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn run_checks(&mut self, run: &RunRecord, energy: bool) {
        if energy {
            let defect = energy_budget(&run.series).unwrap_or(f64::NAN);
            self.checks
                .push(Check::at_most(format!("{}/energy_defect", run.name), defect, ENERGY_DEFECT_TOL));
        }
        self.checks.push(Check::at_most(
            format!("{}/step_divergence", run.name),
            run.series.max_step_divergence,
            DIVERGENCE_TOL,
        ));
    }

    /// Regresses `points` and adds slope (and optionally r²) checks and a
    /// summary table named `name`.
    fn add_fit(&mut self, name: &str, points: &[(f64, f64)], band: (f64, f64), r2_min: Option<f64>) {
        let positive: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 > 0.0).collect();
        let fit = scaling_slope(&positive);
        let (slope_check, r2_check) = match &fit {
            Ok(f) => (
                Check::within(format!("{name}/slope"), f.slope, band),
                r2_min.map(|m| Check::at_least(format!("{name}/r2"), f.r2, m)),
            ),
            Err(_) => (
                Check::failed(format!("{name}/slope")),
                r2_min.map(|_| Check::failed(format!("{name}/r2"))),
            ),
        };
        let pass = slope_check.pass && r2_check.as_ref().is_none_or(|c| c.pass);
        let (slope, r2) = match &fit {
            Ok(f) => (Some(f.slope), Some(f.r2)),
            Err(_) => (None, None),
        };
        self.summaries.push(SummaryTable {
            name: name.to_string(),
            rows: points
                .iter()
                .map(|&(eps, norm)| SummaryRow {
                    eps: Some(eps),
                    norm,
                    slope,
                    r2,
                    pass,
                })
                .collect(),
        });
        self.checks.push(slope_check);
        self.checks.extend(r2_check);
        if let Ok(f) = fit {
            self.scaling.push((name.to_string(), f));
        }
    }
}

fn slot_l2(f: &MeridianScalar) -> f64 {
    (2.0 * PI * meridian_dot(f, f)).sqrt()
}

fn eps_label(eps: f64) -> String {
    format!("eps{eps}")
}

/// Runs `steppers` in lockstep to `T`, calling `observe` after the initial
/// state and after every saved step.
fn lockstep(steppers: &mut [Stepper], mut observe: impl FnMut(&[Stepper]) -> Result<()>) -> Result<()> {
    observe(steppers)?;
    while !steppers.iter().all(Stepper::is_done) {
        steppers.par_iter_mut().try_for_each(|s| s.step())?;
        if steppers.iter().any(Stepper::just_saved) {
            observe(steppers)?;
        }
    }
    Ok(())
}

fn record(name: String, stepper: Stepper) -> RunRecord {
    let state = stepper.state();
    RunRecord {
        name,
        series: stepper.into_series(),
        state,
    }
}

/// Outcome of one ε of the scaling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsPair {
    pub eps: f64,
    /// `sup_t ‖u − ū‖`.
    pub sup_diff: f64,
    /// `sup_t ‖𝓜u − ū‖`.
    pub sup_mean_diff: f64,
    pub full: RunRecord,
    pub axisym: RunRecord,
}

/// Full and axisymmetric runs from `u0` and `𝓜u0`, compared at every save.
pub fn eps_pair(family: &DataFamily, solver: &SolverConfig, eps: f64) -> Result<EpsPair> {
    let u0 = build_initial(family, &solver.grid, solver.kmax, eps)?;
    let ubar0 = theta_average(&u0);
    let mut steppers = [Stepper::full(&u0, solver)?, Stepper::axisym(&ubar0, solver)?];
    let (mut sup_diff, mut sup_mean_diff) = (0.0_f64, 0.0_f64);
    lockstep(&mut steppers, |s| {
        let u = s[0].field(0);
        let ubar = s[1].field(0);
        sup_diff = sup_diff.max(u.sub(&ubar).l2());
        sup_mean_diff = sup_mean_diff.max(theta_average(&u).sub(&ubar).l2());
        Ok(())
    })?;
    let [full, axisym] = steppers;
    Ok(EpsPair {
        eps,
        sup_diff,
        sup_mean_diff,
        full: record(format!("full_{}", eps_label(eps)), full),
        axisym: record(format!("axisym_{}", eps_label(eps)), axisym),
    })
}

/// `u` against the axisymmetric solution over the ε sweep.
pub fn experiment_eps_scaling(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pairs: Vec<EpsPair> = cfg
        .eps_list
        .par_iter()
        .map(|&eps| eps_pair(&cfg.data_family, &cfg.solver, eps))
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(Which::EpsScaling);
    let diff: Vec<_> = pairs.iter().map(|p| (p.eps, p.sup_diff)).collect();
    let mean: Vec<_> = pairs.iter().map(|p| (p.eps, p.sup_mean_diff)).collect();
    report.add_fit("closeness", &diff, EPS_SLOPE_BAND, Some(EPS_R2_MIN));
    report.add_fit("mean_closeness", &mean, MEAN_SLOPE_BAND, Some(MEAN_R2_MIN));
    for p in pairs {
        report.run_checks(&p.full, true);
        report.run_checks(&p.axisym, true);
        report.runs.push(p.full);
        report.runs.push(p.axisym);
    }
    Ok(report)
}

/// Full runs against the assembled expansion `Σ_{n≤N} εⁿ u_(n)`.
pub fn experiment_expansion(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n_max = EXPANSION_SLOPE_BANDS.len() - 1;
    let solver = &cfg.solver;
    let init = initial_profiles(&cfg.data_family, &solver.grid, solver.kmax)?;
    let mut steppers = vec![Stepper::hierarchy(hierarchy_orders(&init, n_max)?, solver)?];
    for &eps in &cfg.eps_list {
        let mut u0 = init.base.clone();
        u0.axpy(eps, &init.first);
        steppers.push(Stepper::full(&u0, solver)?);
    }
    let m = cfg.eps_list.len();
    let mut sup_rem = vec![[0.0_f64; 3]; m];
    let (mut sup_meridian0, mut sup_first) = (0.0_f64, 0.0_f64);
    lockstep(&mut steppers, |s| {
        let h = s[0].hierarchy_profiles();
        let first = &h.orders()[1];
        sup_meridian0 = sup_meridian0.max(slot_l2(first.r.cos(0)) + slot_l2(first.z.cos(0)));
        sup_first = sup_first.max(first.l2());
        for (i, eps) in cfg.eps_list.iter().enumerate() {
            let u = s[i + 1].field(0);
            for (n, slot) in sup_rem[i].iter_mut().enumerate() {
                let r = u.sub(&assemble_expansion(&h, *eps, n)?).l2();
                *slot = slot.max(r);
            }
        }
        Ok(())
    })?;

    let mut report = ExperimentReport::new(Which::Expansion);
    for (n, band) in EXPANSION_SLOPE_BANDS.iter().enumerate() {
        let pts: Vec<_> = cfg.eps_list.iter().zip(&sup_rem).map(|(&e, r)| (e, r[n])).collect();
        report.add_fit(&format!("remainder_n{n}"), &pts, *band, None);
    }
    let share = if sup_first > 0.0 { sup_meridian0 / sup_first } else { 0.0 };
    report
        .checks
        .push(Check::at_most("profile_vanishing", share, PROFILE_VANISHING_TOL));
    let mut it = steppers.into_iter();
    let hier = it.next().expect("hierarchy stepper");
    for n in 0..hier.num_orders() {
        let (series, p) = if n == 0 {
            (hier.series().clone(), hier.state().p)
        } else {
            (
                DiagnosticsSeries::new(ParityClass::General),
                ModalScalarField::zeros(&solver.grid, solver.kmax),
            )
        };
        report.runs.push(RunRecord {
            name: format!("hierarchy_order{n}"),
            series,
            state: FlowState {
                time: hier.time(),
                u: hier.field(n),
                p,
            },
        });
    }
    let base_run = report.runs[0].clone();
    report.run_checks(&base_run, false);
    for (s, &eps) in it.zip(&cfg.eps_list) {
        let run = record(format!("full_{}", eps_label(eps)), s);
        report.run_checks(&run, true);
        report.runs.push(run);
    }
    Ok(report)
}

/// Maximum parity violation and mean-swirl share of a full run from `u0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityRun {
    pub max_violation: f64,
    pub max_swirl_share: f64,
    pub run: RunRecord,
}

pub fn parity_run(u0: &ModalVectorField, solver: &SolverConfig, name: &str) -> Result<ParityRun> {
    let mut s = Stepper::full(u0, solver)?.with_parity_class(ParityClass::CosMeridianSinSwirl);
    s.run()?;
    let run = record(name.to_string(), s);
    let max_swirl_share = run.series.swirl_mean_share.iter().fold(0.0_f64, |m, &v| m.max(v));
    Ok(ParityRun {
        max_violation: run.series.max_parity_violation(),
        max_swirl_share,
        run,
    })
}

/// Parity persistence for data in the cos-meridian / sin-swirl class,
/// run at the largest ε of the list.
pub fn experiment_odevity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let eps = cfg.eps_list[0];
    let family = DataFamily {
        class: ParityClass::CosMeridianSinSwirl,
        swirl: crate::data::Blob {
            amplitude: 0.0,
            ..cfg.data_family.swirl
        },
        ..cfg.data_family.clone()
    };
    let u0 = build_initial(&family, &cfg.solver.grid, cfg.solver.kmax, eps)?;
    let pr = parity_run(&u0, &cfg.solver, &format!("odevity_{}", eps_label(eps)))?;
    let mut report = ExperimentReport::new(Which::Odevity);
    let v = Check::at_most("parity_violation", pr.max_violation, PARITY_TOL);
    let w = Check::at_most("swirl_mean_share", pr.max_swirl_share, SWIRL_MEAN_TOL);
    report.summaries.push(SummaryTable {
        name: "parity".into(),
        rows: vec![SummaryRow {
            eps: Some(eps),
            norm: pr.max_violation,
            slope: None,
            r2: None,
            pass: v.pass && w.pass,
        }],
    });
    report.checks.push(v);
    report.checks.push(w);
    report.run_checks(&pr.run, true);
    report.runs.push(pr.run);
    Ok(report)
}

/// Worst margins of the Poincaré inequalities over random scalar fields:
/// `max ‖𝓜f‖/‖f‖`, `max ‖f − 𝓜f‖/‖∂_θ f‖` (both ≤ 1 expected).
pub fn poincare_ratios(rng: &mut FieldRng, grid: &MeridianGrid, kmax: usize, samples: usize) -> (f64, f64, usize) {
    let (mut mean_ratio, mut osc_ratio, mut failures) = (0.0_f64, 0.0_f64, 0);
    for _ in 0..samples {
        let f = rng.scalar(grid, kmax);
        let fbar = f.theta_average();
        let osc = f.sub(&fbar).l2();
        let dth = f.theta_derivative().l2();
        let a = fbar.l2() / f.l2();
        let b = if dth > 0.0 { osc / dth } else { 0.0 };
        if a > 1.0 || osc > 2.0 * PI * dth || osc > dth {
            failures += 1;
        }
        mean_ratio = mean_ratio.max(a);
        osc_ratio = osc_ratio.max(b);
    }
    (mean_ratio, osc_ratio, failures)
}

/// Worst relative error of `𝓜(fg) − f̄ḡ = 𝓜((f−f̄)(g−ḡ)) + ḡ𝓜(f−f̄) + f̄𝓜(g−ḡ)`
/// and the largest of the last two terms.
pub fn averaging_identity(
    rng: &mut FieldRng,
    grid: &MeridianGrid,
    kmax: usize,
    samples: usize,
) -> Result<(f64, f64)> {
    let (mut worst, mut remainder) = (0.0_f64, 0.0_f64);
    for _ in 0..samples {
        let f = rng.scalar(grid, kmax);
        let g = rng.scalar(grid, kmax);
        let (fbar, gbar) = (f.cos(0), g.cos(0));
        let mut fbar_gbar = fbar.clone();
        for (x, y) in fbar_gbar.values_mut().iter_mut().zip(gbar.values()) {
            *x *= y;
        }
        let lhs = convolve_modes(&f, &g)?.cos(0).sub(&fbar_gbar);
        let fo = f.sub(&f.theta_average());
        let go = g.sub(&g.theta_average());
        let m_fo = fo.theta_average();
        let m_go = go.theta_average();
        let mut t2 = m_fo.cos(0).clone();
        for (x, y) in t2.values_mut().iter_mut().zip(gbar.values()) {
            *x *= y;
        }
        let mut t3 = m_go.cos(0).clone();
        for (x, y) in t3.values_mut().iter_mut().zip(fbar.values()) {
            *x *= y;
        }
        let rhs = convolve_modes(&fo, &go)?.cos(0).add(&t2).add(&t3);
        let scale = lhs.max_abs().max(rhs.max_abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(lhs.sub(&rhs).max_abs() / scale);
        remainder = remainder.max(t2.max_abs().max(t3.max_abs()) / scale);
    }
    Ok((worst, remainder))
}

/// Worst `‖P(Pu) − Pu‖/‖Pu‖` and `max|D Pu|/‖Pu‖` over random fields.
pub fn projection_margins(
    rng: &mut FieldRng,
    grid: &MeridianGrid,
    kmax: usize,
    samples: usize,
) -> Result<(f64, f64)> {
    let (mut idem, mut div) = (0.0_f64, 0.0_f64);
    for _ in 0..samples {
        let p = project_divfree(&rng.vector(grid, kmax))?;
        let l2 = p.l2();
        idem = idem.max(project_divfree(&p)?.sub(&p).l2() / l2);
        div = div.max(modal_divergence(&p).max_abs() / l2);
    }
    Ok((idem, div))
}

/// Range of `‖∇u‖ / ‖curl u‖` over random divergence-free fields.
pub fn biot_savart_range(
    rng: &mut FieldRng,
    grid: &MeridianGrid,
    kmax: usize,
    samples: usize,
) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..samples {
        let u = rng.divfree(grid, kmax)?;
        let ratio = norms(&u).h1dot / modal_curl(&u).l2();
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

/// Smooth steady field used for the manufactured-solution study: a
/// stream-function meridian flow with swirl in mode 0, and a mode-1
/// field `∇ × (r h cos θ e_z)`. Returns `(u^r, u^θ, u^z)` at `(r, θ, z)`.
pub fn manufactured_velocity(r: f64, theta: f64, z: f64, lz: f64) -> [f64; 3] {
    let kz = 2.0 * PI / lz;
    let e = (-r * r).exp();
    let (cz, sz) = ((kz * z).cos(), (kz * z).sin());
    let (a, b, c) = (0.3, 0.2, 0.25);
    let ur0 = a * r * kz * e * sz;
    let uz0 = a * e * cz * (2.0 - 2.0 * r * r);
    let ut0 = b * r * e * cz;
    let h = c * e * sz;
    let ur1 = -h * theta.sin();
    let ut1 = -c * e * (1.0 - 2.0 * r * r) * sz * theta.cos();
    [ur0 + ur1, ut0 + ut1, uz0]
}

fn fd1(f: impl Fn(f64) -> [f64; 3], x: f64, d: f64) -> [f64; 3] {
    let (a, b, c, e) = (f(x - 2.0 * d), f(x - d), f(x + d), f(x + 2.0 * d));
    std::array::from_fn(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - e[i]) / (12.0 * d))
}

fn fd2(f: impl Fn(f64) -> [f64; 3], x: f64, d: f64) -> [f64; 3] {
    let (a, b, m, c, e) = (f(x - 2.0 * d), f(x - d), f(x), f(x + d), f(x + 2.0 * d));
    std::array::from_fn(|i| (-a[i] + 16.0 * b[i] - 30.0 * m[i] + 16.0 * c[i] - e[i]) / (12.0 * d * d))
}

/// `(u·∇)u − Δu` of [`manufactured_velocity`] at one point, with
/// fourth-order difference quotients of the closed form.
fn manufactured_forcing_point(r: f64, th: f64, z: f64, lz: f64) -> [f64; 3] {
    let d = 1e-3;
    let u = manufactured_velocity(r, th, z, lz);
    let ur = fd1(|x| manufactured_velocity(x, th, z, lz), r, d);
    let urr = fd2(|x| manufactured_velocity(x, th, z, lz), r, d);
    let ut = fd1(|x| manufactured_velocity(r, x, z, lz), th, d);
    let utt = fd2(|x| manufactured_velocity(r, x, z, lz), th, d);
    let uz = fd1(|x| manufactured_velocity(r, th, x, lz), z, d);
    let uzz = fd2(|x| manufactured_velocity(r, th, x, lz), z, d);
    let lap: [f64; 3] = std::array::from_fn(|i| urr[i] + ur[i] / r + utt[i] / (r * r) + uzz[i]);
    let adv: [f64; 3] = std::array::from_fn(|i| u[0] * ur[i] + u[1] / r * ut[i] + u[2] * uz[i]);
    [
        adv[0] - u[1] * u[1] / r - (lap[0] - u[0] / (r * r) - 2.0 * ut[1] / (r * r)),
        adv[1] + u[0] * u[1] / r - (lap[1] - u[1] / (r * r) + 2.0 * ut[0] / (r * r)),
        adv[2] - lap[2],
    ]
}

/// Modal coefficients of a pointwise `(r, θ, z)` vector function sampled
/// at `n_theta` angles.
fn project_modes(grid: &MeridianGrid, kmax: usize, n_theta: usize, f: impl Fn(f64, f64, f64) -> [f64; 3] + Sync) -> ModalVectorField {
    let mut out = ModalVectorField::zeros(grid, kmax);
    for m in 0..n_theta {
        let th = 2.0 * PI * m as f64 / n_theta as f64;
        let vals: Vec<[f64; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.r(idx / grid.nz()), th, grid.z(idx % grid.nz())))
            .collect();
        for (c, comp) in [&mut out.r, &mut out.theta, &mut out.z].into_iter().enumerate() {
            let sample = MeridianScalar::from_values(grid, vals.iter().map(|v| v[c]).collect()).expect("grid size");
            comp.cos_mut(0).axpy(1.0 / n_theta as f64, &sample);
            for k in 1..=kmax {
                let a = k as f64 * th;
                comp.cos_mut(k).axpy(2.0 * a.cos() / n_theta as f64, &sample);
                comp.sin_mut(k).axpy(2.0 * a.sin() / n_theta as f64, &sample);
            }
        }
    }
    out
}

struct SteadyForce(ModalVectorField);

impl BodyForce for SteadyForce {
    fn force(&self, _t: f64) -> ModalVectorField {
        self.0.clone()
    }
}

pub const MMS_KMAX: usize = 2;

/// L² error at `T` of the forced run that should stay at
/// [`manufactured_velocity`], on an `n × n` grid of `[0, 4] × [0, 4)`.
pub fn manufactured_error(n: usize, scheme: Scheme) -> Result<f64> {
    let grid = make_grid(n, n, 4.0, 4.0)?;
    let lz = grid.lz();
    let n_theta = 4 * MMS_KMAX + 4;
    let exact = project_modes(&grid, MMS_KMAX, n_theta, |r, t, z| manufactured_velocity(r, t, z, lz));
    let force = project_modes(&grid, MMS_KMAX, n_theta, |r, t, z| manufactured_forcing_point(r, t, z, lz));
    let mut solver = SolverConfig::new(grid, MMS_KMAX, 2e-3, 0.2)?;
    solver.scheme = scheme;
    let mut s = Stepper::full(&exact, &solver)?.with_forcing(std::sync::Arc::new(SteadyForce(force)));
    s.run()?;
    Ok(s.field(0).sub(&exact).l2())
}

/// `log2(e(32) / e(64))` of the manufactured solution.
pub fn manufactured_slope(scheme: Scheme) -> Result<(f64, f64, f64)> {
    let e1 = manufactured_error(32, scheme)?;
    let e2 = manufactured_error(64, scheme)?;
    Ok(((e1 / e2).log2(), e1, e2))
}

fn push_or_fail<T>(report: &mut ExperimentReport, names: &[&str], r: Result<T>, f: impl FnOnce(T) -> Vec<Check>) {
    match r {
        Ok(v) => report.checks.extend(f(v)),
        Err(_) => report.checks.extend(names.iter().map(|n| Check::failed(*n))),
    }
}

/// Property suite on seeded random fields plus short flow runs. Errors of
/// the flow runs become failed checks.
pub fn experiment_invariants(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = cfg.solver.grid;
    let kmax = cfg.solver.kmax;
    let mut rng = FieldRng::new(cfg.seed);
    let mut report = ExperimentReport::new(Which::Invariants);

    let (mean_ratio, osc_ratio, failures) = poincare_ratios(&mut rng, &grid, kmax, POINCARE_SAMPLES);
    report.checks.push(Check::at_most("poincare/failures", failures as f64, 0.0));
    report.checks.push(Check::at_most("poincare/mean_ratio", mean_ratio, 1.0));
    report.checks.push(Check::at_most("poincare/oscillation_ratio", osc_ratio, 1.0));

    push_or_fail(
        &mut report,
        &["averaging/identity", "averaging/remainder"],
        averaging_identity(&mut rng, &grid, kmax, AVERAGING_SAMPLES),
        |(w, rem)| {
            vec![
                Check::at_most("averaging/identity", w, AVERAGING_TOL),
                Check::at_most("averaging/remainder", rem, AVERAGING_REMAINDER_TOL),
            ]
        },
    );
    push_or_fail(
        &mut report,
        &["projection/idempotence", "projection/divergence"],
        projection_margins(&mut rng, &grid, kmax, PROJECTION_SAMPLES),
        |(i, d)| {
            vec![
                Check::at_most("projection/idempotence", i, IDEMPOTENCE_TOL),
                Check::at_most("projection/divergence", d, DIVERGENCE_TOL),
            ]
        },
    );
    push_or_fail(
        &mut report,
        &["biot_savart/min", "biot_savart/max"],
        biot_savart_range(&mut rng, &grid, kmax, BIOT_SAVART_SAMPLES),
        |(lo, hi)| {
            vec![
                Check::within("biot_savart/min", lo, BIOT_SAVART_BAND),
                Check::within("biot_savart/max", hi, BIOT_SAVART_BAND),
            ]
        },
    );
    push_or_fail(&mut report, &["mms/slope"], manufactured_slope(cfg.solver.scheme), |(s, _, _)| {
        vec![Check::within("mms/slope", s, MMS_SLOPE_BAND)]
    });

    // axisymmetric data with swirl: full solver against the axisymmetric one
    let axi_family = DataFamily {
        modes: Vec::new(),
        ..cfg.data_family.clone()
    };
    let axi = eps_pair(&axi_family, &cfg.solver, cfg.eps_list[0]).map(|p| {
        let leak = p.full.series.nonaxisymmetric_share.iter().fold(0.0_f64, |m, &v| m.max(v));
        (leak, p)
    });
    match axi {
        Ok((leak, mut p)) => {
            p.full.name = "axisym_data_full".into();
            p.axisym.name = "axisym_data_axisym".into();
            let scale = p.axisym.state.u.l2().max(f64::MIN_POSITIVE);
            report.checks.push(Check::at_most("axisymmetry/leak", leak, AXISYM_LEAK_TOL));
            report
                .checks
                .push(Check::at_most("axisymmetry/match", p.sup_diff / scale, AXISYM_MATCH_TOL));
            report.run_checks(&p.full, true);
            report.run_checks(&p.axisym, true);
            report.runs.push(p.full);
            report.runs.push(p.axisym);
        }
        Err(_) => {
            for n in ["axisymmetry/leak", "axisymmetry/match", "axisym_data_full/energy_defect"] {
                report.checks.push(Check::failed(n));
            }
        }
    }

    // no-swirl run, every step recorded for the ω/r monitor
    let mut solver = cfg.solver.clone();
    solver.save_every = 1;
    let noswirl = build_initial(&cfg.data_family, &grid, kmax, 0.0).and_then(|u0| {
        let mut s = Stepper::full(&u0, &solver)?;
        s.run()?;
        Ok(record("noswirl".into(), s))
    });
    match noswirl {
        Ok(run) => {
            match omega_over_r_monitor(&run.series) {
                Ok(m) => report
                    .checks
                    .push(Check::at_most("omega_over_r/max_increase", m.max_increase, crate::diagnostics::OMEGA_TOL)),
                Err(_) => report.checks.push(Check::failed("omega_over_r/max_increase")),
            }
            report.run_checks(&run, true);
            report.runs.push(run);
        }
        Err(_) => {
            report.checks.push(Check::failed("omega_over_r/max_increase"));
            report.checks.push(Check::failed("noswirl/energy_defect"));
        }
    }

    report.summaries.push(SummaryTable {
        name: "invariants".into(),
        rows: report
            .checks
            .iter()
            .map(|c| SummaryRow {
                eps: None,
                norm: c.value,
                slope: None,
                r2: None,
                pass: c.pass,
            })
            .collect(),
    });
    Ok(report)
}

/// Dispatches on `cfg.which`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.which {
        Which::EpsScaling => experiment_eps_scaling(cfg),
        Which::Expansion => experiment_expansion(cfg),
        Which::Odevity => experiment_odevity(cfg),
        Which::Invariants => experiment_invariants(cfg),
    }
}
