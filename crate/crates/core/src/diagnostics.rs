//! Norm monitors, energy budgets, parity meters and log-log slope fits.

use crate::error::{Error, Result};
use crate::modal::{
    modal_divergence, nonaxisymmetric_share, norms, omega_over_r_l2, parity_violation,
    swirl_mean_share, ModalVectorField, NormReport, ParityClass,
};

/// Per-save record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSeries {
    pub parity_class: ParityClass,
    pub times: Vec<f64>,
    pub reports: Vec<NormReport>,
    /// `‖u‖²`.
    pub energy: Vec<f64>,
    /// Cumulative `2 Σ dt ‖∇u‖²`.
    pub energy_budget: Vec<f64>,
    pub omega_over_r_l2: Vec<f64>,
    pub parity_violation: Vec<f64>,
    /// Largest modal divergence residual.
    pub div_residual: Vec<f64>,
    pub nonaxisymmetric_share: Vec<f64>,
    pub swirl_mean_share: Vec<f64>,
    /// Largest `max |D u| / ‖u‖` over every step taken, saved or not.
    pub max_step_divergence: f64,
    /// Whether any recorded state carried swirl.
    pub swirl_present: bool,
}

impl DiagnosticsSeries {
    pub fn new(parity_class: ParityClass) -> Self {
        Self {
            parity_class,
            times: Vec::new(),
            reports: Vec::new(),
            energy: Vec::new(),
            energy_budget: Vec::new(),
            omega_over_r_l2: Vec::new(),
            parity_violation: Vec::new(),
            div_residual: Vec::new(),
            nonaxisymmetric_share: Vec::new(),
            swirl_mean_share: Vec::new(),
            max_step_divergence: 0.0,
            swirl_present: false,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn record(&mut self, time: f64, u: &ModalVectorField, budget: f64) {
        let report = norms(u);
        self.times.push(time);
        self.energy.push(u.energy());
        self.energy_budget.push(budget);
        self.omega_over_r_l2.push(omega_over_r_l2(u));
        self.parity_violation.push(parity_violation(u, self.parity_class));
        self.div_residual.push(modal_divergence(u).max_abs());
        self.nonaxisymmetric_share.push(nonaxisymmetric_share(u));
        self.swirl_mean_share.push(swirl_mean_share(u));
        self.reports.push(report);
        self.swirl_present |= !u.theta.is_zero();
    }

    pub fn note_step_divergence(&mut self, ratio: f64) {
        self.max_step_divergence = self.max_step_divergence.max(ratio);
    }

    /// `(E(t) + budget(t) − E(0)) / E(0)` at each save (absolute when
    /// `E(0) = 0`).
    pub fn energy_defects(&self) -> Vec<f64> {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let scale = if e0 > 0.0 { e0 } else { 1.0 };
        self.energy
            .iter()
            .zip(&self.energy_budget)
            .map(|(e, b)| (e + b - e0) / scale)
            .collect()
    }

    pub fn max_parity_violation(&self) -> f64 {
        self.parity_violation.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// Norms of `a − b`.
pub fn compare_fields(a: &ModalVectorField, b: &ModalVectorField) -> Result<NormReport> {
    a.check_shape(b)?;
    Ok(norms(&a.sub(b)))
}

/// Least-squares fit of `log norm` against `log ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub eps_values: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub r2: f64,
}

pub fn scaling_slope(points: &[(f64, f64)]) -> Result<ScalingReport> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(e, n) in points {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidInput(format!("nonpositive eps {e} in slope fit")));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput(format!("nonpositive norm {n} in slope fit")));
        }
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidInput("slope fit needs distinct eps values".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingReport {
        eps_values: points.iter().map(|p| p.0).collect(),
        norms: points.iter().map(|p| p.1).collect(),
        slope,
        r2,
    })
}

/// Worst relative defect of the energy inequality over the series.
pub fn energy_budget(series: &DiagnosticsSeries) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::InvalidInput("energy budget of an empty series".into()));
    }
    Ok(series
        .energy_defects()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Relative per-save increase allowed for `‖ω^θ/r‖`.
pub const OMEGA_TOL: f64 = 1e-8;

/// Outcome of the `ω^θ / r` monotonicity check.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaMonitor {
    pub pass: bool,
    /// Largest relative increase between consecutive saves (negative when
    /// strictly decreasing throughout).
    pub max_increase: f64,
    /// Index of the first save that broke the tolerance.
    pub first_violation: Option<usize>,
}

/// Checks that `‖ω^θ/r‖` never grows by more than [`OMEGA_TOL`] relative.
pub fn omega_over_r_monitor(series: &DiagnosticsSeries) -> Result<OmegaMonitor> {
    if series.swirl_present {
        return Err(Error::InvalidInput(
            "omega/r monotonicity applies to runs without swirl".into(),
        ));
    }
    omega_check(&series.omega_over_r_l2)
}

/// The monotonicity check on a raw sequence.
pub fn omega_check(values: &[f64]) -> Result<OmegaMonitor> {
    if values.len() < 2 {
        return Err(Error::InvalidInput("omega/r monitor needs at least two samples".into()));
    }
    let mut max_increase = f64::NEG_INFINITY;
    let mut first_violation = None;
    for (i, w) in values.windows(2).enumerate() {
        let inc = if w[0] > 0.0 {
            (w[1] - w[0]) / w[0]
        } else if w[1] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if inc > OMEGA_TOL && first_violation.is_none() {
            first_violation = Some(i + 1);
        }
        max_increase = max_increase.max(inc);
    }
    Ok(OmegaMonitor {
        pass: first_violation.is_none(),
        max_increase,
        first_violation,
    })
}
