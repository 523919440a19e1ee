//! IMEX time integration: the full modal Navier-Stokes system, its
//! axisymmetric restriction and the ε-profile hierarchy.
//!
//! All three share one stepper. It advances a list of fields `u_0..u_N`
//! where the explicit term of order `n` is `Σ_{i=0}^{n} (u_i·∇) u_{n−i}`.
//! A single order is the full solver; several orders are the hierarchy,
//! which is then exactly the ε-Taylor expansion of the discrete full step.

use std::sync::Arc;

use crate::diagnostics::DiagnosticsSeries;
use crate::elliptic::{project_with_potential, vector_diffusion_solve, vector_laplacian_apply};
use crate::error::{Error, Result};
use crate::grid::MeridianGrid;
use crate::modal::{max_speed, modal_divergence, ModalPressure, ModalScalarField, ModalVectorField, ParityClass};
use crate::nonlinear::advect_sum;

/// Time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    /// Backward Euler diffusion, forward Euler advection.
    Imex1,
    /// Crank-Nicolson diffusion with an explicit midpoint advection
    /// predicted by a backward Euler half step.
    #[default]
    Imex2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Imex1 => "IMEX1",
            Scheme::Imex2 => "IMEX2",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IMEX1" => Ok(Scheme::Imex1),
            "IMEX2" => Ok(Scheme::Imex2),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Run parameters. Viscosity is fixed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: MeridianGrid,
    pub kmax: usize,
    pub dt: f64,
    pub tfinal: f64,
    pub save_every: usize,
    pub scheme: Scheme,
    /// Test switch: drop the advection term entirely.
    pub advection: bool,
}

impl SolverConfig {
    pub fn new(grid: MeridianGrid, kmax: usize, dt: f64, tfinal: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            kmax,
            dt,
            tfinal,
            save_every: 10,
            scheme: Scheme::Imex2,
            advection: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.tfinal.is_finite() && self.tfinal >= self.dt) {
            return Err(Error::InvalidInput(format!(
                "T = {} must be at least dt = {}",
                self.tfinal, self.dt
            )));
        }
        if self.save_every == 0 {
            return Err(Error::InvalidInput("save_every must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(T / dt)`.
    pub fn num_steps(&self) -> usize {
        (self.tfinal / self.dt).round() as usize
    }

    /// Implicit shift `σ` of the scheme.
    pub fn sigma(&self) -> f64 {
        match self.scheme {
            Scheme::Imex1 => 1.0 / self.dt,
            Scheme::Imex2 => 2.0 / self.dt,
        }
    }

    fn check_field(&self, u: &ModalVectorField) -> Result<()> {
        if u.grid() != &self.grid || u.kmax() != self.kmax {
            return Err(Error::ShapeMismatch(format!(
                "field has K = {} on {}x{}, config expects K = {} on {}x{}",
                u.kmax(),
                u.grid().nr(),
                u.grid().nz(),
                self.kmax,
                self.grid.nr(),
                self.grid.nz()
            )));
        }
        Ok(())
    }
}

/// External body force `f(t)` added to the momentum equation.
pub trait BodyForce: Send + Sync {
    fn force(&self, t: f64) -> ModalVectorField;
}

/// Solution at one instant. `p` is the pressure recovered from the last
/// projection, `σ φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub time: f64,
    pub u: ModalVectorField,
    pub p: ModalPressure,
}

/// The ε-independent profiles `u_(0), ..., u_(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileHierarchy {
    orders: Vec<ModalVectorField>,
}

impl ProfileHierarchy {
    pub fn new(orders: Vec<ModalVectorField>) -> Result<Self> {
        let first = orders.first().ok_or(Error::MissingOrder(0))?;
        for u in &orders[1..] {
            first.check_shape(u)?;
        }
        Ok(Self { orders })
    }

    pub fn orders(&self) -> &[ModalVectorField] {
        &self.orders
    }

    pub fn order(&self, n: usize) -> Result<&ModalVectorField> {
        self.orders.get(n).ok_or(Error::MissingOrder(n))
    }

    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn into_orders(self) -> Vec<ModalVectorField> {
        self.orders
    }
}

/// `Σ_{j=0}^{N} ε^j u_(j)`.
pub fn assemble_expansion(h: &ProfileHierarchy, eps: f64, n: usize) -> Result<ModalVectorField> {
    if n > h.max_order() {
        return Err(Error::MissingOrder(n));
    }
    let mut out = h.orders[0].clone();
    let mut w = 1.0;
    for u in &h.orders[1..=n] {
        w *= eps;
        out.axpy(w, u);
    }
    Ok(out)
}

/// Drives one or more coupled orders through time and records diagnostics
/// for order 0 every `save_every` steps (and at the final step).
pub struct Stepper {
    cfg: SolverConfig,
    orders: Vec<ModalVectorField>,
    outer_kmax: usize,
    time: f64,
    steps: usize,
    pressure: ModalScalarField,
    forcing: Option<Arc<dyn BodyForce>>,
    budget: f64,
    series: DiagnosticsSeries,
    just_saved: bool,
}

impl Stepper {
    /// Full solver from `u0`.
    pub fn full(u0: &ModalVectorField, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.check_field(u0)?;
        Self::build(vec![u0.clone()], cfg.clone(), cfg.kmax)
    }

    /// Axisymmetric solver: mode-0 input, integrated with truncation 0.
    pub fn axisym(u0: &ModalVectorField, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.check_field(u0)?;
        if !u0.is_axisymmetric() {
            return Err(Error::InvalidInput(
                "axisymmetric solver needs data with only mode-0 slots".into(),
            ));
        }
        let mut inner = cfg.clone();
        inner.kmax = 0;
        Self::build(vec![u0.with_kmax(0)], inner, cfg.kmax)
    }

    /// Profile hierarchy with `orders[0]` axisymmetric without swirl.
    pub fn hierarchy(orders: Vec<ModalVectorField>, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let base = orders.first().ok_or(Error::MissingOrder(0))?;
        for u in &orders {
            cfg.check_field(u)?;
        }
        if !base.is_axisymmetric() || !base.theta.is_zero() {
            return Err(Error::InvalidInput(
                "order-0 profile must be axisymmetric without swirl".into(),
            ));
        }
        Self::build(orders, cfg.clone(), cfg.kmax)
    }

    fn build(orders: Vec<ModalVectorField>, cfg: SolverConfig, outer_kmax: usize) -> Result<Self> {
        let mut series = DiagnosticsSeries::new(ParityClass::General);
        series.record(0.0, &orders[0], 0.0);
        let pressure = ModalScalarField::zeros(&cfg.grid, cfg.kmax);
        Ok(Self {
            cfg,
            orders,
            outer_kmax,
            time: 0.0,
            steps: 0,
            pressure,
            forcing: None,
            budget: 0.0,
            series,
            just_saved: true,
        })
    }

    pub fn with_forcing(mut self, f: Arc<dyn BodyForce>) -> Self {
        self.forcing = Some(f);
        self
    }

    /// Tracks `class` in the parity column of the recorded series.
    pub fn with_parity_class(mut self, class: ParityClass) -> Self {
        let mut series = DiagnosticsSeries::new(class);
        series.record(self.time, &self.orders[0], self.budget);
        self.series = series;
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.cfg.num_steps()
    }

    /// True right after a step whose state was recorded.
    pub fn just_saved(&self) -> bool {
        self.just_saved
    }

    pub fn series(&self) -> &DiagnosticsSeries {
        &self.series
    }

    /// Current field of order `n`, at the caller's truncation.
    pub fn field(&self, n: usize) -> ModalVectorField {
        self.orders[n].with_kmax(self.outer_kmax)
    }

    pub fn num_orders(&self) -> usize {
        self.orders.len()
    }

    pub fn state(&self) -> FlowState {
        FlowState {
            time: self.time,
            u: self.field(0),
            p: self.pressure.with_kmax(self.outer_kmax),
        }
    }

    pub fn hierarchy_profiles(&self) -> ProfileHierarchy {
        ProfileHierarchy {
            orders: (0..self.orders.len()).map(|n| self.field(n)).collect(),
        }
    }

    fn explicit_terms(&self, orders: &[ModalVectorField], t: f64) -> Result<Vec<ModalVectorField>> {
        let mut out = Vec::with_capacity(orders.len());
        for n in 0..orders.len() {
            let mut nl = if self.cfg.advection {
                advect_sum(orders, n, 0, n)?
            } else {
                ModalVectorField::zeros(&self.cfg.grid, self.cfg.kmax)
            };
            if n == 0 {
                if let Some(f) = &self.forcing {
                    nl.axpy(-1.0, &f.force(t).with_kmax(self.cfg.kmax));
                }
            }
            out.push(nl);
        }
        Ok(out)
    }

    fn check_cfl(&self) -> Result<()> {
        let speed = max_speed(&self.orders[0]);
        let h = self.cfg.grid.dr().min(self.cfg.grid.dz());
        let limit = 0.5 * h / speed;
        if speed > 0.0 && self.cfg.dt > limit {
            return Err(Error::Cfl {
                time: self.time,
                max_speed: speed,
                dt: self.cfg.dt,
                dt_limit: limit,
            });
        }
        Ok(())
    }

    /// Advances every order by one step.
    pub fn step(&mut self) -> Result<()> {
        self.check_cfl()?;
        let dt = self.cfg.dt;
        let sigma = self.cfg.sigma();
        let nl = self.explicit_terms(&self.orders, self.time)?;
        let mut next = Vec::with_capacity(self.orders.len());
        let mut phi0 = None;
        // velocity on which the step's dissipation is measured: the
        // implicit (pre-projection) solution, averaged with u for IMEX2
        let mut probe = None;
        match self.cfg.scheme {
            Scheme::Imex1 => {
                for (u, n) in self.orders.iter().zip(&nl) {
                    let mut rhs = u.scaled(sigma);
                    rhs.axpy(-1.0, n);
                    let v = vector_diffusion_solve(sigma, &rhs)?;
                    probe.get_or_insert_with(|| v.clone());
                    let (w, phi) = project_with_potential(&v)?;
                    phi0.get_or_insert(phi);
                    next.push(w);
                }
            }
            Scheme::Imex2 => {
                let mut star = Vec::with_capacity(self.orders.len());
                for (u, n) in self.orders.iter().zip(&nl) {
                    let mut rhs = u.scaled(sigma);
                    rhs.axpy(-1.0, n);
                    star.push(project_with_potential(&vector_diffusion_solve(sigma, &rhs)?)?.0);
                }
                let nl_star = self.explicit_terms(&star, self.time + 0.5 * dt)?;
                for (u, n) in self.orders.iter().zip(&nl_star) {
                    let mut rhs = u.scaled(sigma);
                    rhs.axpy(1.0, &vector_laplacian_apply(u));
                    rhs.axpy(-2.0, n);
                    let v = vector_diffusion_solve(sigma, &rhs)?;
                    probe.get_or_insert_with(|| u.add(&v).scaled(0.5));
                    let (w, phi) = project_with_potential(&v)?;
                    phi0.get_or_insert(phi);
                    next.push(w);
                }
            }
        }
        let t_new = self.time + dt;
        if next.iter().any(|u| !u.all_finite()) {
            return Err(Error::NonFinite { time: t_new });
        }
        let probe = probe.expect("at least one order");
        let dissipation = -vector_laplacian_apply(&probe).inner(&probe);
        self.budget += 2.0 * dt * dissipation.max(0.0);
        for u in &next {
            let l2 = u.l2();
            let ratio = if l2 > 0.0 {
                modal_divergence(u).max_abs() / l2
            } else {
                0.0
            };
            self.series.note_step_divergence(ratio);
        }
        self.pressure = phi0.expect("at least one order").scaled(sigma);
        self.orders = next;
        self.steps += 1;
        self.time = self.steps as f64 * dt;
        self.just_saved = self.steps.is_multiple_of(self.cfg.save_every) || self.is_done();
        if self.just_saved {
            self.series.record(self.time, &self.orders[0], self.budget);
        }
        Ok(())
    }

    /// Steps until `T`.
    pub fn run(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_series(self) -> DiagnosticsSeries {
        self.series
    }
}

/// One step of the full solver from `s`.
pub fn step_full(s: &FlowState, cfg: &SolverConfig) -> Result<FlowState> {
    let mut st = Stepper::full(&s.u, cfg)?;
    st.step()?;
    let mut out = st.state();
    out.time = s.time + cfg.dt;
    Ok(out)
}

/// Integrates the full system from `u0` to `T`.
pub fn run_full(u0: &ModalVectorField, cfg: &SolverConfig) -> Result<(FlowState, DiagnosticsSeries)> {
    let mut s = Stepper::full(u0, cfg)?;
    s.run()?;
    Ok((s.state(), s.into_series()))
}

/// Integrates the axisymmetric system (with or without swirl) from mode-0
/// data. The result is returned at the input truncation.
pub fn run_axisym(u0: &ModalVectorField, cfg: &SolverConfig) -> Result<(FlowState, DiagnosticsSeries)> {
    let mut s = Stepper::axisym(u0, cfg)?;
    s.run()?;
    Ok((s.state(), s.into_series()))
}

/// Initial data of the hierarchy: the axisymmetric no-swirl base `a0` and
/// the order-1 field. Higher orders start from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyInit {
    pub base: ModalVectorField,
    pub first: ModalVectorField,
}

/// Co-evolves `u_(0), ..., u_(N)` to `T`.
pub fn run_hierarchy(
    init: &HierarchyInit,
    n_max: usize,
    cfg: &SolverConfig,
) -> Result<(ProfileHierarchy, DiagnosticsSeries)> {
    let mut s = Stepper::hierarchy(hierarchy_orders(init, n_max)?, cfg)?;
    s.run()?;
    Ok((s.hierarchy_profiles(), s.into_series()))
}

/// `[a0, u1, 0, ..., 0]` with `N + 1` entries.
pub fn hierarchy_orders(init: &HierarchyInit, n_max: usize) -> Result<Vec<ModalVectorField>> {
    init.base.check_shape(&init.first)?;
    let mut orders = vec![init.base.clone()];
    if n_max >= 1 {
        orders.push(init.first.clone());
    }
    for _ in 2..=n_max {
        orders.push(ModalVectorField::zeros(init.base.grid(), init.base.kmax()));
    }
    Ok(orders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, MeridianScalar};

    fn cfg() -> SolverConfig {
        let g = make_grid(16, 16, 4.0, 4.0).unwrap();
        let mut c = SolverConfig::new(g, 2, 2e-3, 0.02).unwrap();
        c.save_every = 5;
        c
    }

    #[test]
    fn zero_stays_zero() {
        let c = cfg();
        let u0 = ModalVectorField::zeros(&c.grid, c.kmax);
        let (s, series) = run_full(&u0, &c).unwrap();
        assert!(s.u.is_zero());
        assert!((s.time - 0.02).abs() < 1e-15);
        assert_eq!(series.times.len(), 3);
        assert!(series.energy.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn single_full_step_matches_axisymmetric_step() {
        let c = cfg();
        let mut u0 = ModalVectorField::zeros(&c.grid, c.kmax);
        *u0.z.cos_mut(0) = MeridianScalar::from_fn(&c.grid, |r, z| (-(r - 0.5) * (r - 0.5) * 8.0).exp() * z.cos());
        let u0 = crate::elliptic::project_divfree(&u0).unwrap();
        let start = FlowState {
            time: 0.5,
            u: u0.clone(),
            p: ModalScalarField::zeros(&c.grid, c.kmax),
        };
        let full = step_full(&start, &c).unwrap();
        assert!((full.time - 0.5 - c.dt).abs() < 1e-15);
        let mut axi = Stepper::axisym(&u0, &c).unwrap();
        axi.step().unwrap();
        let d = full.u.sub(&axi.field(0)).l2();
        assert!(d <= 1e-14 * u0.l2(), "{d}");
        let zero = FlowState {
            time: 0.0,
            u: ModalVectorField::zeros(&c.grid, c.kmax),
            p: ModalScalarField::zeros(&c.grid, c.kmax),
        };
        assert!(step_full(&zero, &c).unwrap().u.is_zero());
    }

    #[test]
    fn config_validation() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        assert!(SolverConfig::new(g, 1, 0.0, 1.0).is_err());
        assert!(SolverConfig::new(g, 1, 0.1, 0.05).is_err());
        assert_eq!("imex1".parse::<Scheme>().unwrap(), Scheme::Imex1);
        assert!("rk4".parse::<Scheme>().is_err());
    }

    #[test]
    fn axisym_rejects_modes() {
        let c = cfg();
        let mut u0 = ModalVectorField::zeros(&c.grid, c.kmax);
        *u0.z.cos_mut(1) = MeridianScalar::from_fn(&c.grid, |r, _| (-(r - 2.0).powi(2)).exp());
        assert!(matches!(run_axisym(&u0, &c), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn cfl_guard_trips() {
        let c = cfg();
        let mut u0 = ModalVectorField::zeros(&c.grid, c.kmax);
        *u0.z.cos_mut(0) = MeridianScalar::from_fn(&c.grid, |_, _| 1e3);
        assert!(matches!(run_full(&u0, &c), Err(Error::Cfl { .. })));
    }

    #[test]
    fn expansion_assembly() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let mut a = ModalVectorField::zeros(&g, 1);
        *a.r.cos_mut(0) = MeridianScalar::from_fn(&g, |r, z| r + z);
        let mut b = ModalVectorField::zeros(&g, 1);
        *b.z.cos_mut(1) = MeridianScalar::from_fn(&g, |r, _| r);
        let h = ProfileHierarchy::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(assemble_expansion(&h, 0.0, 1).unwrap(), a);
        assert_eq!(assemble_expansion(&h, 0.7, 0).unwrap(), a);
        let h2 = ProfileHierarchy::new(vec![a.clone(), b.scaled(2.0)]).unwrap();
        let x = assemble_expansion(&h, 0.5, 1).unwrap();
        let y = assemble_expansion(&h2, 0.25, 1).unwrap();
        assert_eq!(x, y);
        assert!(assemble_expansion(&h, 0.1, 2).is_err());
    }
}
