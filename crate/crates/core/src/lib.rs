//! Fourier-in-θ finite-difference Navier-Stokes solver in cylindrical
//! coordinates, with the ε-expansion profile hierarchy for almost
//! axisymmetric flows and the diagnostics used to verify it.

pub mod data;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod modal;
pub mod nonlinear;
pub mod random;
pub mod solver;

pub use data::{build_initial, initial_profiles, DataFamily};
pub use diagnostics::{compare_fields, energy_budget, omega_over_r_monitor, scaling_slope, DiagnosticsSeries, ScalingReport};
pub use elliptic::{helmholtz_solve, pressure_poisson, project_divfree, HelmholtzSpec, OuterBc};
pub use error::{Error, Result};
pub use experiments::{run_experiment, Check, ExperimentConfig, ExperimentReport, SummaryRow, Which};
pub use io::{load_config, parse_config, read_snapshot, write_report, write_snapshot, Snapshot};
pub use grid::{axis_parity, ddr, ddz, make_grid, AxisParity, Component, MeridianGrid, MeridianScalar};
pub use modal::{
    modal_curl, modal_divergence, norms, parity_violation, sample_physical, theta_average,
    theta_derivative_vector, ModalPressure, ModalScalarField, ModalVectorField, NormReport, ParityClass,
};
pub use nonlinear::{advect, convolve_modes, hierarchy_forcing};
pub use solver::{
    assemble_expansion, run_axisym, run_full, run_hierarchy, FlowState, HierarchyInit, ProfileHierarchy,
    Scheme, SolverConfig, Stepper, step_full,
};
