//! Small-grid runs of the experiment drivers.

use cylns_core::data::{build_initial, initial_profiles, DataFamily};
use cylns_core::experiments::{
    eps_pair, experiment_eps_scaling, parity_run, ExperimentConfig, Which, EPS_SLOPE_BAND, MEAN_SLOPE_BAND,
};
use cylns_core::modal::{parity_violation, slot_index, Trig};
use cylns_core::solver::run_hierarchy;
use cylns_core::{make_grid, ParityClass, SolverConfig};

fn small_solver() -> SolverConfig {
    let mut s = SolverConfig::new(make_grid(24, 32, 4.0, 4.0).unwrap(), 3, 4e-3, 0.08).unwrap();
    s.save_every = 5;
    s
}

#[test]
fn eps_zero_runs_coincide() {
    let p = eps_pair(&DataFamily::default(), &small_solver(), 0.0).unwrap();
    assert!(p.sup_diff <= 1e-12, "{}", p.sup_diff);
    assert!(p.sup_mean_diff <= 1e-12, "{}", p.sup_mean_diff);
}

#[test]
fn slopes_survive_a_change_of_family() {
    let mut cfg = ExperimentConfig::desk(Which::EpsScaling, "unused");
    cfg.solver = small_solver();
    let a = experiment_eps_scaling(&cfg).unwrap();
    cfg.data_family.mode_amplitude *= 2.0;
    cfg.data_family.psi.width = 0.6;
    let b = experiment_eps_scaling(&cfg).unwrap();
    for r in [&a, &b] {
        let s1 = r.scaling[0].1.slope;
        let s2 = r.scaling[1].1.slope;
        assert!(s1 >= EPS_SLOPE_BAND.0 && s1 <= EPS_SLOPE_BAND.1, "{s1}");
        assert!(s2 >= MEAN_SLOPE_BAND.0 && s2 <= MEAN_SLOPE_BAND.1, "{s2}");
    }
    assert!(b.scaling[0].1.norms[0] > a.scaling[0].1.norms[0]);
}

#[test]
fn hierarchy_is_eps_independent_bitwise() {
    let s = small_solver();
    let init = initial_profiles(&DataFamily::default(), &s.grid, s.kmax).unwrap();
    let (h1, _) = run_hierarchy(&init, 2, &s).unwrap();
    let (h2, _) = run_hierarchy(&init, 2, &s).unwrap();
    assert_eq!(h1, h2);
    assert!(h1.order(1).unwrap().r.cos(0).is_zero());
    assert!(h1.order(1).unwrap().z.cos(0).is_zero());
}

#[test]
fn parity_detector_sees_seeded_violation() {
    let s = small_solver();
    let mut u0 = build_initial(&DataFamily::odevity(), &s.grid, s.kmax, 0.1).unwrap();
    let clean = parity_run(&u0, &s, "clean").unwrap();
    assert_eq!(clean.max_violation, 0.0);
    assert_eq!(clean.max_swirl_share, 0.0);

    let seed = u0.r.cos(1).scaled(1e-3);
    *u0.r.slot_mut(slot_index(1, Trig::Sin)) = seed;
    let initial = parity_violation(&u0, ParityClass::CosMeridianSinSwirl);
    assert!(initial > 0.0);
    let dirty = parity_run(&u0, &s, "dirty").unwrap();
    assert!(dirty.max_violation >= initial);

    let rest = build_initial(&DataFamily::odevity(), &s.grid, s.kmax, 0.0).unwrap();
    assert_eq!(parity_run(&rest, &s, "rest").unwrap().max_violation, 0.0);
}
