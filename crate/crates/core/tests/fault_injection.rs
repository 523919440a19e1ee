//! Flips the sign of the radial derivative and checks that the invariant
//! suite notices. Runs in its own binary because the switch is global.

use cylns_core::experiments::{biot_savart_range, experiment_invariants, ExperimentConfig, Which};
use cylns_core::grid::set_ddr_sign_fault;
use cylns_core::random::FieldRng;

#[test]
fn ddr_sign_fault_breaks_the_suite() {
    let cfg = ExperimentConfig::desk(Which::Invariants, "unused");
    let (g, k) = (cfg.solver.grid, cfg.solver.kmax);

    let clean = biot_savart_range(&mut FieldRng::new(5), &g, k, 5).unwrap();
    set_ddr_sign_fault(true);
    let faulty = biot_savart_range(&mut FieldRng::new(5), &g, k, 5).unwrap();
    let report = experiment_invariants(&cfg).unwrap();
    set_ddr_sign_fault(false);

    for c in &report.checks {
        println!("{:36} {:>12.4e} {}", c.name, c.value, if c.pass { "pass" } else { "FAIL" });
    }
    assert!(!report.passed());
    for name in ["noswirl/energy_defect", "axisym_data_full/energy_defect", "mms/slope"] {
        assert!(!report.check(name).unwrap().pass, "{name} should fail under the fault");
    }
    // the gradient/curl ratio moves but stays inside the wide sanity band
    assert!(faulty.1 > 1.1 * clean.1, "{clean:?} -> {faulty:?}");
    // operators that never call ddr are untouched
    for name in ["poincare/failures", "projection/idempotence", "averaging/identity"] {
        assert!(report.check(name).unwrap().pass, "{name}");
    }
}
