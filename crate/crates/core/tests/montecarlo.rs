mod common;

use qrad_core::detection::{report, Prefactor, Source};
use qrad_core::montecarlo::{monte_carlo_phase_conjugate, McConfig};
use qrad_core::QiScenario;

fn cfg(trials: u64, seed: u64) -> McConfig {
    McConfig {
        trials,
        seed,
        phase: None,
    }
}

#[test]
fn small_m_example_against_half_prefactor_bound() {
    let scn = QiScenario::new(0.2, 0.5, 5.0, 0.5, 100).unwrap();
    let mc = monte_carlo_phase_conjugate(&scn, &cfg(20_000, 11)).unwrap();
    let half = report(&scn, Source::Quantum, Prefactor::Half)
        .unwrap()
        .p_error;
    assert!(mc.p_error_ci.1 >= half, "{:?} vs {half}", mc.p_error_ci);
    assert!(!mc.low_precision);
}

#[test]
fn asymptotic_example_against_unity_bound() {
    let scn = QiScenario::new(0.2, 0.5, 5.0, 0.5, 400).unwrap();
    let mc = monte_carlo_phase_conjugate(&scn, &cfg(20_000, 12)).unwrap();
    let bound = report(&scn, Source::Quantum, Prefactor::Unity)
        .unwrap()
        .p_error;
    assert!(mc.p_error_ci.1 >= bound);
}

#[test]
fn log_error_affine_in_modes() {
    let base = QiScenario::new(0.2, 0.5, 5.0, 0.5, 1).unwrap();
    let modes: Vec<f64> = (1..=10).map(|k| 50.0 * k as f64).collect();
    let log_pe: Vec<f64> = modes
        .iter()
        .map(|&m| {
            let r =
                monte_carlo_phase_conjugate(&base.with_modes(m as u64), &cfg(40_000, 5)).unwrap();
            r.report.p_error.ln()
        })
        .collect();
    let r2 = common::r_squared(&modes, &log_pe);
    assert!(r2 >= 0.98, "R² = {r2}");
    assert!(common::slope(&modes, &log_pe) < 0.0);
}

#[test]
fn bound_scenarios_hold_at_reduced_trials() {
    for (i, scn) in common::bound_scenarios().iter().enumerate().step_by(4) {
        let mc = monte_carlo_phase_conjugate(scn, &cfg(10_000, 100 + i as u64)).unwrap();
        let bound = report(scn, Source::Quantum, Prefactor::Unity)
            .unwrap()
            .p_error;
        assert!(mc.p_error_ci.1 >= bound, "scenario {i}");
    }
}

#[test]
fn thread_count_does_not_change_counts() {
    let scn = QiScenario::new(0.3, 0.5, 2.0, 0.5, 50).unwrap();
    let run = || monte_carlo_phase_conjugate(&scn, &cfg(5_000, 3)).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run);
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(run);
    assert_eq!(one, many);
}
