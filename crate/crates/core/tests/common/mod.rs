#![allow(dead_code)]

use qrad_core::QiScenario;

/// Monte-Carlo bound-check scenarios.
///
/// The closed-form TMSV expression is an asymptotic estimate, so the check
/// is made where it is meaningful: total exponent `M η N_s / N_B` between 6
/// and 10, background at least one photon per mode, `N_s ≤ 1`.
pub fn bound_scenarios() -> Vec<QiScenario> {
    (0..20)
        .map(|i| {
            let eta = [0.2, 0.3, 0.5, 0.8, 0.4][i % 5];
            let n_s = [0.5, 1.0, 0.75, 0.3][i / 5];
            let n_b = [1.0, 2.0, 3.0, 5.0, 8.0][(i + i / 5) % 5];
            let target = 6.0 + 3.5 * (i % 7) as f64 / 6.0;
            let modes = (target * n_b / (eta * n_s)).ceil() as u64;
            let s = QiScenario::new(eta, n_s, n_b, 0.5, modes).unwrap();
            let total = modes as f64 * eta * n_s / n_b;
            assert!(
                (6.0..=10.0).contains(&total),
                "scenario {i}: exponent {total}"
            );
            s
        })
        .collect()
}

pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
