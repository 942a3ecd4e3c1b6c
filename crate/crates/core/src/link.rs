//! Link budget: mode counting, transmit power and amplifier-chain noise.

use serde::{Deserialize, Serialize};

use crate::constants::PLANCK;
use crate::detection::{report, ErrorReport, Prefactor, QiScenario, Source};
use crate::error::{check_finite_nonneg, check_positive, Error, Result};
use crate::units::watts_to_dbm;

/// Bandwidth of a resonant JPA source used as the comparison baseline, Hz.
pub const JPA_REFERENCE_BANDWIDTH: f64 = 10e6;

/// Number of independent modes `floor(T B)`, at least one.
///
/// Products within a few ulps of an integer are rounded to it first so that
/// decimal inputs such as `1e-3 * 1e7` give the expected count.
pub fn independent_modes(integration_time: f64, bandwidth: f64) -> Result<u64> {
    check_positive("T", integration_time)?;
    check_positive("B", bandwidth)?;
    let tb = integration_time * bandwidth;
    let nearest = tb.round();
    let m = if (tb - nearest).abs() <= 4.0 * f64::EPSILON * nearest.max(1.0) {
        nearest
    } else {
        tb.floor()
    };
    if m >= u64::MAX as f64 {
        return Err(Error::Domain {
            name: "T*B",
            value: tb,
            reason: "mode count overflows",
        });
    }
    Ok((m as u64).max(1))
}

/// `photons_per_mode * h * nu * B`, W.
pub fn transmit_power(nu: f64, bandwidth: f64, photons_per_mode: f64) -> Result<f64> {
    check_positive("nu", nu)?;
    check_finite_nonneg("B", bandwidth)?;
    check_finite_nonneg("photons_per_mode", photons_per_mode)?;
    Ok(photons_per_mode * PLANCK * nu * bandwidth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Source bandwidth, Hz.
    pub bandwidth: f64,
    /// Integration time, s.
    pub integration_time: f64,
    /// Carrier frequency, Hz.
    pub center_frequency: f64,
    pub photons_per_mode: f64,
    pub modes: u64,
    /// W.
    pub transmit_power: f64,
}

impl LinkBudget {
    pub fn new(
        bandwidth: f64,
        integration_time: f64,
        center_frequency: f64,
        photons_per_mode: f64,
    ) -> Result<Self> {
        Ok(Self {
            bandwidth,
            integration_time,
            center_frequency,
            photons_per_mode,
            modes: independent_modes(integration_time, bandwidth)?,
            transmit_power: transmit_power(center_frequency, bandwidth, photons_per_mode)?,
        })
    }

    pub fn transmit_power_dbm(&self) -> f64 {
        watts_to_dbm(self.transmit_power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierStage {
    /// Linear power gain.
    pub gain: f64,
    /// Input-referred noise temperature, K.
    pub noise_temperature: f64,
}

impl AmplifierStage {
    pub fn new(gain: f64, noise_temperature: f64) -> Result<Self> {
        check_positive("gain", gain)?;
        check_finite_nonneg("noise_temperature", noise_temperature)?;
        Ok(Self {
            gain,
            noise_temperature,
        })
    }

    pub fn from_db(gain_db: f64, noise_temperature: f64) -> Result<Self> {
        Self::new(10f64.powf(gain_db / 10.0), noise_temperature)
    }
}

/// Total gain and equivalent input noise temperature of a cascade:
/// `T = T1 + T2/G1 + T3/(G1 G2) + ...`.
pub fn friis_cascade(stages: &[AmplifierStage]) -> Result<(f64, f64)> {
    if stages.is_empty() {
        return Err(Error::Domain {
            name: "stages",
            value: 0.0,
            reason: "the cascade needs at least one stage",
        });
    }
    let mut gain = 1.0;
    let mut t_eq = 0.0;
    for s in stages {
        AmplifierStage::new(s.gain, s.noise_temperature)?;
        t_eq += s.noise_temperature / gain;
        gain *= s.gain;
    }
    Ok((gain, t_eq))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub modes: u64,
    pub quantum: ErrorReport,
    pub classical: ErrorReport,
}

impl EndToEndReport {
    pub fn for_source(&self, source: Source) -> &ErrorReport {
        match source {
            Source::Quantum => &self.quantum,
            Source::Classical => &self.classical,
        }
    }
}

/// Error probabilities with the mode count taken from the link; the
/// scenario's own `modes` is replaced.
pub fn end_to_end_error(
    scn: &QiScenario,
    link: &LinkBudget,
    prefactor: Prefactor,
) -> Result<EndToEndReport> {
    let s = scn.with_modes(link.modes);
    Ok(EndToEndReport {
        modes: link.modes,
        quantum: report(&s, Source::Quantum, prefactor)?,
        classical: report(&s, Source::Classical, prefactor)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn mode_counts() {
        assert_eq!(independent_modes(1.0, 10e9).unwrap(), 10_000_000_000);
        assert_eq!(independent_modes(1e-3, 10e6).unwrap(), 10_000);
        assert_eq!(independent_modes(1e-9, 1e6).unwrap(), 1);
        assert_eq!(independent_modes(0.1, 25.0).unwrap(), 2);
        assert!(independent_modes(0.0, 1e6).is_err());
        assert!(independent_modes(1.0, -1.0).is_err());
    }

    #[test]
    fn transmit_power_values() {
        let p = transmit_power(9e9, 10e9, 1.0).unwrap();
        assert_relative_eq!(p, 5.9634631e-14, max_relative = 1e-7);
        assert!((watts_to_dbm(p) + 102.245).abs() < 0.01);
        assert_eq!(transmit_power(9e9, 0.0, 1.0).unwrap(), 0.0);
        let wide = transmit_power(9e9, 10e9, 1.0).unwrap();
        let narrow = transmit_power(9e9, JPA_REFERENCE_BANDWIDTH, 1.0).unwrap();
        assert_eq!(wide / narrow, 1000.0);
    }

    #[test]
    fn friis_examples() {
        let single = friis_cascade(&[AmplifierStage::new(1000.0, 5.0).unwrap()]).unwrap();
        assert_eq!(single, (1000.0, 5.0));
        let hemt = AmplifierStage::from_db(30.0, 5.0).unwrap();
        let room = AmplifierStage::from_db(30.0, 300.0).unwrap();
        let (g, t) = friis_cascade(&[hemt, room]).unwrap();
        assert_relative_eq!(g, 1e6, max_relative = 1e-12);
        assert_relative_eq!(t, 5.3, max_relative = 1e-12);
        assert!((t - 5.0) / t < 0.06);
        assert!(friis_cascade(&[]).is_err());
    }

    #[test]
    fn end_to_end_scaling() {
        let scn = QiScenario::new(0.01, 0.1, 20.0, 0.5, 1).unwrap();
        let wide = LinkBudget::new(10e9, 1.0, 9e9, 1.0).unwrap();
        let narrow = LinkBudget::new(10e6, 1.0, 9e9, 1.0).unwrap();
        let a = end_to_end_error(&scn, &wide, Prefactor::Unity).unwrap();
        let b = end_to_end_error(&scn, &narrow, Prefactor::Unity).unwrap();
        assert_relative_eq!(
            a.quantum.exponent / b.quantum.exponent,
            1000.0,
            max_relative = 1e-12
        );
        assert!(a.quantum.p_error <= a.classical.p_error);

        let dark = QiScenario { eta: 0.0, ..scn };
        let r = end_to_end_error(&dark, &wide, Prefactor::Unity).unwrap();
        assert_eq!(r.for_source(Source::Quantum).p_error, 1.0);
        assert_eq!(r.for_source(Source::Classical).p_error, 1.0);
    }

    fn stage() -> impl Strategy<Value = AmplifierStage> {
        (0.1f64..1e4, 0.0f64..500.0).prop_map(|(g, t)| AmplifierStage {
            gain: g,
            noise_temperature: t,
        })
    }

    proptest! {
        #[test]
        fn cascade_gain_is_order_independent(mut stages in prop::collection::vec(stage(), 1..6)) {
            let (g1, _) = friis_cascade(&stages).unwrap();
            stages.reverse();
            let (g2, _) = friis_cascade(&stages).unwrap();
            prop_assert!((g1 - g2).abs() <= 1e-12 * g1);
        }

        #[test]
        fn prepending_scales_later_noise(first in stage(), rest in prop::collection::vec(stage(), 1..6)) {
            let (_, t_rest) = friis_cascade(&rest).unwrap();
            let mut all = vec![first];
            all.extend(rest);
            let (_, t_all) = friis_cascade(&all).unwrap();
            let expected = first.noise_temperature + t_rest / first.gain;
            prop_assert!((t_all - expected).abs() <= 1e-12 * expected.max(1e-300));
        }

        #[test]
        fn high_gain_first_stage_not_worse_moved_back(
            hi_t in 0.0f64..50.0, lo in stage(), rest in prop::collection::vec(stage(), 0..4)
        ) {
            // A stage with gain above every other stage contributes least noise
            // from the front; moving it to second place never lowers T_eq
            // when it is also the quietest.
            let hi = AmplifierStage { gain: 1e5, noise_temperature: hi_t.min(lo.noise_temperature) };
            let mut front = vec![hi, lo];
            front.extend(rest.iter().copied());
            let mut second = vec![lo, hi];
            second.extend(rest.iter().copied());
            let (_, t_front) = friis_cascade(&front).unwrap();
            let (_, t_second) = friis_cascade(&second).unwrap();
            prop_assert!(t_second >= t_front * (1.0 - 1e-12));
        }

        #[test]
        fn transmit_power_linear(nu in 1e8f64..1e11, b in 1e3f64..1e10, k in 0.0f64..10.0, s in 0.5f64..4.0) {
            let base = transmit_power(nu, b, k).unwrap();
            for scaled in [
                transmit_power(nu * s, b, k).unwrap(),
                transmit_power(nu, b * s, k).unwrap(),
                transmit_power(nu, b, k * s).unwrap(),
            ] {
                prop_assert!((scaled - s * base).abs() <= 1e-12 * (s * base).max(1e-300));
            }
        }

        #[test]
        fn modes_monotone(t in 1e-6f64..1.0, b in 1e3f64..1e9, f in 1.0f64..3.0) {
            let m = independent_modes(t, b).unwrap();
            prop_assert!(independent_modes(t * f, b).unwrap() >= m);
            prop_assert!(independent_modes(t, b * f).unwrap() >= m);
            // floor idempotence: an integral product maps to itself
            prop_assert_eq!(independent_modes(m as f64, 1.0).unwrap(), m);
        }
    }
}
