//! Closed-form error probabilities of classical and quantum illumination.
//!
//! Both bounds are applied per mode and the exponent is multiplied by the
//! number `M` of independent signal-idler pairs. By default no `1/2`
//! prefactor is applied; [`Prefactor::Half`] is available for comparison
//! with the Chernoff-bound literature.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite_nonneg, check_positive, check_unit_interval, Error, Result};

/// Parameters of one illumination scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QiScenario {
    /// Target reflectance.
    pub eta: f64,
    /// Mean signal photons per mode.
    pub n_s: f64,
    /// Mean background photons per mode.
    pub n_b: f64,
    /// Prior probability that the target is absent (weight of `P_F`).
    pub lambda_prior: f64,
    /// Number of independent signal-idler mode pairs.
    pub modes: u64,
}

impl QiScenario {
    pub fn new(eta: f64, n_s: f64, n_b: f64, lambda_prior: f64, modes: u64) -> Result<Self> {
        let s = Self {
            eta,
            n_s,
            n_b,
            lambda_prior,
            modes,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("eta", self.eta)?;
        check_finite_nonneg("N_s", self.n_s)?;
        check_finite_nonneg("N_B", self.n_b)?;
        check_unit_interval("lambda", self.lambda_prior)?;
        if self.modes == 0 {
            return Err(Error::Domain {
                name: "M",
                value: 0.0,
                reason: "at least one mode is required",
            });
        }
        Ok(())
    }

    pub fn with_modes(self, modes: u64) -> Self {
        Self { modes, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Prefactor {
    #[default]
    Unity,
    Half,
}

impl Prefactor {
    pub fn value(self) -> f64 {
        match self {
            Prefactor::Unity => 1.0,
            Prefactor::Half => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Classical,
    Quantum,
}

/// Error probabilities for one decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub p_false: f64,
    pub p_miss: f64,
    pub p_error: f64,
    /// `-ln(P_e / prefactor)`; kept separately so huge `M` does not underflow.
    pub exponent: f64,
    pub modes: u64,
    /// Set when a probability had to be clamped into `[0, 1]`.
    pub clamped: bool,
}

impl ErrorReport {
    /// Report for a symmetric closed-form bound, where `P_F = P_M = P_e`.
    fn from_exponent(exponent: f64, prefactor: Prefactor, modes: u64) -> Self {
        let raw = prefactor.value() * (-exponent).exp();
        let (p, clamped) = clamp_probability(raw);
        Self {
            p_false: p,
            p_miss: p,
            p_error: p,
            exponent,
            modes,
            clamped,
        }
    }
}

fn clamp_probability(p: f64) -> (f64, bool) {
    if p.is_nan() {
        return (1.0, true);
    }
    let c = p.clamp(0.0, 1.0);
    (c, c != p)
}

/// `λ P_F + (1 − λ) P_M`.
pub fn p_error_convex(lambda_prior: f64, p_false: f64, p_miss: f64) -> Result<f64> {
    check_unit_interval("lambda", lambda_prior)?;
    check_unit_interval("P_F", p_false)?;
    check_unit_interval("P_M", p_miss)?;
    Ok(lambda_prior * p_false + (1.0 - lambda_prior) * p_miss)
}

/// `η N_s (√(N_B + 1) − √N_B)²`, the classical exponent of one mode.
pub fn classical_exponent_per_mode(eta: f64, n_s: f64, n_b: f64) -> f64 {
    // (√(N+1) − √N) = 1 / (√(N+1) + √N) avoids cancellation at large N_B.
    let gap = 1.0 / ((n_b + 1.0).sqrt() + n_b.sqrt());
    eta * n_s * gap * gap
}

/// `η N_s / N_B`, the TMSV exponent of one mode.
pub fn tmsv_exponent_per_mode(eta: f64, n_s: f64, n_b: f64) -> Result<f64> {
    if !(n_b > 0.0) {
        return Err(Error::Domain {
            name: "N_B",
            value: n_b,
            reason:
                "the TMSV bound needs N_B > 0; use the classical bound, which is exact at N_B = 0",
        });
    }
    Ok(eta * n_s / n_b)
}

pub fn p_error_classical(scn: &QiScenario) -> Result<f64> {
    Ok(classical_report(scn, Prefactor::Unity)?.p_error)
}

pub fn p_error_tmsv(scn: &QiScenario) -> Result<f64> {
    Ok(tmsv_report(scn, Prefactor::Unity)?.p_error)
}

pub fn classical_report(scn: &QiScenario, prefactor: Prefactor) -> Result<ErrorReport> {
    scn.validate()?;
    let e = scn.modes as f64 * classical_exponent_per_mode(scn.eta, scn.n_s, scn.n_b);
    Ok(ErrorReport::from_exponent(e, prefactor, scn.modes))
}

pub fn tmsv_report(scn: &QiScenario, prefactor: Prefactor) -> Result<ErrorReport> {
    scn.validate()?;
    let e = scn.modes as f64 * tmsv_exponent_per_mode(scn.eta, scn.n_s, scn.n_b)?;
    Ok(ErrorReport::from_exponent(e, prefactor, scn.modes))
}

pub fn report(scn: &QiScenario, source: Source, prefactor: Prefactor) -> Result<ErrorReport> {
    match source {
        Source::Classical => classical_report(scn, prefactor),
        Source::Quantum => tmsv_report(scn, prefactor),
    }
}

/// Ratio of the TMSV exponent to the classical one,
/// `(√(N_B + 1) + √N_B)² / N_B`.
pub fn advantage_exponent_ratio(n_b: f64) -> Result<f64> {
    check_positive("N_B", n_b)?;
    let sum = (n_b + 1.0).sqrt() + n_b.sqrt();
    Ok(sum * sum / n_b)
}

pub fn advantage_db(n_b: f64) -> Result<f64> {
    Ok(10.0 * advantage_exponent_ratio(n_b)?.log10())
}

/// Smallest `M` with `P_e(M) <= target_pe`. `scn.modes` is ignored.
pub fn required_modes(
    scn: &QiScenario,
    target_pe: f64,
    source: Source,
    prefactor: Prefactor,
) -> Result<u64> {
    let base = scn.with_modes(1);
    base.validate()?;
    if !(target_pe > 0.0 && target_pe <= 1.0) {
        return Err(Error::Domain {
            name: "target_pe",
            value: target_pe,
            reason: "must lie in (0, 1]",
        });
    }
    let per_mode = match source {
        Source::Classical => classical_exponent_per_mode(scn.eta, scn.n_s, scn.n_b),
        Source::Quantum => tmsv_exponent_per_mode(scn.eta, scn.n_s, scn.n_b)?,
    };
    if !(per_mode > 0.0) {
        return Err(Error::Infeasible(format!(
            "per-mode exponent is zero (eta * N_s = {}); no mode count reaches P_e = {target_pe}",
            scn.eta * scn.n_s
        )));
    }
    let pe = |m: u64| prefactor.value() * (-(m as f64) * per_mode).exp();
    let needed = (prefactor.value() / target_pe).ln() / per_mode;
    let mut m = if needed <= 1.0 {
        1
    } else {
        needed.ceil() as u64
    };
    // Correct for rounding in the closed-form inversion.
    while m > 1 && pe(m - 1) <= target_pe {
        m -= 1;
    }
    while pe(m) > target_pe {
        m += 1;
    }
    Ok(m)
}
