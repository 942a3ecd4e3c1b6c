//! Flux-bias and pump-power sweeps, and coupling calibration.
//!
//! Absolute input powers cannot be tied to the line amplitudes without the
//! full attenuation chain, so a [`PowerMapping`] with a reference voltage
//! stands in for it; `v0` and `kappa` are fixed by calibration.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cme::{JtwpaModel, PumpConfig, Regime};
use crate::constants::FLUX_QUANTUM;
use crate::error::{check_positive, Error, Result};
use crate::sweep::SweepResult;
use crate::units::{dbm_to_watts, watts_to_dbm};

/// Maps input power to line amplitude, `a = sqrt(P Z_ref) / V0` for the pump.
///
/// Other tones are scaled by `sqrt(ν_p / ν)` so that `|A|²` stays a photon
/// flux relative to the pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMapping {
    /// Reference impedance, Ω.
    pub z_ref: f64,
    /// Reference voltage, V.
    pub v0: f64,
}

impl PowerMapping {
    /// Mapping under which `p_ref_w` gives a pump amplitude of exactly one.
    pub fn unit_at(p_ref_w: f64, z_ref: f64) -> Result<Self> {
        check_positive("P_ref", p_ref_w)?;
        check_positive("Z_ref", z_ref)?;
        Ok(Self {
            z_ref,
            v0: (p_ref_w * z_ref).sqrt(),
        })
    }

    pub fn pump_amplitude(&self, p_w: f64) -> f64 {
        (p_w * self.z_ref).sqrt() / self.v0
    }

    pub fn pump_amplitude_dbm(&self, p_dbm: f64) -> f64 {
        self.pump_amplitude(dbm_to_watts(p_dbm))
    }

    pub fn tone_amplitude(&self, p_w: f64, f_tone: f64, f_pump: f64) -> f64 {
        self.pump_amplitude(p_w) * (f_pump / f_tone).sqrt()
    }

    pub fn tone_power(&self, amplitude: f64, f_tone: f64, f_pump: f64) -> f64 {
        (amplitude * self.v0).powi(2) / self.z_ref * (f_tone / f_pump)
    }
}

/// Bias current to flux phase: `φ = 2π M_c I / Φ₀ + φ_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasMapping {
    /// Mutual inductance between the bias line and each loop, H.
    pub mutual_coupling: f64,
    /// Trapped-flux phase offset, rad.
    pub phi_offset: f64,
}

impl BiasMapping {
    /// Flux phase produced by the bias current alone.
    pub fn bias_phase(&self, i_dc: f64) -> f64 {
        2.0 * PI * self.mutual_coupling * i_dc / FLUX_QUANTUM
    }

    pub fn total_phase(&self, i_dc: f64) -> f64 {
        self.bias_phase(i_dc) + self.phi_offset
    }

    pub fn current_for_bias_phase(&self, phase: f64) -> f64 {
        phase * FLUX_QUANTUM / (2.0 * PI * self.mutual_coupling)
    }
}

/// Signal tone injected at the line input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalTone {
    pub frequency: f64,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasSweep {
    pub result: SweepResult,
    /// Bias currents where `c3` vanishes, A, in ascending order.
    pub minima: Vec<f64>,
    /// The minimum closest to zero bias.
    pub primary_minimum: Option<f64>,
    /// Range of the floored idler curve, dB.
    pub modulation_depth_db: f64,
    pub failed_points: usize,
}

/// Floor that limits the modulation of `raw_dbm` to `depth_db`.
pub fn floor_for_depth(raw_dbm: &[f64], depth_db: f64) -> Option<f64> {
    raw_dbm
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .reduce(f64::max)
        .map(|top| top - depth_db)
}

/// Bisection root of `f` on `[a, b]`, assuming a sign change.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Idler output power against DC bias current.
///
/// Each grid point runs the coupled-mode equations at the flux phase set by
/// the bias; the idler power is floored at `floor_dbm`. Points that fail are
/// recorded in the `status` column and the sweep continues.
pub fn bias_sweep_idler(
    model: &JtwpaModel,
    pump: &PumpConfig,
    signal: SignalTone,
    bias_grid: &[f64],
    bias: &BiasMapping,
    power: &PowerMapping,
    floor_dbm: f64,
) -> Result<BiasSweep> {
    if bias_grid.is_empty() || bias_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::Domain {
            name: "bias grid",
            value: bias_grid.len() as f64,
            reason: "must be non-empty and finite",
        });
    }
    check_positive("mutual_coupling", bias.mutual_coupling)?;
    let f_idler = pump.f_pump - signal.frequency;

    let points: Vec<(f64, f64, String)> = bias_grid
        .par_iter()
        .map(|&i_dc| {
            let phi = bias.total_phase(i_dc);
            match model.propagate(&pump.with_phi_dc(phi), signal.frequency, signal.amplitude) {
                Ok(prof) => {
                    let a_i = prof.output()[2].norm();
                    let p = watts_to_dbm(power.tone_power(a_i, f_idler, pump.f_pump));
                    let status = if prof.step_check_passed() {
                        "ok"
                    } else {
                        "step-check"
                    };
                    (phi, p, status.to_string())
                }
                Err(e) => (phi, f64::NAN, format!("failed: {e}")),
            }
        })
        .collect();
    let failed = points.iter().filter(|p| p.2.starts_with("failed")).count();
    let phases: Vec<f64> = points.iter().map(|p| p.0).collect();
    let raw: Vec<f64> = points.iter().map(|p| p.1).collect();
    let status: Vec<String> = points.into_iter().map(|p| p.2).collect();
    let floored: Vec<f64> = raw
        .iter()
        .map(|&r| if r.is_nan() { r } else { r.max(floor_dbm) })
        .collect();
    let at_floor: Vec<i64> = raw
        .iter()
        .map(|&r| i64::from(!r.is_nan() && r <= floor_dbm))
        .collect();
    let valid: Vec<f64> = floored.iter().copied().filter(|v| !v.is_nan()).collect();
    let depth = match (
        valid.iter().copied().reduce(f64::max),
        valid.iter().copied().reduce(f64::min),
    ) {
        (Some(hi), Some(lo)) => hi - lo,
        _ => f64::NAN,
    };

    let c3 = |i: f64| {
        model
            .cell
            .mixing_coefficients(bias.total_phase(i))
            .map(|m| m.c3)
            .unwrap_or(f64::NAN)
    };
    let mut minima = Vec::new();
    for w in bias_grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (c3(a), c3(b));
        if fa == 0.0 {
            minima.push(a);
        } else if fa * fb < 0.0 {
            minima.push(bisect(c3, a, b));
        }
    }
    if let Some(&last) = bias_grid.last() {
        if c3(last) == 0.0 {
            minima.push(last);
        }
    }
    minima.sort_by(|a, b| a.total_cmp(b));
    minima.dedup();
    let primary_minimum = minima
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut result = SweepResult::new();
    result.push_floats("bias_A", bias_grid.to_vec())?;
    result.push_floats("phi_dc_rad", phases)?;
    result.push_floats("idler_dBm", floored)?;
    result.push_floats("idler_raw_dBm", raw)?;
    result.push_ints("at_floor", at_floor)?;
    result.push_text("status", status)?;
    result
        .set_meta_float("pump_frequency_Hz", pump.f_pump)
        .set_meta_float("signal_frequency_Hz", signal.frequency)
        .set_meta_float("idler_frequency_Hz", f_idler)
        .set_meta_float("pump_amplitude", pump.a_pump)
        .set_meta_float("floor_dBm", floor_dbm)
        .set_meta_float("modulation_depth_dB", depth);
    if let Some(m) = primary_minimum {
        result.set_meta_float("minimum_bias_A", m);
    }

    Ok(BiasSweep {
        result,
        minima,
        primary_minimum,
        modulation_depth_db: depth,
        failed_points: failed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSweep {
    pub result: SweepResult,
    /// Gain per grid point; `None` where the run failed.
    pub gains_db: Vec<Option<f64>>,
    pub failed_points: usize,
}

/// Pump-on/pump-off signal gain against input pump power.
///
/// A grid value of `-inf` dBm means the pump is off.
pub fn gain_vs_pump_power(
    model: &JtwpaModel,
    pump: &PumpConfig,
    signal: SignalTone,
    powers_dbm: &[f64],
    power: &PowerMapping,
) -> Result<GainSweep> {
    if powers_dbm.is_empty() {
        return Err(Error::Domain {
            name: "power grid",
            value: 0.0,
            reason: "must be non-empty",
        });
    }
    let amps: Vec<f64> = powers_dbm
        .iter()
        .map(|&p| power.pump_amplitude_dbm(p))
        .collect();
    let runs: Vec<Result<f64>> = amps
        .par_iter()
        .map(|&a| {
            model.pump_on_off_gain(&pump.with_amplitude(a), signal.frequency, signal.amplitude)
        })
        .collect();
    let failed = runs.iter().filter(|r| r.is_err()).count();
    let status: Vec<String> = runs
        .iter()
        .map(|r| match r {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("failed: {e}"),
        })
        .collect();
    let gains: Vec<Option<f64>> = runs.into_iter().map(|r| r.ok()).collect();
    let mut result = SweepResult::new();
    result.push_floats("pump_power_dBm", powers_dbm.to_vec())?;
    result.push_floats("pump_amplitude", amps)?;
    result.push_floats(
        "gain_dB",
        gains.iter().map(|g| g.unwrap_or(f64::NAN)).collect(),
    )?;
    result.push_text(
        "regime",
        vec![pump.regime.as_str().to_string(); powers_dbm.len()],
    )?;
    result.push_text("status", status)?;
    Ok(GainSweep {
        result,
        gains_db: gains,
        failed_points: failed,
    })
}

/// Coupling scale `κ` at which the pump-on/pump-off gain equals `target_db`.
///
/// The gain grows monotonically with `κ`; the root is bracketed by doubling
/// and refined by bisection. Runs that fail (pump depletion, divergence)
/// count as overshooting.
pub fn calibrate_coupling(
    model: &JtwpaModel,
    pump: &PumpConfig,
    signal: SignalTone,
    target_db: f64,
) -> Result<f64> {
    if !target_db.is_finite() || target_db < 0.0 {
        return Err(Error::Infeasible(format!(
            "target gain {target_db} dB is not reachable by a pump-on/pump-off measurement"
        )));
    }
    if target_db == 0.0 {
        return Ok(0.0);
    }
    let gain = |kappa: f64| {
        model
            .with_kappa(kappa)
            .pump_on_off_gain(pump, signal.frequency, signal.amplitude)
    };
    let mut best = 0.0f64;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut bracketed = false;
    for _ in 0..64 {
        match gain(hi) {
            Ok(g) if g < target_db => {
                best = best.max(g);
                lo = hi;
                hi *= 2.0;
            }
            Ok(_) | Err(_) => {
                bracketed = true;
                break;
            }
        }
    }
    if !bracketed {
        return Err(Error::Infeasible(format!(
            "gain saturates at {best:.3} dB below the {target_db} dB target"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match gain(mid) {
            Ok(g) => {
                best = best.max(g);
                if (g - target_db).abs() < 1e-6 {
                    return Ok(mid);
                }
                if g < target_db {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Err(_) => hi = mid,
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    match gain(lo) {
        Ok(g) if (g - target_db).abs() < 0.05 => Ok(lo),
        _ => Err(Error::Infeasible(format!(
            "maximum achievable gain before pump depletion is {best:.3} dB, below the {target_db} dB target"
        ))),
    }
}

/// Default degenerate-launch phase: the amplified quadrature for a real pump.
pub const DEGENERATE_SIGNAL_PHASE: f64 = PI / 4.0;

/// Signal tone for a regime: degenerate runs launch along the amplified axis.
pub fn signal_for_regime(regime: Regime, frequency: f64, magnitude: f64) -> SignalTone {
    let phase = match regime {
        Regime::Degenerate => DEGENERATE_SIGNAL_PHASE,
        Regime::NonDegenerate => 0.0,
    };
    SignalTone {
        frequency,
        amplitude: Complex64::from_polar(magnitude, phase),
    }
}
