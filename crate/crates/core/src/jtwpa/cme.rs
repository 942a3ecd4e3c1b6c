//! Three-wave-mixing coupled-mode equations along the rf-SQUID line.
//!
//! Amplitudes are normalised to photon flux, so the lossless equations
//!
//! ```text
//! dA_s/dn = i g A_p A_i* e^{i Δk n}
//! dA_i/dn = i g A_p A_s* e^{i Δk n}
//! dA_p/dn = i g A_s A_i  e^{-i Δk n}
//! ```
//!
//! conserve `|A_s|² − |A_i|²` and `|A_s|² + |A_p|²`. Tone powers are
//! `ν |A|²` in these units, which gives the Manley–Rowe relations in their
//! usual frequency-weighted form. The position `n` counts cells and the
//! coupling is `g = κ c3(φ_dc) k_p / 4`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cell::SquidCellParams;
use crate::error::{check_finite_nonneg, check_positive, Error, Result};

/// Largest accepted gain change when the integration step is halved.
pub const STEP_CHECK_TOL_DB: f64 = 0.01;
/// Integration aborts once the pump power falls below this fraction of its input.
pub const DEPLETION_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `ν_p = 2 ν_s`: signal and idler share one mode.
    Degenerate,
    NonDegenerate,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Degenerate => "degenerate",
            Regime::NonDegenerate => "non-degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// Pump frequency, Hz.
    pub f_pump: f64,
    /// Pump amplitude at the line input (photon-flux units).
    pub a_pump: f64,
    /// DC flux phase of each cell, rad, including any trapped-flux offset.
    pub phi_dc: f64,
    pub regime: Regime,
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("f_pump", self.f_pump)?;
        check_finite_nonneg("a_pump", self.a_pump)?;
        if !self.phi_dc.is_finite() {
            return Err(Error::Domain {
                name: "phi_dc",
                value: self.phi_dc,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    pub fn with_amplitude(self, a_pump: f64) -> Self {
        Self { a_pump, ..self }
    }

    pub fn with_phi_dc(self, phi_dc: f64) -> Self {
        Self { phi_dc, ..self }
    }
}

/// Line model used by the coupled-mode integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JtwpaModel {
    pub cell: SquidCellParams,
    /// Free coupling scale, fixed by calibration against a measured gain.
    pub kappa: f64,
    /// Overrides the dispersion-derived `Δk` (rad per cell) when set.
    pub phase_mismatch: Option<f64>,
    /// Adds pump-induced self- and cross-phase modulation from `c4`.
    pub kerr: bool,
    /// Re-run with half the step and flag runs whose gain moves by more than
    /// [`STEP_CHECK_TOL_DB`].
    pub step_check: bool,
}

impl JtwpaModel {
    pub fn new(cell: SquidCellParams, kappa: f64) -> Result<Self> {
        let cell = cell.require_non_hysteretic()?;
        check_finite_nonneg("kappa", kappa)?;
        Ok(Self {
            cell,
            kappa,
            phase_mismatch: None,
            kerr: false,
            step_check: true,
        })
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }

    pub fn phase_matched(self) -> Self {
        Self {
            phase_mismatch: Some(0.0),
            ..self
        }
    }

    /// Three-wave coupling `g` per cell at the pump's operating point.
    pub fn coupling(&self, pump: &PumpConfig) -> Result<f64> {
        let k_p = self.cell.dispersion(pump.phi_dc, pump.f_pump)?;
        let c3 = self.cell.mixing_coefficients(pump.phi_dc)?.c3;
        Ok(self.kappa * c3 * k_p / 4.0)
    }

    fn kerr_coupling(&self, pump: &PumpConfig) -> Result<f64> {
        if !self.kerr {
            return Ok(0.0);
        }
        let k_p = self.cell.dispersion(pump.phi_dc, pump.f_pump)?;
        let c4 = self.cell.mixing_coefficients(pump.phi_dc)?.c4;
        Ok(self.kappa * c4 * k_p / 4.0)
    }

    /// Signal, idler frequencies and `Δk` for a run, after regime checks.
    fn tones(&self, pump: &PumpConfig, f_signal: f64) -> Result<(f64, f64, f64)> {
        pump.validate()?;
        check_positive("f_signal", f_signal)?;
        let f_idler = pump.f_pump - f_signal;
        let half = pump.f_pump / 2.0;
        let is_degenerate = (f_signal - half).abs() <= 1e-12 * pump.f_pump;
        match pump.regime {
            Regime::Degenerate if !is_degenerate => {
                return Err(Error::Regime(format!(
                    "degenerate pumping needs f_signal = f_pump / 2 = {half:.6e} Hz, got {f_signal:.6e} Hz"
                )))
            }
            Regime::NonDegenerate if is_degenerate => {
                return Err(Error::Regime(
                    "f_signal = f_pump / 2 is the degenerate point; select the degenerate regime".into(),
                ))
            }
            _ => {}
        }
        if !(f_idler > 0.0) {
            return Err(Error::Domain {
                name: "f_signal",
                value: f_signal,
                reason: "must be below the pump frequency so the idler is positive",
            });
        }
        let k_p = self.cell.dispersion(pump.phi_dc, pump.f_pump)?;
        let k_s = self.cell.dispersion(pump.phi_dc, f_signal)?;
        let k_i = self.cell.dispersion(pump.phi_dc, f_idler)?;
        let dk = self.phase_mismatch.unwrap_or(k_p - k_s - k_i);
        Ok((f_signal, f_idler, dk))
    }

    /// Integrates the coupled-mode equations over the whole line, one
    /// classical fourth-order Runge–Kutta step per cell.
    pub fn propagate(
        &self,
        pump: &PumpConfig,
        f_signal: f64,
        a_signal_in: Complex64,
    ) -> Result<FieldProfile> {
        if !(a_signal_in.re.is_finite() && a_signal_in.im.is_finite()) {
            return Err(Error::Domain {
                name: "a_signal_in",
                value: a_signal_in.norm(),
                reason: "must be finite",
            });
        }
        let (f_s, f_i, dk) = self.tones(pump, f_signal)?;
        let rates = Rates {
            g: self.coupling(pump)?,
            g4: self.kerr_coupling(pump)?,
            dk,
            degenerate: pump.regime == Regime::Degenerate,
        };
        let input = [
            Complex64::new(pump.a_pump, 0.0),
            a_signal_in,
            if rates.degenerate {
                a_signal_in
            } else {
                Complex64::new(0.0, 0.0)
            },
        ];
        let run = integrate(&rates, input, self.cell.n_cells, 1)?;
        let amplitudes = run.fields;

        let mut step_check_db = None;
        if self.step_check && a_signal_in.norm_sqr() > 0.0 {
            let fine = integrate(&rates, input, self.cell.n_cells, 2)?;
            let coarse = amplitudes[self.cell.n_cells][1].norm_sqr();
            let refined = fine.fields[self.cell.n_cells][1].norm_sqr();
            step_check_db = Some(10.0 * (coarse / refined).log10());
        }

        Ok(FieldProfile {
            amplitudes,
            frequencies: (pump.f_pump, f_s, f_i),
            regime: pump.regime,
            phase_mismatch: dk,
            coupling: rates.g,
            pump_flux_change: run.pump_flux_change,
            weak_pump: pump.a_pump > 0.0 && a_signal_in.norm() > 0.1 * pump.a_pump,
            step_check_db,
        })
    }

    /// `10 log10(|A_s,out(pump on)|² / |A_s,out(pump off)|²)`.
    pub fn pump_on_off_gain(
        &self,
        pump: &PumpConfig,
        f_signal: f64,
        a_signal_in: Complex64,
    ) -> Result<f64> {
        if a_signal_in.norm_sqr() == 0.0 {
            return Err(Error::Domain {
                name: "a_signal_in",
                value: 0.0,
                reason: "gain needs a non-zero signal",
            });
        }
        let on = self.propagate(pump, f_signal, a_signal_in)?;
        let off = self.propagate(&pump.with_amplitude(0.0), f_signal, a_signal_in)?;
        let p_on = on.output()[1].norm_sqr();
        let p_off = off.output()[1].norm_sqr();
        Ok(10.0 * (p_on / p_off).log10())
    }

    /// Phase-sensitive gains of a degenerate amplifier for a signal launched
    /// at phase `theta` and at `theta + π/2`, in dB. With a real pump the
    /// principal axes sit at `theta = π/4` (amplified) and `-π/4`.
    pub fn dpa_quadrature_gains(&self, pump: &PumpConfig, theta: f64) -> Result<(f64, f64)> {
        if pump.regime != Regime::Degenerate {
            return Err(Error::Regime(
                "quadrature gains are defined for the degenerate regime only".into(),
            ));
        }
        let f_s = pump.f_pump / 2.0;
        let scale = 1e-6 * pump.a_pump.max(1.0);
        let g = |phase: f64| self.pump_on_off_gain(pump, f_s, Complex64::from_polar(scale, phase));
        Ok((g(theta)?, g(theta + std::f64::consts::FRAC_PI_2)?))
    }
}

#[derive(Debug, Clone, Copy)]
struct Rates {
    g: f64,
    g4: f64,
    dk: f64,
    degenerate: bool,
}

type Fields = [Complex64; 3];

/// Integration state. The pump is carried as its deviation `d` from the
/// launch amplitude `p0` so that small conversions are not lost to rounding
/// against `|p0|²`. With Kerr terms all fields are taken in the frame that
/// rotates with the undepleted-pump phase modulation.
#[derive(Debug, Clone, Copy)]
struct Frame {
    p0: f64,
    /// SPM phase rate of the pump and XPM rate of signal and idler.
    theta_p: f64,
    theta_s: f64,
    dk: f64,
}

impl Frame {
    fn new(r: &Rates, p0: f64) -> Self {
        let pin = p0 * p0;
        Self {
            p0,
            theta_p: r.g4 * pin,
            theta_s: 2.0 * r.g4 * pin,
            dk: r.dk - 3.0 * r.g4 * pin,
        }
    }

    /// `|p0 + d|² − p0²`.
    fn flux_change(&self, d: Complex64) -> f64 {
        2.0 * self.p0 * d.re + d.norm_sqr()
    }

    fn lab(&self, n: f64, y: &Fields) -> Fields {
        let rp = Complex64::from_polar(1.0, self.theta_p * n);
        let rs = Complex64::from_polar(1.0, self.theta_s * n);
        [(y[0] + self.p0) * rp, y[1] * rs, y[2] * rs]
    }
}

fn derivative(r: &Rates, f: &Frame, n: f64, y: &Fields) -> Fields {
    let i = Complex64::i();
    let phase = Complex64::from_polar(1.0, f.dk * n);
    let [d, s, id] = *y;
    let p = d + f.p0;
    let (mut dp, mut ds, mut di);
    if r.degenerate {
        dp = i * (0.5 * r.g) * s * s * phase.conj();
        ds = i * r.g * p * s.conj() * phase;
        di = ds;
    } else {
        dp = i * r.g * s * id * phase.conj();
        ds = i * r.g * p * id.conj() * phase;
        di = i * r.g * p * s.conj() * phase;
    }
    if r.g4 != 0.0 {
        let excess = f.flux_change(d);
        dp += i * r.g4 * excess * p;
        ds += i * (2.0 * r.g4) * excess * s;
        di += i * (2.0 * r.g4) * excess * id;
    }
    [dp, ds, di]
}

fn axpy(y: &Fields, h: f64, k: &Fields) -> Fields {
    [y[0] + k[0] * h, y[1] + k[1] * h, y[2] + k[2] * h]
}

struct Integrated {
    /// Lab-frame fields at every cell boundary `0..=n_cells`.
    fields: Vec<Fields>,
    pump_flux_change: f64,
}

fn integrate(r: &Rates, input: Fields, n_cells: usize, substeps: usize) -> Result<Integrated> {
    let frame = Frame::new(r, input[0].re);
    let h = 1.0 / substeps as f64;
    let pump_in = input[0].norm_sqr();
    let mut y = [Complex64::new(0.0, input[0].im), input[1], input[2]];
    let mut fields = Vec::with_capacity(n_cells + 1);
    fields.push(input);
    for cell in 0..n_cells {
        for sub in 0..substeps {
            let n = cell as f64 + sub as f64 * h;
            let k1 = derivative(r, &frame, n, &y);
            let k2 = derivative(r, &frame, n + 0.5 * h, &axpy(&y, 0.5 * h, &k1));
            let k3 = derivative(r, &frame, n + 0.5 * h, &axpy(&y, 0.5 * h, &k2));
            let k4 = derivative(r, &frame, n + h, &axpy(&y, h, &k3));
            for j in 0..3 {
                y[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
            }
        }
        if y.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::Diverged { last_valid: cell });
        }
        if pump_in + frame.flux_change(y[0]) < DEPLETION_LIMIT * pump_in {
            return Err(Error::PumpDepleted { cell: cell + 1 });
        }
        fields.push(frame.lab((cell + 1) as f64, &y));
    }
    Ok(Integrated {
        fields,
        pump_flux_change: frame.flux_change(y[0]),
    })
}

/// Pump, signal and idler amplitudes along the line.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile {
    /// `[pump, signal, idler]` at cell boundaries `0..=n_cells`.
    pub amplitudes: Vec<[Complex64; 3]>,
    /// `(ν_p, ν_s, ν_i)`, Hz, with `ν_i = ν_p − ν_s`.
    pub frequencies: (f64, f64, f64),
    pub regime: Regime,
    /// `Δk` used in the run, rad per cell.
    pub phase_mismatch: f64,
    pub coupling: f64,
    /// `|A_p,out|² − |A_p,in|²`, tracked during integration without
    /// cancellation against the input pump.
    pub pump_flux_change: f64,
    /// The signal was not small compared with the pump.
    pub weak_pump: bool,
    /// Signal gain difference between one and two steps per cell, dB.
    pub step_check_db: Option<f64>,
}

impl FieldProfile {
    pub fn positions(&self) -> std::ops::Range<usize> {
        0..self.amplitudes.len()
    }

    pub fn input(&self) -> &[Complex64; 3] {
        &self.amplitudes[0]
    }

    pub fn output(&self) -> &[Complex64; 3] {
        self.amplitudes
            .last()
            .expect("profile holds the input at least")
    }

    pub fn step_check_passed(&self) -> bool {
        self.step_check_db
            .is_none_or(|d| d.abs() < STEP_CHECK_TOL_DB)
    }

    /// Output tone powers `ν |A|²` in the model's flux units.
    pub fn output_powers(&self) -> [f64; 3] {
        let (fp, fs, fi) = self.frequencies;
        let out = self.output();
        [
            fp * out[0].norm_sqr(),
            fs * out[1].norm_sqr(),
            fi * out[2].norm_sqr(),
        ]
    }

    /// Fraction of the input pump power converted along the line.
    pub fn pump_depletion(&self) -> f64 {
        let pin = self.input()[0].norm_sqr();
        if pin == 0.0 {
            return 0.0;
        }
        -self.pump_flux_change / pin
    }

    /// Largest relative mismatch between the three Manley–Rowe quantities
    /// `ΔP_s/ν_s`, `ΔP_i/ν_i` and `−ΔP_p/ν_p` (or `−2ΔP_p/ν_p` for the single
    /// degenerate mode, where each pump photon yields two signal photons).
    pub fn manley_rowe_residual(&self) -> f64 {
        let (a, b) = (self.input(), self.output());
        // With P = ν|A|², ΔP/ν is the change in |A|².
        let flux_change = |k: usize| b[k].norm_sqr() - a[k].norm_sqr();
        let ds = flux_change(1);
        let dp = -self.pump_flux_change;
        let quantities = match self.regime {
            Regime::NonDegenerate => vec![ds, flux_change(2), dp],
            Regime::Degenerate => vec![ds, 2.0 * dp],
        };
        let scale = quantities.iter().fold(0.0f64, |m, q| m.max(q.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (i, x) in quantities.iter().enumerate() {
            for y in &quantities[i + 1..] {
                worst = worst.max((x - y).abs());
            }
        }
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn model() -> JtwpaModel {
        JtwpaModel::new(SquidCellParams::reference_device(), 1.0).unwrap()
    }

    fn nd_pump(a: f64) -> PumpConfig {
        PumpConfig {
            f_pump: 13.4e9,
            a_pump: a,
            phi_dc: PI / 2.0,
            regime: Regime::NonDegenerate,
        }
    }

    #[test]
    fn no_pump_no_mixing() {
        let m = model();
        let a_in = Complex64::new(1e-3, 2e-4);
        let prof = m.propagate(&nd_pump(0.0), 9e9, a_in).unwrap();
        assert_eq!(prof.output()[1], a_in);
        assert_eq!(prof.output()[2], Complex64::new(0.0, 0.0));
        assert_eq!(m.pump_on_off_gain(&nd_pump(0.0), 9e9, a_in).unwrap(), 0.0);
        assert_eq!(prof.amplitudes.len(), 991);
    }

    #[test]
    fn idler_frequency_is_exact_difference() {
        let m = model();
        let pump = PumpConfig {
            f_pump: 6.75e9,
            ..nd_pump(0.5)
        };
        let prof = m
            .propagate(&pump, 3.3e9, Complex64::new(1e-3, 0.0))
            .unwrap();
        assert_eq!(prof.frequencies.2, 6.75e9 - 3.3e9);
        assert!((prof.frequencies.2 - 3.45e9).abs() < 1e-3);
    }

    #[test]
    fn regime_mismatch_rejected() {
        let m = model();
        let deg = PumpConfig {
            f_pump: 18e9,
            regime: Regime::Degenerate,
            ..nd_pump(0.5)
        };
        assert!(matches!(
            m.propagate(&deg, 9.1e9, Complex64::new(1e-3, 0.0)),
            Err(Error::Regime(_))
        ));
        let nd_at_half = PumpConfig {
            f_pump: 18e9,
            ..nd_pump(0.5)
        };
        assert!(matches!(
            m.propagate(&nd_at_half, 9e9, Complex64::new(1e-3, 0.0)),
            Err(Error::Regime(_))
        ));
        assert!(matches!(
            m.dpa_quadrature_gains(&nd_pump(0.5), 0.0),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn out_of_band_rejected() {
        let m = model();
        let pump = PumpConfig {
            f_pump: 600e9,
            ..nd_pump(0.5)
        };
        assert!(matches!(
            m.propagate(&pump, 9e9, Complex64::new(1e-3, 0.0)),
            Err(Error::Evanescent { .. })
        ));
        assert!(m
            .propagate(&nd_pump(0.5), 14e9, Complex64::new(1e-3, 0.0))
            .is_err());
    }

    #[test]
    fn depletion_guard_trips() {
        let m = model().with_kappa(3.0);
        let err = m
            .propagate(&nd_pump(1.0), 9e9, Complex64::new(0.05, 0.0))
            .unwrap_err();
        assert!(matches!(err, Error::PumpDepleted { .. }), "{err:?}");
    }

    #[test]
    fn weak_pump_flagged() {
        let m = model();
        let prof = m
            .propagate(&nd_pump(0.01), 9e9, Complex64::new(0.1, 0.0))
            .unwrap();
        assert!(prof.weak_pump);
    }

    #[test]
    fn quadrature_gains_swap_and_cancel() {
        let m = model().phase_matched();
        let pump = PumpConfig {
            f_pump: 18e9,
            a_pump: 0.5,
            phi_dc: PI / 2.0,
            regime: Regime::Degenerate,
        };
        let (amp, deamp) = m.dpa_quadrature_gains(&pump, PI / 4.0).unwrap();
        assert!(amp > 3.0 && deamp < -3.0);
        assert!((amp + deamp).abs() < 0.1, "{amp} {deamp}");
        let (a2, d2) = m.dpa_quadrature_gains(&pump, PI / 4.0 + PI / 2.0).unwrap();
        assert!((a2 - deamp).abs() < 1e-9 && (d2 - amp).abs() < 1e-9);
        let off = m
            .dpa_quadrature_gains(&pump.with_amplitude(0.0), 0.3)
            .unwrap();
        assert_eq!(off, (0.0, 0.0));
    }

    #[test]
    fn degenerate_run_conserves_flux() {
        let m = model();
        let pump = PumpConfig {
            f_pump: 18e9,
            a_pump: 0.8,
            phi_dc: 1.2,
            regime: Regime::Degenerate,
        };
        let prof = m
            .propagate(&pump, 9e9, Complex64::from_polar(0.05, 0.7))
            .unwrap();
        assert!(prof.manley_rowe_residual() < 1e-6);
        assert!(prof.pump_depletion() > 0.0);
    }

    #[test]
    fn kerr_terms_keep_flux_balance() {
        let mut m = model();
        m.kerr = true;
        let pump = PumpConfig {
            phi_dc: 0.6,
            ..nd_pump(1.0)
        };
        let prof = m.propagate(&pump, 9e9, Complex64::new(0.02, 0.0)).unwrap();
        assert!(prof.manley_rowe_residual() < 1e-6);
    }
}
