//! Run configuration.
//!
//! A TOML document with optional sections; every missing key takes the
//! default shown in `RunConfig::default`. Physical keys carry their SI unit
//! as a suffix (`_Hz`, `_F`, `_H`, `_A`, `_dBm`, ...).

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub scenario: ScenarioSection,
    pub device: DeviceSection,
    pub calibration: CalibrationSection,
    pub bias_sweep: BiasSweepSection,
    pub gain_sweep: GainSweepSection,
    pub link: LinkSection,
    pub montecarlo: MonteCarloSection,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefactorChoice {
    Unity,
    Half,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub eta: f64,
    pub n_s: f64,
    pub n_b: f64,
    pub lambda: f64,
    pub modes: u64,
    pub prefactor: PrefactorChoice,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            eta: 0.01,
            n_s: 0.01,
            n_b: 20.0,
            lambda: 0.5,
            modes: 1_000_000,
            prefactor: PrefactorChoice::Unity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(rename = "c_g_F")]
    pub c_g: f64,
    #[serde(rename = "l_g_H")]
    pub l_g: f64,
    #[serde(rename = "c_j_F")]
    pub c_j: f64,
    #[serde(rename = "i_c_A")]
    pub i_c: f64,
    pub n_cells: usize,
    /// Fixed coupling scale; calibrated against `calibration` when absent.
    pub kappa: Option<f64>,
    #[serde(rename = "mutual_coupling_H")]
    pub mutual_coupling: f64,
    #[serde(rename = "phi_offset_rad")]
    pub phi_offset: f64,
    pub kerr: bool,
    #[serde(rename = "z_ref_ohm")]
    pub z_ref: f64,
    /// Input pump power that maps to unit line amplitude.
    #[serde(rename = "reference_power_dBm")]
    pub reference_power_dbm: f64,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            c_g: 13e-15,
            l_g: 45e-12,
            c_j: 25.8e-15,
            i_c: 1.5e-6,
            n_cells: 990,
            kappa: None,
            mutual_coupling: 2e-12,
            phi_offset: 0.0,
            kerr: false,
            z_ref: 50.0,
            reference_power_dbm: -80.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(rename = "target_gain_dB")]
    pub target_gain_db: f64,
    #[serde(rename = "pump_frequency_Hz")]
    pub pump_frequency: f64,
    #[serde(rename = "pump_power_dBm")]
    pub pump_power_dbm: f64,
    #[serde(rename = "signal_frequency_Hz")]
    pub signal_frequency: f64,
    #[serde(rename = "signal_power_dBm")]
    pub signal_power_dbm: f64,
    #[serde(rename = "phi_dc_rad")]
    pub phi_dc: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            target_gain_db: 25.0,
            pump_frequency: 13.4e9,
            pump_power_dbm: -80.0,
            signal_frequency: 9e9,
            signal_power_dbm: -140.0,
            phi_dc: FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSweepSection {
    #[serde(rename = "pump_frequency_Hz")]
    pub pump_frequency: f64,
    #[serde(rename = "signal_frequency_Hz")]
    pub signal_frequency: f64,
    #[serde(rename = "signal_power_dBm")]
    pub signal_power_dbm: f64,
    #[serde(rename = "pump_powers_dBm")]
    pub pump_powers_dbm: Vec<f64>,
    #[serde(rename = "start_A")]
    pub start: f64,
    #[serde(rename = "stop_A")]
    pub stop: f64,
    pub points: usize,
    /// Fixed noise floor; when absent it is set so that the strongest
    /// curve spans `depth_dB`.
    #[serde(rename = "floor_dBm")]
    pub floor_dbm: Option<f64>,
    #[serde(rename = "depth_dB")]
    pub depth_db: f64,
}

impl Default for BiasSweepSection {
    fn default() -> Self {
        Self {
            pump_frequency: 6.75e9,
            signal_frequency: 3.3e9,
            signal_power_dbm: -120.0,
            pump_powers_dbm: vec![-90.0, -85.0, -80.0],
            start: -1e-3,
            stop: 1e-3,
            points: 201,
            floor_dbm: None,
            depth_db: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainSweepSection {
    #[serde(rename = "signal_frequency_Hz")]
    pub signal_frequency: f64,
    #[serde(rename = "signal_power_dBm")]
    pub signal_power_dbm: f64,
    #[serde(rename = "non_degenerate_pump_frequency_Hz")]
    pub non_degenerate_pump: f64,
    #[serde(rename = "degenerate_pump_frequency_Hz")]
    pub degenerate_pump: f64,
    #[serde(rename = "phi_dc_rad")]
    pub phi_dc: f64,
    #[serde(rename = "start_dBm")]
    pub start_dbm: f64,
    #[serde(rename = "stop_dBm")]
    pub stop_dbm: f64,
    pub points: usize,
}

impl Default for GainSweepSection {
    fn default() -> Self {
        Self {
            signal_frequency: 9e9,
            signal_power_dbm: -140.0,
            non_degenerate_pump: 13.4e9,
            degenerate_pump: 18e9,
            phi_dc: FRAC_PI_2,
            start_dbm: -110.0,
            stop_dbm: -78.0,
            points: 65,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    #[serde(rename = "gain_dB")]
    pub gain_db: f64,
    #[serde(rename = "noise_temperature_K")]
    pub noise_temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    #[serde(rename = "bandwidth_Hz")]
    pub bandwidth: f64,
    #[serde(rename = "integration_time_s")]
    pub integration_time: f64,
    #[serde(rename = "center_frequency_Hz")]
    pub center_frequency: f64,
    pub photons_per_mode: f64,
    #[serde(rename = "jpa_bandwidth_Hz")]
    pub jpa_bandwidth: f64,
    pub stages: Vec<StageSpec>,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            bandwidth: 10e9,
            integration_time: 1.0,
            center_frequency: 9e9,
            photons_per_mode: 1.0,
            jpa_bandwidth: qrad_core::link::JPA_REFERENCE_BANDWIDTH,
            stages: vec![
                StageSpec {
                    gain_db: 30.0,
                    noise_temperature: 5.0,
                },
                StageSpec {
                    gain_db: 30.0,
                    noise_temperature: 300.0,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub trials: u64,
    /// Receiver quadrature rotation.
    #[serde(rename = "phase_rad")]
    pub phase: Option<f64>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            trials: 100_000,
            phase: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default = "default_scale")]
    pub scale: Scale,
}

fn default_scale() -> Scale {
    Scale::Linear
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        grid(self.start, self.stop, self.points, self.scale)
    }
}

pub fn grid(start: f64, stop: f64, points: usize, scale: Scale) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let t = i as f64 / last;
            match scale {
                Scale::Linear => start + (stop - start) * t,
                Scale::Log => 10f64.powf(start.log10() + (stop.log10() - start.log10()) * t),
            }
        })
        .collect()
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative, got {v}")))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError {
            field: String::new(),
            message: format!("cannot parse config: {}", e.to_string().trim_end()),
        })?;
        Ok(cfg)
    }

    /// Checks the keys shared by every command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        unit_interval("scenario.eta", s.eta)?;
        non_negative("scenario.n_s", s.n_s)?;
        non_negative("scenario.n_b", s.n_b)?;
        unit_interval("scenario.lambda", s.lambda)?;
        if s.modes == 0 {
            return Err(invalid("scenario.modes", "must be at least 1"));
        }

        let d = &self.device;
        positive("device.c_g_F", d.c_g)?;
        positive("device.l_g_H", d.l_g)?;
        positive("device.c_j_F", d.c_j)?;
        positive("device.i_c_A", d.i_c)?;
        if d.n_cells == 0 {
            return Err(invalid("device.n_cells", "must be at least 1"));
        }
        if let Some(k) = d.kappa {
            non_negative("device.kappa", k)?;
        }
        positive("device.mutual_coupling_H", d.mutual_coupling)?;
        finite("device.phi_offset_rad", d.phi_offset)?;
        positive("device.z_ref_ohm", d.z_ref)?;
        finite("device.reference_power_dBm", d.reference_power_dbm)?;

        let c = &self.calibration;
        non_negative("calibration.target_gain_dB", c.target_gain_db)?;
        positive("calibration.pump_frequency_Hz", c.pump_frequency)?;
        finite("calibration.pump_power_dBm", c.pump_power_dbm)?;
        positive("calibration.signal_frequency_Hz", c.signal_frequency)?;
        finite("calibration.signal_power_dBm", c.signal_power_dbm)?;
        finite("calibration.phi_dc_rad", c.phi_dc)?;

        let b = &self.bias_sweep;
        positive("bias_sweep.pump_frequency_Hz", b.pump_frequency)?;
        positive("bias_sweep.signal_frequency_Hz", b.signal_frequency)?;
        finite("bias_sweep.signal_power_dBm", b.signal_power_dbm)?;
        if b.pump_powers_dbm.is_empty() {
            return Err(invalid("bias_sweep.pump_powers_dBm", "must not be empty"));
        }
        for p in &b.pump_powers_dbm {
            finite("bias_sweep.pump_powers_dBm", *p)?;
        }
        finite("bias_sweep.start_A", b.start)?;
        finite("bias_sweep.stop_A", b.stop)?;
        if b.points == 0 {
            return Err(invalid("bias_sweep.points", "must be at least 1"));
        }
        if let Some(f) = b.floor_dbm {
            finite("bias_sweep.floor_dBm", f)?;
        }
        non_negative("bias_sweep.depth_dB", b.depth_db)?;

        let g = &self.gain_sweep;
        positive("gain_sweep.signal_frequency_Hz", g.signal_frequency)?;
        finite("gain_sweep.signal_power_dBm", g.signal_power_dbm)?;
        positive(
            "gain_sweep.non_degenerate_pump_frequency_Hz",
            g.non_degenerate_pump,
        )?;
        positive("gain_sweep.degenerate_pump_frequency_Hz", g.degenerate_pump)?;
        finite("gain_sweep.phi_dc_rad", g.phi_dc)?;
        finite("gain_sweep.start_dBm", g.start_dbm)?;
        finite("gain_sweep.stop_dBm", g.stop_dbm)?;
        if g.points == 0 {
            return Err(invalid("gain_sweep.points", "must be at least 1"));
        }

        let l = &self.link;
        positive("link.bandwidth_Hz", l.bandwidth)?;
        positive("link.integration_time_s", l.integration_time)?;
        positive("link.center_frequency_Hz", l.center_frequency)?;
        non_negative("link.photons_per_mode", l.photons_per_mode)?;
        positive("link.jpa_bandwidth_Hz", l.jpa_bandwidth)?;
        if l.stages.is_empty() {
            return Err(invalid(
                "link.stages",
                "at least one amplifier stage is required",
            ));
        }
        for st in &l.stages {
            finite("link.stages.gain_dB", st.gain_db)?;
            non_negative("link.stages.noise_temperature_K", st.noise_temperature)?;
        }

        if let Some(p) = self.montecarlo.phase {
            finite("montecarlo.phase_rad", p)?;
        }

        if let Some(sw) = &self.sweep {
            finite("sweep.start", sw.start)?;
            finite("sweep.stop", sw.stop)?;
            if sw.points == 0 {
                return Err(invalid("sweep.points", "must be at least 1"));
            }
            if sw.scale == Scale::Log && !(sw.start > 0.0 && sw.stop > 0.0) {
                return Err(invalid(
                    "sweep.scale",
                    "log grids need positive start and stop",
                ));
            }
        }
        Ok(())
    }

    /// The sweep for a command, checked against the variables it accepts.
    pub fn sweep_for(&self, allowed: &[&str]) -> Result<Option<&SweepSpec>, ConfigError> {
        match &self.sweep {
            None => Ok(None),
            Some(sw) if allowed.contains(&sw.variable.as_str()) => Ok(Some(sw)),
            Some(sw) => Err(invalid(
                "sweep.variable",
                format!("'{}' is not one of: {}", sw.variable, allowed.join(", ")),
            )),
        }
    }

    /// SHA-256 of the fully defaulted configuration, so that configs that
    /// differ only in layout, comments or spelled-out defaults hash alike.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_reported() {
        let err = RunConfig::parse("[scenario]\netaa = 0.1\n").unwrap_err();
        assert!(err.message.contains("etaa"), "{err}");
    }

    #[test]
    fn lambda_out_of_range_names_field() {
        let cfg = RunConfig::parse("[scenario]\nlambda = 1.5\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.field, "scenario.lambda");
    }

    #[test]
    fn hash_ignores_layout_and_explicit_defaults() {
        let a = RunConfig::parse("[scenario]\neta = 0.2\n").unwrap();
        let b = RunConfig::parse("# comment\n[scenario]\nlambda = 0.5\neta   =   0.2\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::parse("[scenario]\neta = 0.3\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn grids() {
        assert_eq!(grid(1.0, 3.0, 3, Scale::Linear), vec![1.0, 2.0, 3.0]);
        let g = grid(1.0, 1e6, 7, Scale::Log);
        assert!((g[6] - 1e6).abs() < 1e-6 && (g[3] - 1e3).abs() < 1e-9);
        assert_eq!(grid(5.0, 9.0, 1, Scale::Log), vec![5.0]);
    }
}
