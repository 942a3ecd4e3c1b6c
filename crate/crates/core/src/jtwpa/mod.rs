//! Circuit model of the rf-SQUID traveling-wave parametric amplifier.

pub mod cell;
pub mod cme;
pub mod sweep;

pub use cell::{josephson_inductance, MixingCoefficients, SquidCellParams};
pub use cme::{FieldProfile, JtwpaModel, PumpConfig, Regime};
pub use sweep::{
    bias_sweep_idler, calibrate_coupling, floor_for_depth, gain_vs_pump_power, signal_for_regime,
    BiasMapping, BiasSweep, GainSweep, PowerMapping, SignalTone,
};
