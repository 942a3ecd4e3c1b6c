//! Desk-scale simulator of a microwave quantum-illumination radar with a
//! traveling-wave parametric amplifier source.
//!
//! - [`gaussian`]: two-mode Gaussian states, loss channel, entanglement.
//! - [`detection`]: closed-form error probabilities and the quantum advantage.
//! - [`montecarlo`]: sampled phase-conjugate receiver.
//! - [`jtwpa`]: rf-SQUID line model, coupled-mode propagation and sweeps.
//! - [`link`]: mode counting, transmit power, amplifier cascades.
//! - [`sweep`]: the tabular result type written to CSV.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod detection;
pub mod error;
pub mod gaussian;
pub mod jtwpa;
pub mod link;
pub mod montecarlo;
pub mod sweep;
pub mod units;

pub use detection::{ErrorReport, Prefactor, QiScenario, Source};
pub use error::{Error, Result};
pub use gaussian::{GaussianState, SchmidtDistribution};
pub use jtwpa::{FieldProfile, JtwpaModel, PumpConfig, Regime, SquidCellParams};
pub use link::{AmplifierStage, LinkBudget};
pub use montecarlo::{McConfig, McReport};
pub use sweep::SweepResult;
