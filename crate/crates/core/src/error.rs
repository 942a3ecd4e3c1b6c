use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid Gaussian state: {0}")]
    InvalidState(String),

    #[error("mode index {index} out of range for a {modes}-mode state")]
    ModeIndex { index: usize, modes: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The cell is hysteretic (beta_L >= 1); the flux response is multivalued.
    #[error("unsupported regime: beta_L = {beta_l:.4} >= 1 (hysteretic cell)")]
    Hysteretic { beta_l: f64 },

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("{frequency:.6e} Hz is in the evanescent band (cutoff {cutoff:.6e} Hz)")]
    Evanescent { frequency: f64, cutoff: f64 },

    #[error("pump depleted below 50% of its input power at cell {cell}")]
    PumpDepleted { cell: usize },

    #[error("integration diverged after cell {last_valid}")]
    Diverged { last_valid: usize },

    #[error("column length mismatch: '{column}' has {len} rows, expected {expected}")]
    ColumnLength {
        column: String,
        len: usize,
        expected: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite_nonneg(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Domain {
            name,
            value,
            reason: "must be finite",
        });
    }
    if value < 0.0 {
        return Err(Error::Domain {
            name,
            value,
            reason: "must be non-negative",
        });
    }
    Ok(value)
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Domain {
            name,
            value,
            reason: "must be positive and finite",
        });
    }
    Ok(value)
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Domain {
            name,
            value,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(value)
}
