//! Physical constants (SI 2019 exact values).

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
