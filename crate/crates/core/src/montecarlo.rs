//! Monte-Carlo phase-conjugate correlation receiver.
//!
//! Each trial draws `M` independent return/idler quadrature vectors from the
//! exact four-dimensional Gaussian of the hypothesis under test and sums the
//! phase-conjugate correlation `x_R x_I − p_R p_I`. The decision threshold is
//! the midpoint of the two conditional means of that sum.
//!
//! Trial `t` under hypothesis `h` uses ChaCha stream `2t + h` of the run
//! seed, so results do not depend on evaluation order or thread count.

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{ErrorReport, QiScenario};
use crate::error::{Error, Result};
use crate::gaussian::{
    apply_return_channel, make_thermal, make_tmsv, tensor, GaussianState, ModeLabel,
};

pub const MIN_TRIALS: u64 = 1000;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;
/// Fewer error events than this in either hypothesis raises the precision warning.
const MIN_ERROR_EVENTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Rotation applied to the return quadratures before correlating.
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub report: ErrorReport,
    pub p_false_ci: (f64, f64),
    pub p_miss_ci: (f64, f64),
    pub p_error_ci: (f64, f64),
    pub false_alarms: u64,
    pub misses: u64,
    pub trials: u64,
    /// Decision threshold on the summed statistic.
    pub threshold: f64,
    /// Set when too few error events were seen for a useful estimate.
    pub low_precision: bool,
}

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if k as f64 == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Covariances of (return, idler) under target-absent and target-present.
pub fn hypothesis_states(scn: &QiScenario, phase: f64) -> Result<(GaussianState, GaussianState)> {
    let absent = tensor(
        &make_thermal(scn.n_b)?,
        &make_thermal(scn.n_s)?,
        [ModeLabel::Background, ModeLabel::Idler],
    );
    let present = apply_return_channel(&make_tmsv(scn.n_s)?, scn.eta, scn.n_b)?;
    Ok((
        absent.rotate_mode(0, phase)?,
        present.rotate_mode(0, phase)?,
    ))
}

/// Mean of the per-mode statistic `x_R x_I − p_R p_I`.
fn statistic_mean(state: &GaussianState) -> f64 {
    let c = state.cov();
    let m = state.mean();
    (c[(0, 2)] + m[0] * m[2]) - (c[(1, 3)] + m[1] * m[3])
}

struct Sampler {
    chol: Matrix4<f64>,
    mean: Vector4<f64>,
}

impl Sampler {
    fn new(state: &GaussianState) -> Result<Self> {
        let chol = state
            .cov()
            .cholesky()
            .ok_or_else(|| Error::InvalidState("covariance is not positive definite".into()))?
            .l();
        Ok(Self {
            chol,
            mean: *state.mean(),
        })
    }

    #[inline]
    fn statistic(&self, rng: &mut ChaCha8Rng) -> f64 {
        let z = Vector4::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let q = self.chol * z + self.mean;
        q[0] * q[2] - q[1] * q[3]
    }
}

fn count_errors(
    sampler: &Sampler,
    base: &ChaCha8Rng,
    hypothesis: u64,
    trials: u64,
    modes: u64,
    is_error: impl Fn(f64) -> bool + Sync,
) -> u64 {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = base.clone();
            rng.set_stream(2 * t + hypothesis);
            rng.set_word_pos(0);
            let sum: f64 = (0..modes).map(|_| sampler.statistic(&mut rng)).sum();
            u64::from(is_error(sum))
        })
        .sum()
}

/// Runs the receiver on `cfg.trials` trials of each hypothesis.
pub fn monte_carlo_phase_conjugate(scn: &QiScenario, cfg: &McConfig) -> Result<McReport> {
    scn.validate()?;
    if cfg.trials < MIN_TRIALS {
        return Err(Error::Domain {
            name: "trials",
            value: cfg.trials as f64,
            reason: "at least 1000 trials are required",
        });
    }
    let phase = cfg.phase.unwrap_or(0.0);
    if !phase.is_finite() {
        return Err(Error::Domain {
            name: "phase",
            value: phase,
            reason: "must be finite",
        });
    }
    let (absent, present) = hypothesis_states(scn, phase)?;
    let modes = scn.modes;
    let mean0 = statistic_mean(&absent) * modes as f64;
    let mean1 = statistic_mean(&present) * modes as f64;
    let threshold = 0.5 * (mean0 + mean1);
    // Declare "present" on the side of the threshold where the present mean lies.
    let sign = if mean1 >= mean0 { 1.0 } else { -1.0 };
    let says_present = move |s: f64| sign * (s - threshold) > 0.0;

    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    let false_alarms = count_errors(
        &Sampler::new(&absent)?,
        &base,
        0,
        cfg.trials,
        modes,
        says_present,
    );
    let misses = count_errors(&Sampler::new(&present)?, &base, 1, cfg.trials, modes, |s| {
        !says_present(s)
    });

    let n = cfg.trials as f64;
    let p_false = false_alarms as f64 / n;
    let p_miss = misses as f64 / n;
    let lambda = scn.lambda_prior;
    let p_error = lambda * p_false + (1.0 - lambda) * p_miss;
    let p_false_ci = wilson_interval(false_alarms, cfg.trials);
    let p_miss_ci = wilson_interval(misses, cfg.trials);
    let p_error_ci = (
        lambda * p_false_ci.0 + (1.0 - lambda) * p_miss_ci.0,
        lambda * p_false_ci.1 + (1.0 - lambda) * p_miss_ci.1,
    );
    Ok(McReport {
        report: ErrorReport {
            p_false,
            p_miss,
            p_error,
            exponent: -p_error.ln(),
            modes,
            clamped: false,
        },
        p_false_ci,
        p_miss_ci,
        p_error_ci,
        false_alarms,
        misses,
        trials: cfg.trials,
        threshold,
        low_precision: false_alarms.min(misses) < MIN_ERROR_EVENTS,
    })
}
