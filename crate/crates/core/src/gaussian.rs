//! Two-mode Gaussian states in the vacuum-variance-1 convention.
//!
//! Quadratures are ordered `(x1, p1, x2, p2)`; the vacuum has covariance `I`.
//! In this convention every physical state has symplectic eigenvalues `>= 1`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite_nonneg, check_unit_interval, Error, Result};

/// Relative tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack allowed below 1 for symplectic eigenvalues of a physical state.
pub const UNCERTAINTY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeLabel {
    Signal,
    Idler,
    Return,
    Background,
}

/// Covariance matrix and mean vector of a two-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    cov: Matrix4<f64>,
    mean: Vector4<f64>,
    labels: [ModeLabel; 2],
}

/// A single-mode Gaussian state, used for thermal inputs before embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeState {
    pub cov: Matrix2<f64>,
    pub mean: Vector2<f64>,
}

impl SingleModeState {
    pub fn mean_photon(&self) -> f64 {
        (self.cov.trace() / 2.0 - 1.0) / 2.0
    }
}

/// The symplectic form of two modes, `diag(J, J)` with `J = [[0, 1], [-1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut omega = Matrix4::zeros();
    for k in 0..2 {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

impl GaussianState {
    /// Builds a state after checking symmetry and the uncertainty principle.
    pub fn new(cov: Matrix4<f64>, mean: Vector4<f64>, labels: [ModeLabel; 2]) -> Result<Self> {
        let state = Self { cov, mean, labels };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn new_unchecked(
        cov: Matrix4<f64>,
        mean: Vector4<f64>,
        labels: [ModeLabel; 2],
    ) -> Self {
        Self { cov, mean, labels }
    }

    pub fn cov(&self) -> &Matrix4<f64> {
        &self.cov
    }

    pub fn mean(&self) -> &Vector4<f64> {
        &self.mean
    }

    pub fn labels(&self) -> [ModeLabel; 2] {
        self.labels
    }

    /// The 2x2 covariance block of `mode` (0 or 1).
    pub fn mode_block(&self, mode: usize) -> Result<Matrix2<f64>> {
        if mode > 1 {
            return Err(Error::ModeIndex {
                index: mode,
                modes: 2,
            });
        }
        Ok(self.cov.fixed_view::<2, 2>(2 * mode, 2 * mode).into_owned())
    }

    /// The 2x2 cross-correlation block between mode 0 (rows) and mode 1.
    pub fn cross_block(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .cov
            .iter()
            .chain(self.mean.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let scale = self.cov.amax().max(1.0);
        let asym = (self.cov - self.cov.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidState(format!(
                "covariance asymmetry {asym:.3e} exceeds tolerance"
            )));
        }
        let [nu_minus, _] = symplectic_eigenvalues_of(&self.cov)?;
        if nu_minus < 1.0 - UNCERTAINTY_TOL {
            return Err(Error::InvalidState(format!(
                "smallest symplectic eigenvalue {nu_minus:.12} < 1"
            )));
        }
        Ok(())
    }

    pub fn symplectic_eigenvalues(&self) -> Result<[f64; 2]> {
        symplectic_eigenvalues_of(&self.cov)
    }

    /// `1 / sqrt(det cov)`.
    pub fn purity(&self) -> f64 {
        1.0 / self.cov.determinant().sqrt()
    }

    pub fn mean_photon(&self, mode: usize) -> Result<f64> {
        let block = self.mode_block(mode)?;
        let m = self.mean.fixed_rows::<2>(2 * mode);
        Ok((block.trace() / 2.0 - 1.0) / 2.0 + m.norm_squared() / 4.0)
    }

    /// Covariance with the momentum of the second mode sign-flipped.
    pub fn partial_transpose_cov(&self) -> Matrix4<f64> {
        let flip = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0));
        flip * self.cov * flip
    }

    /// Logarithmic negativity `max(0, -ln nu~_-)`.
    pub fn log_negativity(&self) -> Result<f64> {
        self.validate()?;
        let [nu_minus, _] = symplectic_eigenvalues_of(&self.partial_transpose_cov())?;
        Ok((-nu_minus.ln()).max(0.0))
    }

    /// Rotates the quadratures of `mode` by `phase` radians.
    pub fn rotate_mode(&self, mode: usize, phase: f64) -> Result<Self> {
        if mode > 1 {
            return Err(Error::ModeIndex {
                index: mode,
                modes: 2,
            });
        }
        let (s, c) = phase.sin_cos();
        let mut rot = Matrix4::identity();
        rot[(2 * mode, 2 * mode)] = c;
        rot[(2 * mode, 2 * mode + 1)] = -s;
        rot[(2 * mode + 1, 2 * mode)] = s;
        rot[(2 * mode + 1, 2 * mode + 1)] = c;
        let cov = rot * self.cov * rot.transpose();
        Ok(Self::new_unchecked(
            0.5 * (cov + cov.transpose()),
            rot * self.mean,
            self.labels,
        ))
    }
}

/// Symplectic eigenvalues `[nu_-, nu_+]` of a positive-definite 4x4 covariance.
///
/// With `S = cov^{1/2}`, the antisymmetric matrix `S Ω S` has eigenvalues
/// `±i nu_k`, so its singular values are the symplectic spectrum, each twice.
pub fn symplectic_eigenvalues_of(cov: &Matrix4<f64>) -> Result<[f64; 2]> {
    let sym = 0.5 * (cov + cov.transpose());
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidState(format!(
            "covariance is not positive definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    let sqrt_diag = Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let k = root * symplectic_form() * root;
    let mut sv: Vec<f64> = k.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    // sv = [a, a, b, b] up to rounding; average each pair.
    Ok([0.5 * (sv[0] + sv[1]), 0.5 * (sv[2] + sv[3])])
}

/// Two-mode squeezed vacuum with `n_s` mean photons per mode.
pub fn make_tmsv(n_s: f64) -> Result<GaussianState> {
    check_finite_nonneg("N_s", n_s)?;
    let diag = 2.0 * n_s + 1.0;
    let off = 2.0 * (n_s * (n_s + 1.0)).sqrt();
    #[rustfmt::skip]
    let cov = Matrix4::new(
        diag, 0.0, off, 0.0,
        0.0, diag, 0.0, -off,
        off, 0.0, diag, 0.0,
        0.0, -off, 0.0, diag,
    );
    Ok(GaussianState::new_unchecked(
        cov,
        Vector4::zeros(),
        [ModeLabel::Signal, ModeLabel::Idler],
    ))
}

/// Single-mode thermal state with `n_b` mean photons.
pub fn make_thermal(n_b: f64) -> Result<SingleModeState> {
    check_finite_nonneg("N_B", n_b)?;
    Ok(SingleModeState {
        cov: Matrix2::identity() * (2.0 * n_b + 1.0),
        mean: Vector2::zeros(),
    })
}

/// Product state `a ⊗ b`.
pub fn tensor(a: &SingleModeState, b: &SingleModeState, labels: [ModeLabel; 2]) -> GaussianState {
    let mut cov = Matrix4::zeros();
    cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&a.cov);
    cov.fixed_view_mut::<2, 2>(2, 2).copy_from(&b.cov);
    let mean = Vector4::new(a.mean[0], a.mean[1], b.mean[0], b.mean[1]);
    GaussianState::new_unchecked(cov, mean, labels)
}

/// Mixes the first mode with a thermal environment on a beamsplitter of
/// transmissivity `eta`: `a_R = sqrt(eta) a_S + sqrt(1 - eta) a_B`.
pub fn apply_return_channel(state: &GaussianState, eta: f64, n_b: f64) -> Result<GaussianState> {
    check_unit_interval("eta", eta)?;
    check_finite_nonneg("N_B", n_b)?;
    if eta == 1.0 {
        let mut out = state.clone();
        out.labels[0] = ModeLabel::Return;
        return Ok(out);
    }
    let t = eta.sqrt();
    let mut cov = state.cov;
    let signal = state.cov.fixed_view::<2, 2>(0, 0) * eta
        + Matrix2::identity() * ((1.0 - eta) * (2.0 * n_b + 1.0));
    cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&signal);
    let cross = state.cov.fixed_view::<2, 2>(0, 2) * t;
    cov.fixed_view_mut::<2, 2>(0, 2).copy_from(&cross);
    cov.fixed_view_mut::<2, 2>(2, 0)
        .copy_from(&cross.transpose());
    let mut mean = state.mean;
    mean[0] *= t;
    mean[1] *= t;
    Ok(GaussianState::new_unchecked(
        cov,
        mean,
        [ModeLabel::Return, state.labels[1]],
    ))
}

/// Thermal photon-number distribution of either arm of a TMSV, truncated at
/// `n_max` with the remaining probability kept in `tail_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDistribution {
    pub probs: Vec<f64>,
    pub n_max: usize,
    pub tail_mass: f64,
}

impl SchmidtDistribution {
    /// `sum n p_n` over the retained terms.
    pub fn truncated_mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.tail_mass
    }
}

/// `p_n = N_s^n / (N_s + 1)^(n + 1)` for `n <= n_max`.
pub fn tmsv_schmidt(n_s: f64, n_max: usize) -> Result<SchmidtDistribution> {
    check_finite_nonneg("N_s", n_s)?;
    let ratio = n_s / (n_s + 1.0);
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut p = 1.0 / (n_s + 1.0);
    for _ in 0..=n_max {
        probs.push(p);
        p *= ratio;
    }
    // Geometric tail sum_{n > n_max} p_n = ratio^(n_max + 1), exact.
    let tail_mass = ratio.powi(n_max as i32 + 1);
    Ok(SchmidtDistribution {
        probs,
        n_max,
        tail_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Closed-form two-mode symplectic spectrum from the local invariants.
    fn invariant_spectrum(cov: &Matrix4<f64>) -> [f64; 2] {
        let a = cov.fixed_view::<2, 2>(0, 0).determinant();
        let b = cov.fixed_view::<2, 2>(2, 2).determinant();
        let c = cov.fixed_view::<2, 2>(0, 2).determinant();
        let delta = a + b + 2.0 * c;
        let det = cov.determinant();
        let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
        [((delta - disc) / 2.0).sqrt(), ((delta + disc) / 2.0).sqrt()]
    }

    #[test]
    fn vacuum_tmsv_is_identity() {
        let s = make_tmsv(0.0).unwrap();
        assert_eq!(*s.cov(), Matrix4::identity());
        assert_eq!(s.log_negativity().unwrap(), 0.0);
    }

    #[test]
    fn tmsv_one_photon_entries() {
        let s = make_tmsv(1.0).unwrap();
        assert_eq!(s.cov()[(0, 0)], 3.0);
        assert_relative_eq!(s.cov()[(0, 2)], 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s.cov()[(1, 3)], -2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_photon_numbers() {
        assert!(make_tmsv(-0.1).is_err());
        assert!(make_tmsv(f64::NAN).is_err());
        assert!(make_tmsv(f64::INFINITY).is_err());
        assert!(make_thermal(-1.0).is_err());
    }

    #[test]
    fn partial_transpose_spectrum_matches_closed_form() {
        for n_s in [0.01, 0.1, 1.0, 10.0] {
            let s = make_tmsv(n_s).unwrap();
            let pt = s.partial_transpose_cov();
            let [numeric, _] = symplectic_eigenvalues_of(&pt).unwrap();
            let closed = ((n_s + 1.0f64).sqrt() - n_s.sqrt()).powi(2);
            let [invariant, _] = invariant_spectrum(&pt);
            assert_relative_eq!(numeric, closed, max_relative = 1e-10);
            assert_relative_eq!(invariant, closed, max_relative = 1e-8);
        }
    }

    #[test]
    fn log_negativity_of_unit_tmsv() {
        let e = make_tmsv(1.0).unwrap().log_negativity().unwrap();
        let expected = -((2f64.sqrt() - 1.0).powi(2)).ln();
        assert_relative_eq!(e, expected, epsilon = 1e-12);
        assert!((e - 1.7627).abs() < 1e-4);
    }

    #[test]
    fn thermal_covariances() {
        assert_eq!(make_thermal(0.0).unwrap().cov, Matrix2::identity());
        assert_eq!(make_thermal(0.5).unwrap().cov, Matrix2::identity() * 2.0);
        assert_eq!(make_thermal(20.0).unwrap().cov, Matrix2::identity() * 41.0);
    }

    #[test]
    fn thermal_product_spectrum() {
        let a = make_thermal(1.0).unwrap();
        let b = make_thermal(2.0).unwrap();
        let s = tensor(&a, &b, [ModeLabel::Background, ModeLabel::Idler]);
        let [lo, hi] = s.symplectic_eigenvalues().unwrap();
        assert_relative_eq!(lo, 3.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn lossless_channel_is_identity() {
        let s = make_tmsv(0.3).unwrap();
        let out = apply_return_channel(&s, 1.0, 7.0).unwrap();
        assert_eq!(out.cov(), s.cov());
    }

    #[test]
    fn full_loss_gives_vacuum_return() {
        let s = make_tmsv(2.0).unwrap();
        let out = apply_return_channel(&s, 0.0, 0.0).unwrap();
        assert_eq!(out.mode_block(0).unwrap(), Matrix2::identity());
        assert_eq!(out.cross_block(), Matrix2::zeros());
        assert_eq!(out.mode_block(1).unwrap(), s.mode_block(1).unwrap());
    }

    #[test]
    fn channel_rejects_bad_reflectance() {
        let s = make_tmsv(0.1).unwrap();
        assert!(apply_return_channel(&s, 1.5, 1.0).is_err());
        assert!(apply_return_channel(&s, -0.1, 1.0).is_err());
    }

    #[test]
    fn noisy_channel_degrades_entanglement() {
        let s = make_tmsv(0.1).unwrap();
        let before = s.log_negativity().unwrap();
        let noisy = apply_return_channel(&s, 0.01, 20.0).unwrap();
        let quiet = apply_return_channel(&s, 0.01, 0.0).unwrap();
        let after = noisy.log_negativity().unwrap();
        assert!(after < before);
        assert!(after < quiet.log_negativity().unwrap());
        noisy.validate().unwrap();
    }

    #[test]
    fn diagnostics() {
        let s = make_tmsv(0.7).unwrap();
        assert_relative_eq!(s.mean_photon(0).unwrap(), 0.7, epsilon = 1e-14);
        assert_relative_eq!(s.mean_photon(1).unwrap(), 0.7, epsilon = 1e-14);
        assert!(matches!(s.mean_photon(2), Err(Error::ModeIndex { .. })));
    }

    #[test]
    fn rejects_unphysical_covariance() {
        let cov = Matrix4::identity() * 0.5;
        let err = GaussianState::new(cov, Vector4::zeros(), [ModeLabel::Signal, ModeLabel::Idler]);
        assert!(matches!(err, Err(Error::InvalidState(_))));
        let mut asym = Matrix4::identity();
        asym[(0, 1)] = 0.1;
        let err = GaussianState::new(
            asym,
            Vector4::zeros(),
            [ModeLabel::Signal, ModeLabel::Idler],
        );
        assert!(matches!(err, Err(Error::InvalidState(_))));
    }

    #[test]
    fn rotation_preserves_spectrum() {
        let s = apply_return_channel(&make_tmsv(0.4).unwrap(), 0.3, 2.0).unwrap();
        let r = s.rotate_mode(0, 0.77).unwrap();
        let a = s.symplectic_eigenvalues().unwrap();
        let b = r.symplectic_eigenvalues().unwrap();
        assert_relative_eq!(a[0], b[0], max_relative = 1e-12);
        assert_relative_eq!(a[1], b[1], max_relative = 1e-12);
    }

    #[test]
    fn schmidt_examples() {
        let vac = tmsv_schmidt(0.0, 4).unwrap();
        assert_eq!(vac.probs, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(vac.tail_mass, 0.0);

        let d = tmsv_schmidt(1.0, 1).unwrap();
        assert_eq!(d.probs, vec![0.5, 0.25]);
        assert_eq!(d.tail_mass, 0.25);
    }

    #[test]
    fn schmidt_normalized_and_decreasing() {
        for n_s in [1e-3, 0.1, 1.0, 7.5, 100.0] {
            let d = tmsv_schmidt(n_s, 50).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12, "N_s = {n_s}");
            assert!(d.probs.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0));
        }
    }

    #[test]
    fn schmidt_mean_matches_covariance() {
        // Exact tail contribution is tail_mass * (n_max + 1 + N_s).
        for n_s in [0.05, 0.5, 2.0] {
            let n_max = 60;
            let d = tmsv_schmidt(n_s, n_max).unwrap();
            let cov_mean = make_tmsv(n_s).unwrap().mean_photon(0).unwrap();
            let bound = d.tail_mass * (n_max as f64 + 1.0 + n_s) + 1e-12;
            assert!((cov_mean - d.truncated_mean()).abs() <= bound);
        }
    }
}
