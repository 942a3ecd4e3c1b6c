//! Lumped-element model of one rf-SQUID cell and of the LC ladder it forms.
//!
//! Each cell is a geometric inductance `L_g` shunted by a Josephson junction,
//! in series along the line, with a ground capacitance `C_g` per cell. For a
//! non-hysteretic cell (`beta_L < 1`) the DC flux phase `phi` sets a unique
//! effective inductance `L_g / (1 + beta_L cos phi)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::FLUX_QUANTUM;
use crate::error::{check_positive, Error, Result};

/// `Φ₀ / (2π I_c)`.
pub fn josephson_inductance(i_c: f64) -> Result<f64> {
    check_positive("I_c", i_c)?;
    Ok(FLUX_QUANTUM / (2.0 * PI * i_c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidCellParams {
    /// Ground capacitance per cell, F.
    pub c_g: f64,
    /// Geometric loop inductance, H.
    pub l_g: f64,
    /// Junction capacitance, F.
    pub c_j: f64,
    /// Junction critical current, A.
    pub i_c: f64,
    pub n_cells: usize,
}

impl SquidCellParams {
    pub fn new(c_g: f64, l_g: f64, c_j: f64, i_c: f64, n_cells: usize) -> Result<Self> {
        let p = Self {
            c_g,
            l_g,
            c_j,
            i_c,
            n_cells,
        };
        p.validate()?;
        Ok(p)
    }

    /// The 990-cell device: 13.0 fF, 45 pH, 25.8 fF, 1.5 µA.
    pub fn reference_device() -> Self {
        Self {
            c_g: 13.0e-15,
            l_g: 45e-12,
            c_j: 25.8e-15,
            i_c: 1.5e-6,
            n_cells: 990,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("C_g", self.c_g)?;
        check_positive("L_g", self.l_g)?;
        check_positive("C_J", self.c_j)?;
        check_positive("I_c", self.i_c)?;
        if self.n_cells == 0 {
            return Err(Error::Domain {
                name: "n_cells",
                value: 0.0,
                reason: "at least one cell is required",
            });
        }
        Ok(())
    }

    /// Fails with [`Error::Hysteretic`] unless `beta_L < 1`.
    pub fn require_non_hysteretic(self) -> Result<Self> {
        self.validate()?;
        let b = self.beta_l();
        if b >= 1.0 {
            return Err(Error::Hysteretic { beta_l: b });
        }
        Ok(self)
    }

    pub fn josephson_inductance(&self) -> f64 {
        FLUX_QUANTUM / (2.0 * PI * self.i_c)
    }

    /// Screening parameter `2π L_g I_c / Φ₀ = L_g / L_J`.
    pub fn beta_l(&self) -> f64 {
        self.l_g / self.josephson_inductance()
    }

    pub fn is_hysteretic(&self) -> bool {
        self.beta_l() >= 1.0
    }

    /// `L_g / (1 + beta_L cos phi)`.
    pub fn cell_inductance(&self, phi_dc: f64) -> Result<f64> {
        let b = self.require_non_hysteretic()?.beta_l();
        Ok(self.l_g / (1.0 + b * phi_dc.cos()))
    }

    /// Three- and four-wave mixing strengths at flux phase `phi_dc`.
    ///
    /// `c3 = beta sin(phi) / (1 + beta cos(phi))^2`,
    /// `c4 = beta cos(phi) / (1 + beta cos(phi))^2`.
    pub fn mixing_coefficients(&self, phi_dc: f64) -> Result<MixingCoefficients> {
        let b = self.require_non_hysteretic()?.beta_l();
        let (s, c) = phi_dc.sin_cos();
        let denom = (1.0 + b * c).powi(2);
        Ok(MixingCoefficients {
            c3: b * s / denom,
            c4: b * c / denom,
        })
    }

    /// `sqrt(L_eff / C_g)`.
    pub fn characteristic_impedance(&self, phi_dc: f64) -> Result<f64> {
        Ok((self.cell_inductance(phi_dc)? / self.c_g).sqrt())
    }

    /// Upper edge of the LC-ladder pass band, `1 / (π sqrt(L_eff C_g))`.
    pub fn cutoff_frequency(&self, phi_dc: f64) -> Result<f64> {
        Ok(1.0 / (PI * (self.cell_inductance(phi_dc)? * self.c_g).sqrt()))
    }

    /// Junction plasma frequency `1 / (2π sqrt(L_J C_J))`.
    pub fn plasma_frequency(&self) -> f64 {
        1.0 / (2.0 * PI * (self.josephson_inductance() * self.c_j).sqrt())
    }

    /// Phase advance per cell, `k(f) = 2 asin(π f sqrt(L_eff C_g))`.
    pub fn dispersion(&self, phi_dc: f64, f: f64) -> Result<f64> {
        check_positive("f", f)?;
        let cutoff = self.cutoff_frequency(phi_dc)?;
        if f >= cutoff {
            return Err(Error::Evanescent {
                frequency: f,
                cutoff,
            });
        }
        Ok(2.0 * (f / cutoff).asin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingCoefficients {
    pub c3: f64,
    pub c4: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PH: f64 = 1e-12;

    #[test]
    fn josephson_inductance_values() {
        let lj = josephson_inductance(1.5e-6).unwrap();
        assert!((lj / PH - 219.4).abs() < 0.1, "{}", lj / PH);
        assert_relative_eq!(
            josephson_inductance(3.0e-6).unwrap(),
            lj / 2.0,
            max_relative = 1e-15
        );
        let unit = FLUX_QUANTUM / (2.0 * PI);
        assert_relative_eq!(
            josephson_inductance(unit).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(josephson_inductance(0.0).is_err());
        assert!(josephson_inductance(-1e-6).is_err());
    }

    #[test]
    fn screening_parameter() {
        let p = SquidCellParams::reference_device();
        assert!((p.beta_l() - 0.205).abs() < 0.001);
        assert!(!p.is_hysteretic());

        let boundary = SquidCellParams {
            l_g: p.josephson_inductance(),
            ..p
        };
        assert_relative_eq!(boundary.beta_l(), 1.0, max_relative = 1e-15);
        assert!(boundary.is_hysteretic());
        assert!(matches!(
            boundary.require_non_hysteretic(),
            Err(Error::Hysteretic { .. })
        ));

        let strong = SquidCellParams { i_c: 15e-6, ..p };
        assert!((strong.beta_l() - 2.05).abs() < 0.01);
        assert!(strong.is_hysteretic());
        assert!(strong.cell_inductance(0.0).is_err());
    }

    #[test]
    fn flux_tuned_inductance() {
        let p = SquidCellParams::reference_device();
        let b = p.beta_l();
        assert_relative_eq!(
            p.cell_inductance(0.0).unwrap(),
            45.0 * PH / (1.0 + b),
            max_relative = 1e-14
        );
        assert!((p.cell_inductance(0.0).unwrap() / PH - 37.3).abs() < 0.05);
        assert!((p.cell_inductance(PI / 2.0).unwrap() / PH - 45.0).abs() < 1e-12);
        assert!((p.cell_inductance(PI).unwrap() / PH - 56.6).abs() < 0.05);
    }

    #[test]
    fn mixing_zeros_and_parity() {
        let p = SquidCellParams::reference_device();
        let at0 = p.mixing_coefficients(0.0).unwrap();
        assert_eq!(at0.c3, 0.0);
        let at_half_pi = p.mixing_coefficients(PI / 2.0).unwrap();
        assert!(at_half_pi.c4.abs() < 1e-16);
        assert_relative_eq!(at_half_pi.c3, p.beta_l(), max_relative = 1e-14);
        // c4 peaks at phi = 0 (|c4| is larger at phi = pi, where it is negative)
        let max_c4 = (0..=1000)
            .map(|i| {
                p.mixing_coefficients(-PI + 2.0 * PI * i as f64 / 1000.0)
                    .unwrap()
                    .c4
            })
            .fold(f64::MIN, f64::max);
        assert!(max_c4 <= at0.c4 * (1.0 + 1e-12));
        assert!(at0.c4 > 0.0);
        for phi in [0.1, 0.7, 1.3, 2.9] {
            let plus = p.mixing_coefficients(phi).unwrap();
            let minus = p.mixing_coefficients(-phi).unwrap();
            assert_eq!(plus.c3, -minus.c3);
            assert_eq!(plus.c4, minus.c4);
        }
    }

    #[test]
    fn ladder_constants() {
        let p = SquidCellParams::reference_device();
        let z = p.characteristic_impedance(0.0).unwrap();
        assert!((z - 53.6).abs() < 0.05, "{z}");
        let fc = p.cutoff_frequency(0.0).unwrap();
        assert!((fc / 1e9 - 457.0).abs() < 1.0, "{fc}");
        let fp = p.plasma_frequency();
        assert!((fp / 1e9 - 66.9).abs() < 0.1, "{fp}");
    }

    #[test]
    fn dispersion_branch() {
        let p = SquidCellParams::reference_device();
        let l = p.cell_inductance(0.0).unwrap();
        let slope = 2.0 * PI * (l * p.c_g).sqrt();
        let k = p.dispersion(0.0, 1e3).unwrap();
        assert_relative_eq!(k / 1e3, slope, max_relative = 1e-9);

        let fc = p.cutoff_frequency(0.0).unwrap();
        let mut prev = 0.0;
        for i in 1..200 {
            let k = p.dispersion(0.0, fc * i as f64 / 200.0).unwrap();
            assert!(k > prev);
            prev = k;
        }
        match p.dispersion(0.0, fc) {
            Err(Error::Evanescent { cutoff, .. }) => assert_eq!(cutoff, fc),
            other => panic!("expected evanescent error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(SquidCellParams::new(0.0, 45e-12, 25.8e-15, 1.5e-6, 990).is_err());
        assert!(SquidCellParams::new(13e-15, 45e-12, 25.8e-15, 1.5e-6, 0).is_err());
        assert!(SquidCellParams::new(13e-15, 45e-12, 25.8e-15, 1.5e-6, 990).is_ok());
    }
}
