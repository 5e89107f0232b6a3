//! Physical constants and the unit conventions used throughout the crate.
//!
//! Every public interface speaks the same language:
//!
//! - energies as ordinary frequencies E/h in **GHz**
//! - rates in **1/us**, times in **us**
//! - magnetic fields in **tesla**
//! - temperatures in **kelvin**
//!
//! Formulas that are conventionally written with angular frequencies are
//! converted at this boundary and nowhere else. In particular the cavity
//! linewidth is carried as an ordinary-frequency quantity kappa = f_c/Q_tot
//! [GHz]; the angular decay rate is 2*pi times that.

use std::f64::consts::PI;

/// Planck constant [J s] (exact, SI 2019).
pub const H_PLANCK: f64 = 6.62607015e-34;

/// Boltzmann constant [J/K] (exact, SI 2019).
pub const K_B: f64 = 1.380649e-23;

/// Magnetic flux quantum h/2e [Wb].
pub const PHI_0: f64 = 2.067833848e-15;

/// A quantity of dimension [GHz] reinterpreted as a rate [1/us].
/// 1 GHz = 1e9 / s = 1e3 / us.
pub const GHZ_AS_PER_US: f64 = 1.0e3;

/// Tesla to millitesla.
pub const T_TO_MT: f64 = 1.0e3;

/// k_B T expressed as a frequency [GHz].
pub fn thermal_freq_ghz(t_kelvin: f64) -> f64 {
    K_B * t_kelvin / H_PLANCK * 1e-9
}

/// BCS zero-field gap as a frequency [GHz]: Delta_0 = 1.764 k_B T_crit.
pub fn bcs_gap_ghz(t_crit_kelvin: f64) -> f64 {
    1.764 * thermal_freq_ghz(t_crit_kelvin)
}

/// Bose-Einstein occupation of a mode at `f_ghz` for a bath at `t_kelvin`.
/// Zero temperature gives exactly zero.
pub fn bose_occupation(f_ghz: f64, t_kelvin: f64) -> f64 {
    if t_kelvin <= 0.0 {
        return 0.0;
    }
    1.0 / ((f_ghz / thermal_freq_ghz(t_kelvin)).exp() - 1.0)
}

/// Normalized sinc, first zero at x = 1: sin(pi x)/(pi x), sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bcs_gap_for_aluminum_tc() {
        // 1.764 * k_B * 1.2 K / h = 44.107 GHz
        assert_relative_eq!(bcs_gap_ghz(1.2), 44.106955360259806, max_relative = 1e-12);
    }

    #[test]
    fn thermal_photon_number_at_cavity() {
        let n = bose_occupation(8.107, 0.076);
        assert_relative_eq!(n, 0.006015561617959389, max_relative = 1e-12);
        assert_eq!(bose_occupation(8.107, 0.0), 0.0);
    }

    #[test]
    fn sinc_zeros_and_peak() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(1.0).abs() < 1e-15);
        assert!(sinc(2.0).abs() < 1e-15);
        assert!(sinc(0.5) > 0.0 && sinc(1.5) < 0.0);
    }
}
