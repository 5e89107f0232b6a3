//! Magnetic-field dependence of junction and film parameters.
//!
//! The in-plane field suppresses the Josephson energy through two factors:
//! the Ginzburg-Landau closing of the superconducting gap and a
//! Fraunhofer-like term from flux threading the junction's in-plane cross
//! section. Perpendicular fields tune a SQUID through its flux arch and, on
//! the leads, suppress the gap with an angle-dependent effective critical
//! field. Thin-film critical-field and vortex-scale estimates round out the
//! picture.
//!
//! All fields are accepted with either sign; every model here is even in the
//! field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{bcs_gap_ghz, sinc, PHI_0};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid field-model parameters: {0}")]
    InvalidParams(String),
    #[error("field {b_t} T at or beyond the critical field {b_crit_t} T: gap closed")]
    GapClosed { b_t: f64, b_crit_t: f64 },
}

/// Eq.-of-motion inputs for one junction's in-plane field dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionFieldParams {
    /// Zero-field Josephson energy [GHz].
    pub ej0_ghz: f64,
    /// In-plane Ginzburg-Landau critical field [T].
    pub b_crit_par_t: f64,
    /// In-plane field threading one flux quantum through the junction [T].
    pub b_phi0_t: f64,
    /// Junction finger width [m], when known from imaging; used only for
    /// cross-checks of the effective barrier height.
    pub finger_width_l2_m: Option<f64>,
}

impl JunctionFieldParams {
    pub fn new(ej0_ghz: f64, b_crit_par_t: f64, b_phi0_t: f64) -> Result<Self, FieldError> {
        Self { ej0_ghz, b_crit_par_t, b_phi0_t, finger_width_l2_m: None }.validated()
    }

    pub fn with_finger_width(mut self, l2_m: f64) -> Result<Self, FieldError> {
        self.finger_width_l2_m = Some(l2_m);
        self.validated()
    }

    fn validated(self) -> Result<Self, FieldError> {
        let ok = self.ej0_ghz > 0.0 && self.b_crit_par_t > 0.0 && self.b_phi0_t > 0.0;
        if !ok || !self.ej0_ghz.is_finite() {
            return Err(FieldError::InvalidParams(
                "ej0, b_crit_par and b_phi0 must be positive and finite".into(),
            ));
        }
        if let Some(l2) = self.finger_width_l2_m {
            let h = self.effective_barrier_height_m().unwrap_or(0.0);
            if !(1e-9..100e-9).contains(&h) {
                return Err(FieldError::InvalidParams(format!(
                    "effective barrier height {:.3e} m outside (1, 100) nm for l2 = {:.3e} m",
                    h, l2
                )));
            }
        }
        Ok(self)
    }

    /// Height of the in-plane cross section threaded by the field,
    /// Phi_0 / (B_Phi0 * l2) [m]. `None` when the finger width is unknown.
    pub fn effective_barrier_height_m(&self) -> Option<f64> {
        self.finger_width_l2_m.map(|l2| PHI_0 / (self.b_phi0_t * l2))
    }
}

/// SQUID flux-arch parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidParams {
    /// Summed Josephson energy E_J1 + E_J2 [GHz].
    pub ej_sum_ghz: f64,
    /// Junction asymmetry |E_J1 - E_J2| / (E_J1 + E_J2), in [0, 1].
    pub asymmetry_alpha: f64,
    /// Perpendicular field threading one flux quantum through the loop [T].
    pub b_phi0_squid_t: f64,
    /// Arch offset in the perpendicular field [T].
    pub b_perp_offset_t: f64,
}

impl SquidParams {
    pub fn new(
        ej_sum_ghz: f64,
        asymmetry_alpha: f64,
        b_phi0_squid_t: f64,
        b_perp_offset_t: f64,
    ) -> Result<Self, FieldError> {
        let s = Self { ej_sum_ghz, asymmetry_alpha, b_phi0_squid_t, b_perp_offset_t };
        if !(s.ej_sum_ghz > 0.0) || !(s.b_phi0_squid_t > 0.0) || !b_perp_offset_t.is_finite() {
            return Err(FieldError::InvalidParams(
                "ej_sum and the SQUID period must be positive, offset finite".into(),
            ));
        }
        if !(0.0..=1.0).contains(&s.asymmetry_alpha) {
            return Err(FieldError::InvalidParams(format!(
                "asymmetry alpha = {} outside [0, 1]",
                s.asymmetry_alpha
            )));
        }
        Ok(s)
    }

    /// Construct from the two individual Josephson energies.
    pub fn from_junction_energies(
        ej1_ghz: f64,
        ej2_ghz: f64,
        b_phi0_squid_t: f64,
        b_perp_offset_t: f64,
    ) -> Result<Self, FieldError> {
        let sum = ej1_ghz + ej2_ghz;
        if !(ej1_ghz >= 0.0 && ej2_ghz >= 0.0 && sum > 0.0) {
            return Err(FieldError::InvalidParams(
                "junction energies must be non-negative with a positive sum".into(),
            ));
        }
        Self::new(sum, (ej1_ghz - ej2_ghz).abs() / sum, b_phi0_squid_t, b_perp_offset_t)
    }

    /// (E_J1, E_J2) with E_J1 >= E_J2.
    pub fn junction_energies_ghz(&self) -> (f64, f64) {
        (
            self.ej_sum_ghz * (1.0 + self.asymmetry_alpha) / 2.0,
            self.ej_sum_ghz * (1.0 - self.asymmetry_alpha) / 2.0,
        )
    }
}

/// Thin-film material parameters for critical-field and vortex estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilmParams {
    /// Film thickness [m].
    pub thickness_d_m: f64,
    /// Thermodynamic critical field [T].
    pub bc_thermo_t: f64,
    /// London penetration depth [m].
    pub lambda_london_m: f64,
    /// Clean-limit coherence length [m].
    pub xi0_m: f64,
    /// Mean free path [m].
    pub mean_free_path_m: f64,
    /// Zero-field gap as a frequency [GHz].
    pub delta0_ghz: f64,
    /// Critical temperature [K].
    pub t_crit_k: f64,
}

impl FilmParams {
    /// Validate positivity and the BCS consistency of gap and T_crit.
    pub fn new(
        thickness_d_m: f64,
        bc_thermo_t: f64,
        lambda_london_m: f64,
        xi0_m: f64,
        mean_free_path_m: f64,
        delta0_ghz: f64,
        t_crit_k: f64,
    ) -> Result<Self, FieldError> {
        let s = Self {
            thickness_d_m,
            bc_thermo_t,
            lambda_london_m,
            xi0_m,
            mean_free_path_m,
            delta0_ghz,
            t_crit_k,
        };
        let all = [
            s.thickness_d_m,
            s.bc_thermo_t,
            s.lambda_london_m,
            s.xi0_m,
            s.mean_free_path_m,
            s.delta0_ghz,
            s.t_crit_k,
        ];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(FieldError::InvalidParams(
                "all film lengths, fields, gap and T_crit must be positive".into(),
            ));
        }
        let expected = bcs_gap_ghz(s.t_crit_k);
        if ((s.delta0_ghz - expected) / expected).abs() > 1e-6 {
            return Err(FieldError::InvalidParams(format!(
                "delta0 = {} GHz inconsistent with 1.764 k_B T_crit = {} GHz",
                s.delta0_ghz, expected
            )));
        }
        Ok(s)
    }

    /// Same, with the gap derived from T_crit via the BCS relation.
    pub fn with_bcs_gap(
        thickness_d_m: f64,
        bc_thermo_t: f64,
        lambda_london_m: f64,
        xi0_m: f64,
        mean_free_path_m: f64,
        t_crit_k: f64,
    ) -> Result<Self, FieldError> {
        Self::new(
            thickness_d_m,
            bc_thermo_t,
            lambda_london_m,
            xi0_m,
            mean_free_path_m,
            bcs_gap_ghz(t_crit_k),
            t_crit_k,
        )
    }

    /// Dirty-limit effective penetration depth lambda_L sqrt(xi0 / l) [m].
    pub fn effective_penetration_depth_m(&self) -> f64 {
        self.lambda_london_m * (self.xi0_m / self.mean_free_path_m).sqrt()
    }

    /// Dirty-limit coherence length 0.85 sqrt(xi0 l) [m].
    pub fn dirty_coherence_length_m(&self) -> f64 {
        0.85 * (self.xi0_m * self.mean_free_path_m).sqrt()
    }
}

fn check_below_crit(b_t: f64, b_crit_t: f64) -> Result<(), FieldError> {
    if b_t.abs() >= b_crit_t {
        Err(FieldError::GapClosed { b_t, b_crit_t })
    } else {
        Ok(())
    }
}

/// Ginzburg-Landau gap suppression: delta0 sqrt(1 - (B/B_crit)^2) [GHz].
pub fn gl_gap(delta0_ghz: f64, b_t: f64, b_crit_t: f64) -> Result<f64, FieldError> {
    check_below_crit(b_t, b_crit_t)?;
    let x = b_t / b_crit_t;
    Ok(delta0_ghz * (1.0 - x * x).sqrt())
}

/// In-plane Josephson energy: GL gap suppression times the Fraunhofer factor
/// |sinc(B / B_Phi0)| [GHz].
pub fn ej_inplane(params: &JunctionFieldParams, b_par_t: f64) -> Result<f64, FieldError> {
    check_below_crit(b_par_t, params.b_crit_par_t)?;
    let gl = gl_gap(1.0, b_par_t, params.b_crit_par_t)?;
    Ok(params.ej0_ghz * gl * sinc(b_par_t / params.b_phi0_t).abs())
}

/// SQUID Josephson energy at a perpendicular field [GHz]:
/// E_J,sum sqrt(alpha^2 + (1 - alpha^2) cos^2(pi (B - B0) / B_Phi0)).
pub fn ej_squid(params: &SquidParams, b_perp_t: f64) -> f64 {
    let a2 = params.asymmetry_alpha * params.asymmetry_alpha;
    let phase =
        std::f64::consts::PI * (b_perp_t - params.b_perp_offset_t) / params.b_phi0_squid_t;
    let c = phase.cos();
    params.ej_sum_ghz * (a2 + (1.0 - a2) * c * c).sqrt()
}

/// d E_J / d B_perp of the flux arch [GHz/T], analytic.
pub fn ej_squid_derivative(params: &SquidParams, b_perp_t: f64) -> f64 {
    let a2 = params.asymmetry_alpha * params.asymmetry_alpha;
    let w = std::f64::consts::PI / params.b_phi0_squid_t;
    let phase = w * (b_perp_t - params.b_perp_offset_t);
    let c = phase.cos();
    let root = (a2 + (1.0 - a2) * c * c).sqrt();
    // d/dB cos^2 = -w sin(2 phase)
    -params.ej_sum_ghz * (1.0 - a2) * w * (2.0 * phase).sin() / (2.0 * root)
}

/// GL suppression of the Josephson energy by a perpendicular field on the
/// junction leads [GHz].
pub fn ej_perp_suppression(
    ej_at_zero_perp_ghz: f64,
    b_perp_t: f64,
    b_perp_crit_effective_t: f64,
) -> Result<f64, FieldError> {
    gl_gap(ej_at_zero_perp_ghz, b_perp_t, b_perp_crit_effective_t)
}

/// How the perpendicular term enters the angle-dependent critical field.
/// The vortex-dominated form is linear in the perpendicular component; the
/// purely orbital alternative squares it. The measured-range difference
/// between the two is bounded, and which one applies is an open question,
/// so both are exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PerpTerm {
    /// |B sin(theta) / B_perp_crit| (thin-film vortex form, default).
    #[default]
    Linear,
    /// (B sin(theta) / B_perp_crit)^2 (orbital pair-breaking form).
    Quadratic,
}

/// Critical field at angle `theta_rad` to the film plane: the unique
/// positive root B of
///   perp_term(B sin t / B_perp_crit) + (B cos t / B_par_crit)^2 = 1,
/// found by bisection to 1e-12 absolute.
pub fn critical_field_at_angle(
    b_perp_crit_t: f64,
    b_par_crit_t: f64,
    theta_rad: f64,
    perp_term: PerpTerm,
) -> Result<f64, FieldError> {
    if !(b_perp_crit_t > 0.0 && b_par_crit_t > 0.0) {
        return Err(FieldError::InvalidParams("critical fields must be positive".into()));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta_rad) {
        return Err(FieldError::InvalidParams(format!(
            "theta = {theta_rad} rad outside [0, pi/2]"
        )));
    }
    let (s, c) = theta_rad.sin_cos();
    let f = |b: f64| {
        let perp = match perp_term {
            PerpTerm::Linear => (b * s / b_perp_crit_t).abs(),
            PerpTerm::Quadratic => (b * s / b_perp_crit_t).powi(2),
        };
        perp + (b * c / b_par_crit_t).powi(2) - 1.0
    };
    // f is monotone increasing on [0, max]; f(0) = -1, f(max) >= 0.
    let mut lo = 0.0;
    let mut hi = b_perp_crit_t.max(b_par_crit_t);
    debug_assert!(f(hi) >= 0.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Thin-film in-plane critical field B_c sqrt(24) lambda / d [T], with the
/// dirty-limit penetration depth.
pub fn thin_film_bcrit(film: &FilmParams) -> f64 {
    film.bc_thermo_t * 24.0_f64.sqrt() * film.effective_penetration_depth_m()
        / film.thickness_d_m
}

/// Upper critical field Phi_0 / (2 pi xi^2) [T].
pub fn upper_critical_field(xi_m: f64) -> f64 {
    PHI_0 / (2.0 * std::f64::consts::PI * xi_m * xi_m)
}

/// Derived vortex scales for a lead of width `lead_width_w_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexScales {
    /// Dirty-limit coherence length [m].
    pub xi_m: f64,
    /// Order-of-magnitude field of vortex entry into the leads,
    /// Phi_0 / w^2 [T].
    pub b_entry_t: f64,
    /// Upper critical field Phi_0 / (2 pi xi^2) [T].
    pub b_c2_t: f64,
}

/// Coherence length, lead vortex-entry field and upper critical field.
pub fn vortex_scales(film: &FilmParams, lead_width_w_m: f64) -> VortexScales {
    let xi = film.dirty_coherence_length_m();
    VortexScales {
        xi_m: xi,
        b_entry_t: PHI_0 / (lead_width_w_m * lead_width_w_m),
        b_c2_t: upper_critical_field(xi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn table_single_jj() -> JunctionFieldParams {
        JunctionFieldParams::new(24.7, 1.03, 0.83).unwrap()
    }

    #[test]
    fn ej_inplane_zero_field_and_first_zero() {
        let p = table_single_jj();
        assert_abs_diff_eq!(ej_inplane(&p, 0.0).unwrap(), 24.7, epsilon = 1e-14);
        assert_abs_diff_eq!(ej_inplane(&p, 0.83).unwrap(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn ej_inplane_frozen_midfield_value() {
        // SQUID JJ1 at 0.5 T; frozen from a 40-digit evaluation of the
        // closed form.
        let p = JunctionFieldParams::new(23.5, 1.03, 0.90).unwrap();
        assert_abs_diff_eq!(
            ej_inplane(&p, 0.5).unwrap(),
            11.592800953274962,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ej_inplane_gap_closed_error() {
        let p = table_single_jj();
        assert!(matches!(ej_inplane(&p, 1.03), Err(FieldError::GapClosed { .. })));
        assert!(matches!(ej_inplane(&p, -1.2), Err(FieldError::GapClosed { .. })));
    }

    #[test]
    fn gl_gap_values() {
        assert_abs_diff_eq!(gl_gap(44.0, 0.0, 1.03).unwrap(), 44.0, epsilon = 1e-14);
        // ~48% reduction at 0.88 T with b_crit = 1.03 T
        let g = gl_gap(44.106955360259806, 0.88, 1.03).unwrap();
        let frac = g / 44.106955360259806;
        assert_relative_eq!(frac, 0.51966693945913148, max_relative = 1e-12);
        assert!((0.48..=0.56).contains(&frac));
        // vanishes continuously at the critical field
        let near = gl_gap(44.0, 1.03 * (1.0 - 1e-9), 1.03).unwrap();
        assert!(near < 0.01);
    }

    #[test]
    fn squid_arch_extremes_from_table() {
        // E_J1 = 23.5, E_J2 = 6
        let p = SquidParams::from_junction_energies(23.5, 6.0, 0.43e-3, 0.0).unwrap();
        assert_abs_diff_eq!(ej_squid(&p, 0.0), 29.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ej_squid(&p, 0.43e-3 / 2.0), 17.5, epsilon = 1e-12);
        let (e1, e2) = p.junction_energies_ghz();
        assert_abs_diff_eq!(e1, 23.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e2, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn squid_arch_periodicity_and_bounds() {
        let p = SquidParams::new(10.0, 0.3, 0.43e-3, 0.1e-3).unwrap();
        for i in 0..40 {
            let b = -1.0e-3 + 5.3e-5 * i as f64;
            let a = ej_squid(&p, b);
            let bp = ej_squid(&p, b + p.b_phi0_squid_t);
            assert_abs_diff_eq!(a, bp, epsilon = 1e-11);
            assert!(a <= p.ej_sum_ghz + 1e-12);
            assert!(a >= p.asymmetry_alpha * p.ej_sum_ghz - 1e-12);
        }
        // extremal values hit exactly
        assert_relative_eq!(ej_squid(&p, 0.1e-3), p.ej_sum_ghz, max_relative = 1e-12);
        assert_relative_eq!(
            ej_squid(&p, 0.1e-3 + 0.43e-3 / 2.0),
            0.3 * 10.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn squid_derivative_matches_finite_difference() {
        let p = SquidParams::new(29.5, 0.59, 0.43e-3, 0.05e-3).unwrap();
        let h = 1e-9;
        for i in 0..20 {
            let b = -0.4e-3 + 0.04e-3 * i as f64;
            let fd = (ej_squid(&p, b + h) - ej_squid(&p, b - h)) / (2.0 * h);
            let an = ej_squid_derivative(&p, b);
            assert_relative_eq!(an, fd, max_relative = 1e-5, epsilon = 1e-4);
        }
    }

    #[test]
    fn perp_suppression_arithmetic() {
        assert_abs_diff_eq!(ej_perp_suppression(24.7, 0.0, 0.033).unwrap(), 24.7);
        let v = ej_perp_suppression(24.7, 0.0165, 0.033).unwrap();
        assert_relative_eq!(v, 24.7 * 0.75f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn angle_critical_field_limits() {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let b = critical_field_at_angle(0.033, 1.03, half_pi, PerpTerm::Linear).unwrap();
        assert_abs_diff_eq!(b, 0.033, epsilon = 1e-10);
        let b = critical_field_at_angle(0.033, 1.03, 0.0, PerpTerm::Linear).unwrap();
        assert_abs_diff_eq!(b, 1.03, epsilon = 1e-10);
    }

    #[test]
    fn angle_critical_field_against_independent_bisection() {
        // independently written bisection on the defining equation
        let (bp, bpar, theta) = (0.033, 1.03, 0.01_f64);
        let g = |b: f64| (b * theta.sin() / bp).abs() + (b * theta.cos() / bpar).powi(2) - 1.0;
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let b = critical_field_at_angle(bp, bpar, theta, PerpTerm::Linear).unwrap();
        assert_abs_diff_eq!(b, oracle, epsilon = 1e-10);
        assert_abs_diff_eq!(b, 0.88176445811242495, epsilon = 1e-9);
    }

    #[test]
    fn angle_critical_field_between_the_two_limits() {
        for i in 1..20 {
            let theta = std::f64::consts::FRAC_PI_2 * i as f64 / 20.0;
            for term in [PerpTerm::Linear, PerpTerm::Quadratic] {
                let b = critical_field_at_angle(0.033, 1.03, theta, term).unwrap();
                assert!(b >= 0.033 - 1e-12 && b <= 1.03 + 1e-12);
            }
        }
    }

    #[test]
    fn effective_perp_crit_decreases_with_parallel_field() {
        // theta sweep: at fixed small theta the total critical field drops
        // as the parallel projection grows; equivalently the effective
        // perpendicular critical field at B_par = 0.58 T is below the one
        // at B_par = 0.
        let bperp_crit = 0.033;
        let bpar_crit = 1.03;
        let eff_at = |b_par: f64| {
            // theta such that B cos(theta) = b_par at the critical point
            let mut lo = 0.0_f64;
            let mut hi = std::f64::consts::FRAC_PI_2;
            for _ in 0..60 {
                let th = 0.5 * (lo + hi);
                let b =
                    critical_field_at_angle(bperp_crit, bpar_crit, th, PerpTerm::Linear).unwrap();
                if b * th.cos() > b_par {
                    lo = th;
                } else {
                    hi = th;
                }
            }
            let th = 0.5 * (lo + hi);
            let b = critical_field_at_angle(bperp_crit, bpar_crit, th, PerpTerm::Linear).unwrap();
            b * th.sin()
        };
        assert!(eff_at(0.58) < eff_at(0.0));
    }

    #[test]
    fn thin_film_critical_fields_match_estimates() {
        for (d_nm, expect) in [(10.0, 1.0), (15.0, 0.5), (30.0, 0.2)] {
            let film = FilmParams::with_bcs_gap(
                d_nm * 1e-9,
                0.010,
                16e-9,
                1600e-9,
                d_nm * 1e-9,
                1.2,
            )
            .unwrap();
            let b = thin_film_bcrit(&film);
            assert!(
                (b - expect).abs() / expect < 0.10,
                "d = {d_nm} nm: {b} vs {expect}"
            );
        }
    }

    #[test]
    fn vortex_scale_estimates() {
        let film =
            FilmParams::with_bcs_gap(10e-9, 0.010, 16e-9, 1600e-9, 10e-9, 1.2).unwrap();
        let v = vortex_scales(&film, 410e-9);
        assert_relative_eq!(v.xi_m, 107.5174404e-9, max_relative = 1e-9);
        assert!((10e-3..=13e-3).contains(&v.b_entry_t), "B_v = {}", v.b_entry_t);
        assert_relative_eq!(upper_critical_field(120e-9), 22.85458183e-3, max_relative = 1e-9);
    }

    #[test]
    fn table_one_barrier_heights() {
        let jjs = [
            JunctionFieldParams::new(24.7, 1.03, 0.83).unwrap().with_finger_width(231e-9).unwrap(),
            JunctionFieldParams::new(23.5, 1.03, 0.90).unwrap().with_finger_width(206e-9).unwrap(),
            JunctionFieldParams::new(6.0, 1.03, 1.65).unwrap().with_finger_width(122e-9).unwrap(),
        ];
        let heights: Vec<f64> =
            jjs.iter().map(|j| j.effective_barrier_height_m().unwrap()).collect();
        for h in &heights {
            assert!((h - 10e-9).abs() / 10e-9 < 0.20, "height {h} not within 20% of 10 nm");
        }
        let (min, max) =
            heights.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), h| (lo.min(*h), hi.max(*h)));
        assert!(max / min < 1.10, "mutual spread {}", max / min);
    }

    #[test]
    fn film_params_bcs_consistency_enforced() {
        assert!(FilmParams::new(10e-9, 0.01, 16e-9, 1600e-9, 10e-9, 30.0, 1.2).is_err());
        assert!(FilmParams::with_bcs_gap(10e-9, 0.01, 16e-9, 1600e-9, 10e-9, 1.2).is_ok());
    }

    proptest! {
        #[test]
        fn ej_inplane_even_and_nonnegative(b in -0.8f64..0.8) {
            let p = table_single_jj();
            let plus = ej_inplane(&p, b).unwrap();
            let minus = ej_inplane(&p, -b).unwrap();
            prop_assert!((plus - minus).abs() < 1e-12);
            prop_assert!(plus >= 0.0);
        }
    }
}
