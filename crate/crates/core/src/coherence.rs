//! Relaxation and dephasing rate models.
//!
//! Channels: Purcell decay through the readout cavity, a dielectric
//! background quality factor, quasiparticle tunneling at a field-suppressed
//! gap, vortex loss with depinning, photon shot noise from thermal cavity
//! occupation, and the flux-noise sensitivity analysis for a SQUID.
//!
//! Rates are returned in 1/us, times in us. Frequency-convention note: the
//! Purcell and shot-noise formulas take the cavity linewidth as the
//! ordinary-frequency quantity kappa = f_c / Q_tot in GHz (see
//! [`crate::units`]); the photon-number decay rate in angular units is
//! 2 pi kappa.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpb::transitions_unchecked;
use crate::field::{ej_squid, ej_squid_derivative, gl_gap, FieldError, SquidParams};
use crate::fit::linear::{ols_line, ols_slope_sigma};
use crate::fit::{EcEjRelation, FitError};
use crate::units::{bose_occupation, thermal_freq_ghz, GHZ_AS_PER_US, T_TO_MT};

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("invalid coherence parameters: {0}")]
    InvalidParams(String),
    #[error("zero qubit-cavity detuning: Purcell rate undefined")]
    ZeroDetuning,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("dispersive-shift pole: {0}")]
    DispersivePole(String),
}

/// Vortex-loss model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexParams {
    /// Slope of the linear loss regime at zero parallel field [1/us/mT].
    pub p0_per_us_mt: f64,
    /// Hyperbola rounding rate [1/us]; q/p0 sets the threshold field.
    pub q_per_us: f64,
    /// Depinning frequency [GHz].
    pub f_depin_ghz: f64,
    /// Creep parameter in [0, 1].
    pub creep_epsilon: f64,
    /// Perpendicular-field offset of maximal T1 [T].
    pub b0_offset_t: f64,
}

impl VortexParams {
    pub fn new(
        p0_per_us_mt: f64,
        q_per_us: f64,
        f_depin_ghz: f64,
        creep_epsilon: f64,
        b0_offset_t: f64,
    ) -> Result<Self, CoherenceError> {
        let s = Self { p0_per_us_mt, q_per_us, f_depin_ghz, creep_epsilon, b0_offset_t };
        if !(s.p0_per_us_mt > 0.0 && s.q_per_us > 0.0 && s.f_depin_ghz > 0.0) {
            return Err(CoherenceError::InvalidParams("p0, q, f_depin must be positive".into()));
        }
        if !(0.0..=1.0).contains(&s.creep_epsilon) {
            return Err(CoherenceError::InvalidParams(format!(
                "creep epsilon {} outside [0, 1]",
                s.creep_epsilon
            )));
        }
        Ok(s)
    }

    /// Threshold field q/p0 below which vortex loss is sub-linear [mT].
    pub fn threshold_field_mt(&self) -> f64 {
        self.q_per_us / self.p0_per_us_mt
    }
}

/// Quasiparticle bath parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiparticleParams {
    /// Quasiparticle bath temperature [K].
    pub t_bath_k: f64,
    /// Superconducting gap at the operating field, as a frequency [GHz].
    pub gap_ghz: f64,
}

impl QuasiparticleParams {
    pub fn new(t_bath_k: f64, gap_ghz: f64) -> Result<Self, CoherenceError> {
        if !(t_bath_k > 0.0 && gap_ghz > 0.0) {
            return Err(CoherenceError::InvalidParams(
                "bath temperature and gap must be positive".into(),
            ));
        }
        Ok(Self { t_bath_k, gap_ghz })
    }

    /// Thermal-equilibrium normalized quasiparticle density
    /// sqrt(2 pi kB T / Delta) exp(-Delta / kB T).
    pub fn x_qp(&self) -> f64 {
        let t = thermal_freq_ghz(self.t_bath_k);
        (2.0 * std::f64::consts::PI * t / self.gap_ghz).sqrt() * (-self.gap_ghz / t).exp()
    }
}

/// Photon-shot-noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseParams {
    /// Dispersive shift [GHz].
    pub chi_ghz: f64,
    /// Cavity linewidth f_c/Q_tot [GHz] (ordinary-frequency convention).
    pub kappa_ghz: f64,
    /// Effective cavity temperature [K].
    pub t_cavity_k: f64,
    /// Cavity frequency [GHz].
    pub f_cavity_ghz: f64,
}

impl ShotNoiseParams {
    pub fn new(
        chi_ghz: f64,
        kappa_ghz: f64,
        t_cavity_k: f64,
        f_cavity_ghz: f64,
    ) -> Result<Self, CoherenceError> {
        if !(kappa_ghz > 0.0) || t_cavity_k < 0.0 || !(f_cavity_ghz > 0.0) {
            return Err(CoherenceError::InvalidParams(
                "kappa and f_cavity must be positive, T_cavity non-negative".into(),
            ));
        }
        Ok(Self { chi_ghz, kappa_ghz, t_cavity_k, f_cavity_ghz })
    }

    pub fn n_thermal(&self) -> f64 {
        bose_occupation(self.f_cavity_ghz, self.t_cavity_k)
    }
}

/// Purcell limit T1 = delta^2 / (g^2 kappa) [us]. Vanishing coupling makes
/// the limit unbounded, reported as infinity.
pub fn purcell_t1(delta_ghz: f64, g_ghz: f64, kappa_ghz: f64) -> Result<f64, CoherenceError> {
    if delta_ghz == 0.0 {
        return Err(CoherenceError::ZeroDetuning);
    }
    if !(kappa_ghz > 0.0) || g_ghz < 0.0 {
        return Err(CoherenceError::InvalidParams("kappa > 0 and g >= 0 required".into()));
    }
    if g_ghz == 0.0 {
        return Ok(f64::INFINITY);
    }
    // delta^2/(g^2 kappa) has dimension 1/GHz = ns
    Ok(delta_ghz * delta_ghz / (g_ghz * g_ghz * kappa_ghz) / GHZ_AS_PER_US)
}

/// Dielectric-background limit T1 = Q_b / (2 pi f01) [us].
pub fn dielectric_background_t1(f01_ghz: f64, q_background: f64) -> Result<f64, CoherenceError> {
    if !(f01_ghz > 0.0 && q_background > 0.0) {
        return Err(CoherenceError::InvalidParams("f01 and Q_b must be positive".into()));
    }
    Ok(q_background / (2.0 * std::f64::consts::PI * f01_ghz) / GHZ_AS_PER_US)
}

/// Quasiparticle relaxation rate
/// Gamma_qp = 2 (8 E_J E_C x_qp / f01) sqrt(2 Delta / (h f01)) [1/us],
/// with the gap as a frequency so the square root is dimensionless.
pub fn quasiparticle_rate(
    ej_ghz: f64,
    ec_ghz: f64,
    f01_ghz: f64,
    qp: &QuasiparticleParams,
) -> Result<f64, CoherenceError> {
    if !(ej_ghz > 0.0 && ec_ghz > 0.0 && f01_ghz > 0.0) {
        return Err(CoherenceError::InvalidParams("ej, ec, f01 must be positive".into()));
    }
    let rate_ghz =
        2.0 * (8.0 * ej_ghz * ec_ghz * qp.x_qp() / f01_ghz) * (2.0 * qp.gap_ghz / f01_ghz).sqrt();
    Ok(rate_ghz * GHZ_AS_PER_US)
}

/// Depinning crossover function F(x, eps) = (eps + x^2) / (1 + x^2).
pub fn depinning_f(x: f64, epsilon: f64) -> f64 {
    (epsilon + x * x) / (1.0 + x * x)
}

/// Vortex slope p(B_par) = p0 GL^-1(B_par) F(f(B_par)/f_d) / F(f(0)/f_d)
/// [1/us/mT]. By construction p(0) = p0.
pub fn vortex_slope(
    b_par_t: f64,
    vp: &VortexParams,
    f01_at_bpar_ghz: f64,
    f01_zero_ghz: f64,
    b_crit_par_t: f64,
) -> Result<f64, FieldError> {
    // GL factor through the shared gap model; errors past the critical field
    let gl = gl_gap(1.0, b_par_t, b_crit_par_t)?;
    let f_ratio = depinning_f(f01_at_bpar_ghz / vp.f_depin_ghz, vp.creep_epsilon)
        / depinning_f(f01_zero_ghz / vp.f_depin_ghz, vp.creep_epsilon);
    Ok(vp.p0_per_us_mt / gl * f_ratio)
}

/// Vortex loss rate Gamma_v = sqrt(p^2 Btilde^2 + q^2) - q [1/us], with
/// Btilde = B_perp - B_0 in mT and the parallel-field-dependent slope.
pub fn vortex_rate(
    b_perp_t: f64,
    b_par_t: f64,
    vp: &VortexParams,
    f01_at_bpar_ghz: f64,
    f01_zero_ghz: f64,
    b_crit_par_t: f64,
) -> Result<f64, FieldError> {
    let p = vortex_slope(b_par_t, vp, f01_at_bpar_ghz, f01_zero_ghz, b_crit_par_t)?;
    let bt_mt = (b_perp_t - vp.b0_offset_t) * T_TO_MT;
    let q = vp.q_per_us;
    Ok((p * p * bt_mt * bt_mt + q * q).sqrt() - q)
}

/// Photon-shot-noise dephasing rate
/// Gamma = (kappa/2) Re[sqrt((1 + 2i chi/kappa)^2 + 8i chi n_th/kappa) - 1]
/// [1/us]. Exact complex arithmetic; zero at chi = 0 and at T = 0.
pub fn photon_shotnoise_rate(sp: &ShotNoiseParams) -> f64 {
    let n_th = sp.n_thermal();
    let x = Complex64::new(0.0, 2.0 * sp.chi_ghz / sp.kappa_ghz);
    let radicand = (Complex64::new(1.0, 0.0) + x) * (Complex64::new(1.0, 0.0) + x)
        + Complex64::new(0.0, 8.0 * sp.chi_ghz * n_th / sp.kappa_ghz);
    let gamma_ghz = sp.kappa_ghz / 2.0 * (radicand.sqrt() - Complex64::new(1.0, 0.0)).re;
    gamma_ghz * GHZ_AS_PER_US
}

/// Small-chi expansion 4 chi^2 n_th (n_th + 1) / kappa [1/us], the series
/// cross-check for the exact expression.
pub fn photon_shotnoise_small_chi(sp: &ShotNoiseParams) -> f64 {
    let n_th = sp.n_thermal();
    4.0 * sp.chi_ghz * sp.chi_ghz * n_th * (n_th + 1.0) / sp.kappa_ghz * GHZ_AS_PER_US
}

/// Pure dephasing extracted from measured times: 1/T2 - 1/(2 T1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureDephasing {
    /// Gamma_phi [1/us]; may be slightly negative from measurement noise.
    pub rate_per_us: f64,
    /// Set when the arithmetic produced a negative rate. Returned as-is so
    /// scatter is visible downstream; never clamped.
    pub negative_artifact: bool,
}

pub fn pure_dephasing(t2_us: f64, t1_us: f64) -> Result<PureDephasing, CoherenceError> {
    if !(t2_us > 0.0 && t1_us > 0.0) {
        return Err(CoherenceError::InvalidParams("T1 and T2 must be positive".into()));
    }
    let rate = 1.0 / t2_us - 1.0 / (2.0 * t1_us);
    Ok(PureDephasing { rate_per_us: rate, negative_artifact: rate < 0.0 })
}

/// |df01/dB_perp| of a SQUID transmon [GHz/T], from the analytic arch
/// derivative chained with a Richardson-extrapolated central difference of
/// the eigensolver (f01 as a function of E_J with E_C tied through the
/// relation).
pub fn sensitivity(
    squid: &SquidParams,
    relation: &EcEjRelation,
    b_perp_t: f64,
) -> Result<f64, CoherenceError> {
    let ej = ej_squid(squid, b_perp_t);
    let dej_db = ej_squid_derivative(squid, b_perp_t);
    let df_dej = df01_dej(ej, relation)?;
    Ok((df_dej * dej_db).abs())
}

/// d f01 / d E_J along the E_C(E_J) relation, central difference with step
/// 1e-4 E_J, Richardson-extrapolated from steps h and h/2.
fn df01_dej(ej_ghz: f64, relation: &EcEjRelation) -> Result<f64, CoherenceError> {
    if !(ej_ghz > 0.0) {
        return Err(CoherenceError::InvalidParams(format!("ej = {ej_ghz} <= 0")));
    }
    let f01_of = |ej: f64| -> Result<f64, CoherenceError> {
        let ec = relation.ec_ghz(ej);
        if ec <= 0.0 {
            return Err(CoherenceError::InvalidParams(format!(
                "relation gives ec <= 0 at ej = {ej}"
            )));
        }
        Ok(transitions_unchecked(ej, ec, 0.0, crate::cpb::DEFAULT_TRUNCATION)
            .map_err(|e| CoherenceError::InvalidParams(e.to_string()))?
            .0)
    };
    let h = 1e-4 * ej_ghz;
    let d_h = (f01_of(ej_ghz + h)? - f01_of(ej_ghz - h)?) / (2.0 * h);
    let d_h2 = (f01_of(ej_ghz + h / 2.0)? - f01_of(ej_ghz - h / 2.0)?) / h;
    // central differences carry O(h^2) error: Richardson combination
    Ok((4.0 * d_h2 - d_h) / 3.0)
}

/// Linear regression Gamma_phi = a |df01/dB_perp| + b over measured points.
/// Returns (a, b, residuals, sigma_a): `a` is the slow-noise amplitude,
/// `b` the flux-independent floor.
pub fn sensitivity_regression(
    points: &[(f64, f64)],
) -> Result<(f64, f64, Vec<f64>, f64), FitError> {
    if points.len() < 3 {
        return Err(FitError::Underdetermined(format!(
            "need >= 3 (sensitivity, rate) points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread == 0.0 {
        return Err(FitError::DegenerateInput(
            "all sensitivities equal: slope unidentifiable".into(),
        ));
    }
    let (a, b, residuals) = ols_line(&xs, &ys)?;
    let a_sigma = ols_slope_sigma(&xs, &residuals);
    Ok((a, b, residuals, a_sigma))
}

/// Switches for the additive T1 budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetChannels {
    pub purcell: bool,
    pub dielectric: bool,
    pub quasiparticle: bool,
    pub vortex: bool,
}

impl Default for BudgetChannels {
    fn default() -> Self {
        Self { purcell: true, dielectric: true, quasiparticle: true, vortex: true }
    }
}

/// Everything the budget needs at one field point.
#[derive(Debug, Clone, Copy)]
pub struct BudgetInput {
    pub f01_ghz: f64,
    pub f01_zero_field_ghz: f64,
    pub ej_ghz: f64,
    pub ec_ghz: f64,
    pub b_par_t: f64,
    pub b_perp_t: f64,
    pub b_crit_par_t: f64,
    /// Qubit-cavity coupling [GHz].
    pub g_ghz: f64,
    pub f_cavity_ghz: f64,
    /// kappa = f_c/Q_tot [GHz].
    pub kappa_ghz: f64,
    pub q_background: f64,
    pub t_cavity_k: f64,
    pub quasiparticle: QuasiparticleParams,
    pub vortex: VortexParams,
    /// Dispersive shift for the shot-noise channel [GHz].
    pub chi_ghz: f64,
    /// Slow-noise amplitude a for the Ramsey sensitivity term
    /// [1/us per GHz/mT]; zero for a single JJ.
    pub ramsey_slope_a: f64,
    /// Local |df01/dB_perp| [GHz/mT]; zero for a single JJ.
    pub sensitivity_ghz_per_mt: f64,
}

/// Per-channel rate decomposition at one field point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateBudget {
    pub purcell_per_us: f64,
    pub dielectric_per_us: f64,
    pub quasiparticle_per_us: f64,
    pub vortex_per_us: f64,
    /// Sum of the enabled relaxation channels [1/us].
    pub gamma1_per_us: f64,
    pub t1_us: f64,
    pub photon_per_us: f64,
    /// Slow-flux-noise Ramsey term a |df01/dB| [1/us].
    pub flux_ramsey_per_us: f64,
    pub t2_echo_us: f64,
    pub t2_star_us: f64,
    /// Charge dispersion [GHz], reported as a proxy bound on charge-noise
    /// dephasing; never folded into the rate sums.
    pub charge_dispersion_ghz: f64,
}

/// Additive coherence budget: total Gamma1 is the sum of the enabled
/// channels, so disabling an active channel strictly lowers it.
pub fn budget(input: &BudgetInput, channels: &BudgetChannels) -> Result<RateBudget, CoherenceError> {
    let delta = input.f01_ghz - input.f_cavity_ghz;
    let purcell = 1.0 / purcell_t1(delta, input.g_ghz, input.kappa_ghz)?;
    let dielectric = 1.0 / dielectric_background_t1(input.f01_ghz, input.q_background)?;
    let quasiparticle =
        quasiparticle_rate(input.ej_ghz, input.ec_ghz, input.f01_ghz, &input.quasiparticle)?;
    let vortex = vortex_rate(
        input.b_perp_t,
        input.b_par_t,
        &input.vortex,
        input.f01_ghz,
        input.f01_zero_field_ghz,
        input.b_crit_par_t,
    )?;

    let mut gamma1 = 0.0;
    if channels.purcell {
        gamma1 += purcell;
    }
    if channels.dielectric {
        gamma1 += dielectric;
    }
    if channels.quasiparticle {
        gamma1 += quasiparticle;
    }
    if channels.vortex {
        gamma1 += vortex;
    }

    let photon = photon_shotnoise_rate(&ShotNoiseParams::new(
        input.chi_ghz,
        input.kappa_ghz,
        input.t_cavity_k,
        input.f_cavity_ghz,
    )?);
    let flux_ramsey = input.ramsey_slope_a * input.sensitivity_ghz_per_mt;

    let gamma2_echo = gamma1 / 2.0 + photon;
    let gamma2_star = gamma2_echo + flux_ramsey;

    let charge_dispersion_ghz =
        crate::cpb::charge_dispersion(input.ej_ghz, input.ec_ghz, crate::cpb::DEFAULT_TRUNCATION)
            .map_err(|e| CoherenceError::InvalidParams(e.to_string()))?;

    Ok(RateBudget {
        purcell_per_us: purcell,
        dielectric_per_us: dielectric,
        quasiparticle_per_us: quasiparticle,
        vortex_per_us: vortex,
        gamma1_per_us: gamma1,
        t1_us: 1.0 / gamma1,
        photon_per_us: photon,
        flux_ramsey_per_us: flux_ramsey,
        t2_echo_us: 1.0 / gamma2_echo,
        t2_star_us: 1.0 / gamma2_star,
        charge_dispersion_ghz,
    })
}
