//! Geometry-offset fits: magnet-axis alignment from SQUID-arch offsets and
//! the perpendicular-field offset B_0 of maximal T_1.

use super::linear::{ols_line, ols_slope_sigma, theil_sen};
use super::lm::lsq_minimize;
use super::{FitError, FitOptions, FitResult};
use crate::coherence::VortexParams;
use crate::units::T_TO_MT;

/// One row of an alignment scan: the arch offset along the perpendicular
/// axis measured at a given in-plane coil setting.
#[derive(Debug, Clone, Copy)]
pub struct AlignmentPoint {
    /// In-plane coil field for this row [T].
    pub b_inplane_t: f64,
    /// Fitted SQUID-arch offset along the perpendicular axis [T].
    pub arch_offset_t: f64,
}

/// Alignment fit: the linear drift of the arch offset with the in-plane
/// coil gives the misalignment angle and the software rotation correcting
/// it.
#[derive(Debug, Clone)]
pub struct AlignmentFit {
    /// Misalignment angle, arctan of the offset-vs-field slope [rad].
    pub misalignment_angle_rad: f64,
    /// Slope dB_offset/dB_inplane: the perpendicular correction to apply
    /// per unit of in-plane field (dimensionless).
    pub correction_slope: f64,
    /// Residual offset at zero in-plane field [T].
    pub intercept_t: f64,
    /// 1-sigma uncertainty of the angle [rad].
    pub angle_sigma_rad: f64,
    /// Rows excluded as flux jumps (residual beyond half a period).
    pub excluded_rows: Vec<usize>,
}

/// Fit arch offset versus in-plane field, excluding rows whose residual
/// exceeds half the SQUID period (flux jumps). Theil-Sen seeds the line so
/// jumped rows cannot bias the first pass.
pub fn fit_alignment(
    points: &[AlignmentPoint],
    squid_period_t: f64,
) -> Result<AlignmentFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::Underdetermined(format!(
            "need >= 3 alignment rows, got {}",
            points.len()
        )));
    }
    if !(squid_period_t > 0.0) {
        return Err(FitError::DegenerateInput("SQUID period must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.b_inplane_t).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.arch_offset_t).collect();

    let (mut slope, mut intercept) = theil_sen(&xs, &ys)?;
    let mut excluded: Vec<usize> = Vec::new();
    for _ in 0..20 {
        let new_excluded: Vec<usize> = points
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                (p.arch_offset_t - (slope * p.b_inplane_t + intercept)).abs()
                    > 0.5 * squid_period_t
            })
            .map(|(i, _)| i)
            .collect();
        let keep: Vec<usize> =
            (0..points.len()).filter(|i| !new_excluded.contains(i)).collect();
        if keep.len() < 3 {
            return Err(FitError::Underdetermined(
                "fewer than 3 rows survive flux-jump exclusion".into(),
            ));
        }
        let kx: Vec<f64> = keep.iter().map(|&i| xs[i]).collect();
        let ky: Vec<f64> = keep.iter().map(|&i| ys[i]).collect();
        let (s, i2, _) = ols_line(&kx, &ky)?;
        let stable = new_excluded == excluded;
        slope = s;
        intercept = i2;
        excluded = new_excluded;
        if stable {
            break;
        }
    }

    let keep: Vec<usize> = (0..points.len()).filter(|i| !excluded.contains(i)).collect();
    let kx: Vec<f64> = keep.iter().map(|&i| xs[i]).collect();
    let ky: Vec<f64> = keep.iter().map(|&i| ys[i]).collect();
    let (_, _, resid) = ols_line(&kx, &ky)?;
    let slope_sigma = ols_slope_sigma(&kx, &resid);

    Ok(AlignmentFit {
        misalignment_angle_rad: slope.atan(),
        correction_slope: slope,
        intercept_t: intercept,
        // d(atan s)/ds = 1/(1+s^2)
        angle_sigma_rad: slope_sigma / (1.0 + slope * slope),
        excluded_rows: excluded,
    })
}

/// B_0 fit output.
#[derive(Debug, Clone)]
pub struct B0Fit {
    /// Perpendicular-field offset of maximal T_1 [T].
    pub b0_t: f64,
    /// Non-vortex background rate [1/us].
    pub gamma0_per_us: f64,
    /// Fitted linear-regime slope [1/us/mT].
    pub p_per_us_mt: f64,
    /// Peak sits on the first or last scanned point.
    pub peak_at_boundary: bool,
    pub fit: FitResult,
}

/// Fit Gamma(B_perp) = Gamma_0 + sqrt(p^2 (B - B_0)^2 + q^2) - q to 1/T_1.
/// q is taken from the prior (globally fixed in the vortex model); Gamma_0,
/// p and B_0 are free.
pub fn fit_b0_offset(
    points: &[(f64, f64)],
    vp_prior: &VortexParams,
) -> Result<B0Fit, FitError> {
    if points.len() < 4 {
        return Err(FitError::Underdetermined(format!(
            "need >= 4 (b_perp, t1) points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(_, t1)| !(*t1 > 0.0)) {
        return Err(FitError::DegenerateInput("T1 values must be positive".into()));
    }
    let q = vp_prior.q_per_us;

    // peak location initializer + boundary check
    let (imax, _) = points
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, (_, t1))| {
            if *t1 > bv {
                (i, *t1)
            } else {
                (bi, bv)
            }
        });
    let peak_at_boundary = imax == 0 || imax == points.len() - 1;

    let b0_init = points[imax].0;
    let gamma_min = 1.0 / points[imax].1;
    let p_init = vp_prior.p0_per_us_mt;

    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        let (g0, slope, b0) = (p[0], p[1], p[2]);
        if g0 < 0.0 || slope <= 0.0 {
            return None;
        }
        Some(
            points
                .iter()
                .map(|(b, t1)| {
                    let bt_mt = (b - b0) * T_TO_MT;
                    let gv = (slope * slope * bt_mt * bt_mt + q * q).sqrt() - q;
                    g0 + gv - 1.0 / t1
                })
                .collect(),
        )
    };

    let opts = FitOptions {
        bounds: Some(vec![(0.0, f64::INFINITY), (1e-9, f64::INFINITY), (-1.0, 1.0)]),
        ..FitOptions::default()
    };
    let fit = lsq_minimize(residual, &[gamma_min, p_init, b0_init], &opts)?;

    Ok(B0Fit {
        b0_t: fit.parameters[2],
        gamma0_per_us: fit.parameters[0],
        p_per_us_mt: fit.parameters[1],
        peak_at_boundary,
        fit,
    })
}

/// Angle of the linear B_0(B_par) trend [rad], with its 1-sigma uncertainty.
pub fn b0_trend_angle(points: &[(f64, f64)]) -> Result<(f64, f64), FitError> {
    if points.len() < 2 {
        return Err(FitError::Underdetermined("need >= 2 (b_par, b0) points".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (slope, _, resid) = ols_line(&xs, &ys)?;
    let sigma = ols_slope_sigma(&xs, &resid);
    Ok((slope.atan(), sigma / (1.0 + slope * slope)))
}
