//! SQUID flux-arch fits: recover (E_J,sum, alpha, period, offset) from
//! f01 (and optionally f02/2) versus perpendicular field, with E_C tied to
//! E_J through the linear correlation.
//!
//! In the low-E_J/E_C regime the plain transitions are parity-split and
//! the per-point charge-parity envelope yields E_J estimates instead of
//! frequencies; those enter the same fit as energy-space points. Both kinds
//! can be mixed, which is exactly the situation on sweeps where only the
//! arch bottom is split.

use super::lm::lsq_minimize;
use super::spectrum::ej_from_f01;
use super::{EcEjRelation, FitError, FitOptions, FitResult};
use crate::cpb::{transitions_unchecked, DEFAULT_TRUNCATION};
use crate::field::{ej_squid, SquidParams};

/// One spectroscopy point on an arch. When every point in a fit carries an
/// uncertainty the residuals are weighted by 1/sigma; otherwise weighting
/// is uniform.
#[derive(Debug, Clone, Copy)]
pub struct ArchPoint {
    pub b_perp_t: f64,
    pub f01_ghz: f64,
    pub f02_half_ghz: Option<f64>,
    pub sigma_ghz: Option<f64>,
}

/// A parity-regime point: an E_J estimate with an optional propagated
/// uncertainty.
#[derive(Debug, Clone, Copy)]
pub struct ArchEnergyPoint {
    pub b_perp_t: f64,
    pub ej_ghz: f64,
    pub sigma_ghz: Option<f64>,
}

/// Arch fit output.
#[derive(Debug, Clone)]
pub struct ArchFit {
    pub params: SquidParams,
    /// (E_J1, E_J2), E_J1 >= E_J2 [GHz].
    pub junction_energies_ghz: (f64, f64),
    pub fit: FitResult,
}

/// Periodogram-based period and phase estimate on an arbitrary grid. The
/// arch is periodic with one maximum per period, so the fundamental sits at
/// one cycle per period; the phase of the fundamental locates the top
/// sweetspot.
fn periodogram_estimate(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (b_min, b_max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let span = b_max - b_min;

    let power_at = |period: f64| {
        let w = 2.0 * std::f64::consts::PI / period;
        let (mut c, mut s) = (0.0, 0.0);
        for p in points {
            let y = p.1 - mean_y;
            c += y * (w * p.0).cos();
            s += y * (w * p.0).sin();
        }
        (c * c + s * s, f64::atan2(s, c) / w)
    };

    let mut best = (f64::NEG_INFINITY, span, 0.0);
    let steps = 600;
    for i in 0..steps {
        let period = span / 10.0 + (2.0 * span - span / 10.0) * i as f64 / (steps - 1) as f64;
        let (power, offset) = power_at(period);
        if power > best.0 {
            best = (power, period, offset);
        }
    }
    (best.1, best.2)
}

/// Fit the flux arch through the charge-basis solver.
///
/// `points` are plain (un-split) transitions modeled at n_g = 0;
/// `energy_points` are (B_perp [T], E_J [GHz]) estimates from the
/// charge-parity envelope, entering as energy-space residuals. The two sets
/// may be mixed; together they must span at least half a period.
pub fn fit_squid_arch(
    points: &[ArchPoint],
    energy_points: &[ArchEnergyPoint],
    relation: &EcEjRelation,
    opts: &FitOptions,
) -> Result<ArchFit, FitError> {
    let n_total = points.len() + energy_points.len();
    if n_total < 5 {
        return Err(FitError::Underdetermined(format!(
            "need >= 5 arch points, got {n_total}"
        )));
    }
    let all_b: Vec<f64> = points
        .iter()
        .map(|p| p.b_perp_t)
        .chain(energy_points.iter().map(|p| p.b_perp_t))
        .collect();
    let span = {
        let (lo, hi) = all_b
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(*b), hi.max(*b)));
        hi - lo
    };

    // weighted residuals only when every point carries an uncertainty
    let weighted = points.iter().all(|p| p.sigma_ghz.is_some_and(|s| s > 0.0))
        && energy_points.iter().all(|p| p.sigma_ghz.is_some_and(|s| s > 0.0));

    // periodogram series: whichever representation has more points
    let series: Vec<(f64, f64)> = if points.len() >= energy_points.len() {
        points.iter().map(|p| (p.b_perp_t, p.f01_ghz)).collect()
    } else {
        energy_points.iter().map(|p| (p.b_perp_t, p.ej_ghz)).collect()
    };
    let (period0, offset0) = periodogram_estimate(&series);

    // extremes -> initial sum and asymmetry
    let (ej_top, ej_bot) = if energy_points.len() > points.len() {
        let hi = energy_points.iter().map(|p| p.ej_ghz).fold(f64::NEG_INFINITY, f64::max);
        let lo = energy_points.iter().map(|p| p.ej_ghz).fold(f64::INFINITY, f64::min);
        (hi, lo)
    } else {
        let f_top = points.iter().map(|p| p.f01_ghz).fold(f64::NEG_INFINITY, f64::max);
        let f_bot = points.iter().map(|p| p.f01_ghz).fold(f64::INFINITY, f64::min);
        (
            ej_from_f01(f_top, relation, DEFAULT_TRUNCATION)?,
            ej_from_f01(f_bot, relation, DEFAULT_TRUNCATION)?,
        )
    };
    let ej_sum0 = ej_top;
    let alpha0 = (ej_bot / ej_top).clamp(0.01, 0.99);

    let k = DEFAULT_TRUNCATION;
    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        let squid = SquidParams {
            ej_sum_ghz: p[0],
            asymmetry_alpha: p[1],
            b_phi0_squid_t: p[2],
            b_perp_offset_t: p[3],
        };
        if !(squid.ej_sum_ghz > 0.0)
            || !(0.0..=1.0).contains(&squid.asymmetry_alpha)
            || !(squid.b_phi0_squid_t > 0.0)
        {
            return None;
        }
        let mut r = Vec::with_capacity(points.len() * 2 + energy_points.len());
        for pt in points {
            let ej = ej_squid(&squid, pt.b_perp_t);
            let ec = relation.ec_ghz(ej);
            if ec <= 0.0 || ej <= 0.0 {
                return None;
            }
            let w = if weighted { 1.0 / pt.sigma_ghz.unwrap() } else { 1.0 };
            let (f01, f02h) = transitions_unchecked(ej, ec, 0.0, k).ok()?;
            r.push(w * (f01 - pt.f01_ghz));
            if let Some(d) = pt.f02_half_ghz {
                r.push(w * (f02h - d));
            }
        }
        for pt in energy_points {
            let w = if weighted { 1.0 / pt.sigma_ghz.unwrap() } else { 1.0 };
            r.push(w * (ej_squid(&squid, pt.b_perp_t) - pt.ej_ghz));
        }
        Some(r)
    };

    let lm_opts = FitOptions {
        bounds: Some(vec![
            (1e-3, 5e3),
            (0.0, 1.0),
            (span / 20.0, 10.0 * span.max(period0)),
            (f64::NEG_INFINITY, f64::INFINITY),
        ]),
        ..opts.clone()
    };

    // With parts of the arch hidden (parity-split bottoms excluded from the
    // plain series) the periodogram can lock onto a harmonic; run the fit
    // from the fundamental and its neighbors and keep the lowest cost. A
    // candidate that reaches the data's noise floor ends the search:
    // weighted residuals sit near rms 1 there, exact data near zero.
    let stop_rms = if weighted { 2.0 } else { 1e-9 };
    let mut best: Option<FitResult> = None;
    for factor in [1.0, 2.0, 0.5] {
        let period_try = period0 * factor;
        if period_try > 2.5 * span || period_try < span / 20.0 {
            continue;
        }
        // re-estimate the phase at this candidate period
        let w = 2.0 * std::f64::consts::PI / period_try;
        let mean_y = series.iter().map(|p| p.1).sum::<f64>() / series.len() as f64;
        let (mut c, mut s) = (0.0, 0.0);
        for p in &series {
            let y = p.1 - mean_y;
            c += y * (w * p.0).cos();
            s += y * (w * p.0).sin();
        }
        let offset_try = if c == 0.0 && s == 0.0 { offset0 } else { f64::atan2(s, c) / w };

        match lsq_minimize(residual, &[ej_sum0, alpha0, period_try, offset_try], &lm_opts) {
            Ok(fit) => {
                let better = best.as_ref().map_or(true, |b| fit.residual_rms < b.residual_rms);
                if better {
                    best = Some(fit);
                }
                if best.as_ref().is_some_and(|b| b.residual_rms < stop_rms) {
                    break;
                }
            }
            Err(_) => continue,
        }
    }
    let fit = best.ok_or_else(|| {
        FitError::Diverged("no period candidate produced a convergent arch fit".into())
    })?;

    let fitted_period = fit.parameters[2];
    if span < 0.5 * fitted_period {
        return Err(FitError::PeriodUnidentifiable { span_t: span, period_t: fitted_period });
    }

    let params = SquidParams {
        ej_sum_ghz: fit.parameters[0],
        asymmetry_alpha: fit.parameters[1],
        b_phi0_squid_t: fit.parameters[2],
        b_perp_offset_t: fit.parameters[3],
    };
    Ok(ArchFit { junction_energies_ghz: params.junction_energies_ghz(), params, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synth_arch(squid: &SquidParams, relation: &EcEjRelation, n: usize) -> Vec<ArchPoint> {
        (0..n)
            .map(|i| {
                let b = -0.4e-3 + 0.8e-3 * i as f64 / (n - 1) as f64;
                let ej = ej_squid(squid, b);
                let ec = relation.ec_ghz(ej);
                let (f01, f02h) = transitions_unchecked(ej, ec, 0.0, 20).unwrap();
                ArchPoint { b_perp_t: b, f01_ghz: f01, f02_half_ghz: Some(f02h), sigma_ghz: None }
            })
            .collect()
    }

    #[test]
    fn noiseless_arch_roundtrip_table_values() {
        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let truth = SquidParams::from_junction_energies(23.5, 6.0, 0.43e-3, 0.05e-3).unwrap();
        let points = synth_arch(&truth, &relation, 41);
        let fit = fit_squid_arch(&points, &[], &relation, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.params.ej_sum_ghz, 29.5, max_relative = 1e-6);
        assert_relative_eq!(fit.params.asymmetry_alpha, 17.5 / 29.5, max_relative = 1e-6);
        assert_relative_eq!(fit.params.b_phi0_squid_t, 0.43e-3, max_relative = 1e-6);
        assert_relative_eq!(fit.params.b_perp_offset_t, 0.05e-3, max_relative = 1e-5);
        let (e1, e2) = fit.junction_energies_ghz;
        assert_relative_eq!(e1, 23.5, max_relative = 1e-6);
        assert_relative_eq!(e2, 6.0, max_relative = 1e-6);
    }

    #[test]
    fn sweetspots_map_to_sum_and_difference() {
        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let truth = SquidParams::from_junction_energies(23.5, 6.0, 0.43e-3, 0.0).unwrap();
        let top = ej_squid(&truth, 0.0);
        let bottom = ej_squid(&truth, 0.43e-3 / 2.0);
        assert_relative_eq!(top, 23.5 + 6.0, max_relative = 1e-12);
        assert_relative_eq!(bottom, 23.5 - 6.0, max_relative = 1e-12);
        // and the fit reproduces them through the spectrum
        let points = synth_arch(&truth, &relation, 31);
        let fit = fit_squid_arch(&points, &[], &relation, &FitOptions::default()).unwrap();
        let (e1, e2) = fit.junction_energies_ghz;
        assert_relative_eq!(e1 + e2, top, max_relative = 1e-5);
        assert_relative_eq!(e1 - e2, bottom, max_relative = 1e-4);
    }

    #[test]
    fn energy_space_points_fit_the_arch() {
        // parity-regime sweep: only per-point E_J estimates are available
        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let truth = SquidParams::from_junction_energies(1.9, 0.71, 0.43e-3, 0.05e-3).unwrap();
        let energy: Vec<ArchEnergyPoint> = (0..41)
            .map(|i| {
                let b = -0.4e-3 + 0.8e-3 * i as f64 / 40.0;
                ArchEnergyPoint { b_perp_t: b, ej_ghz: ej_squid(&truth, b), sigma_ghz: None }
            })
            .collect();
        let fit = fit_squid_arch(&[], &energy, &relation, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.params.ej_sum_ghz, 2.61, max_relative = 1e-6);
        assert_relative_eq!(fit.params.b_phi0_squid_t, 0.43e-3, max_relative = 1e-6);
    }

    #[test]
    fn hidden_bottom_region_still_recovers_period() {
        // only points near the tops survive (the parity-split bottom is
        // excluded): the harmonic multi-start must find the true period
        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let truth = SquidParams::from_junction_energies(3.82, 0.57, 0.43e-3, 0.05e-3).unwrap();
        let points: Vec<ArchPoint> = (0..41)
            .filter_map(|i| {
                let b = -0.4e-3 + 0.8e-3 * i as f64 / 40.0;
                let ej = ej_squid(&truth, b);
                if ej < 0.45 * truth.ej_sum_ghz {
                    return None; // hidden by parity splitting
                }
                let ec = relation.ec_ghz(ej);
                let (f01, _) = transitions_unchecked(ej, ec, 0.0, 20).unwrap();
                Some(ArchPoint { b_perp_t: b, f01_ghz: f01, f02_half_ghz: None, sigma_ghz: None })
            })
            .collect();
        assert!(points.len() >= 15, "test setup: {} points", points.len());
        let fit = fit_squid_arch(&points, &[], &relation, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.params.b_phi0_squid_t, 0.43e-3, max_relative = 1e-5);
        assert_relative_eq!(fit.params.ej_sum_ghz, 4.39, max_relative = 1e-4);
    }

    #[test]
    fn short_span_period_unidentifiable() {
        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let truth = SquidParams::from_junction_energies(23.5, 6.0, 0.43e-3, 0.0).unwrap();
        // only an eighth of a period
        let points: Vec<ArchPoint> = (0..8)
            .map(|i| {
                let b = 0.43e-3 / 8.0 * i as f64 / 8.0;
                let ej = ej_squid(&truth, b);
                let ec = relation.ec_ghz(ej);
                let (f01, f02h) = transitions_unchecked(ej, ec, 0.0, 20).unwrap();
                ArchPoint { b_perp_t: b, f01_ghz: f01, f02_half_ghz: Some(f02h), sigma_ghz: None }
            })
            .collect();
        assert!(matches!(
            fit_squid_arch(&points, &[], &relation, &FitOptions::default()),
            Err(FitError::PeriodUnidentifiable { .. })
        ));
    }
}
