//! Extraction of E_J and E_C from measured transitions: per-point pair
//! fits, the robust E_C-E_J correlation, and charge-parity envelopes for
//! the low-E_J/E_C regime.
//!
//! Pair fits and envelope fits evaluate the charge-basis Hamiltonian at
//! n_g = 0; the parity pipeline is the one that owns n_g-dependence.

use super::linear::{ols_line, theil_sen};
use super::lm::lsq_minimize;
use super::{EcEjRelation, FitError, FitOptions, FitResult};
use crate::cpb::{transitions_unchecked, DEFAULT_TRUNCATION};

/// Width of the inlier band around the linear E_C(E_J) trend [GHz].
pub const CORRELATION_INLIER_BAND_GHZ: f64 = 0.010;

/// Invert f01 to E_J with E_C tied to E_J through `relation`.
/// Monotone bisection on [1e-4, 2000] GHz.
pub fn ej_from_f01(f01_ghz: f64, relation: &EcEjRelation, k: usize) -> Result<f64, FitError> {
    if !(f01_ghz > 0.0) || !f01_ghz.is_finite() {
        return Err(FitError::DegenerateInput(format!("f01 = {f01_ghz}")));
    }
    let f = |ej: f64| -> Result<f64, FitError> {
        let ec = relation.ec_ghz(ej);
        if ec <= 0.0 {
            return Err(FitError::ModelEval(format!("relation gives ec <= 0 at ej = {ej}")));
        }
        Ok(transitions_unchecked(ej, ec, 0.0, k)
            .map_err(|e| FitError::ModelEval(e.to_string()))?
            .0)
    };
    let (mut lo, mut hi) = (1e-4, 2000.0);
    if f(lo)? > f01_ghz || f(hi)? < f01_ghz {
        return Err(FitError::NoPhysicalSolution(format!(
            "f01 = {f01_ghz} GHz outside the invertible range"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < f01_ghz {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// (E_J, E_C) reproducing a measured (f01, f02/2) pair to 1e-6 GHz.
///
/// Initialized from the deep-transmon identities ec ~ 2 (f01 - f02/2),
/// ej ~ (f01 + ec)^2 / (8 ec); a coarse grid takes over when the measured
/// anharmonicity is non-negative (low-E_J/E_C regime).
pub fn fit_ej_ec_from_pair(
    f01_ghz: f64,
    f02_half_ghz: f64,
    k: usize,
) -> Result<(f64, f64, FitResult), FitError> {
    if !(f01_ghz > 0.0 && f02_half_ghz > 0.0) {
        return Err(FitError::DegenerateInput("transitions must be positive".into()));
    }
    // Loose physicality: f02/2 above f01 by more than f01 itself has no CPB
    // solution (the anharmonicity cannot exceed the harmonic spacing).
    if f02_half_ghz > 2.0 * f01_ghz {
        return Err(FitError::NoPhysicalSolution(format!(
            "f02/2 = {f02_half_ghz} vs f01 = {f01_ghz}"
        )));
    }

    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        let (ej, ec) = (p[0], p[1]);
        if ej <= 0.0 || ec <= 0.0 {
            return None;
        }
        let (f01, f02h) = transitions_unchecked(ej, ec, 0.0, k).ok()?;
        Some(vec![f01 - f01_ghz, f02h - f02_half_ghz])
    };

    let mut starts: Vec<[f64; 2]> = Vec::new();
    let anharm_ec = 2.0 * (f01_ghz - f02_half_ghz);
    if anharm_ec > 1e-3 {
        let ej0 = (f01_ghz + anharm_ec).powi(2) / (8.0 * anharm_ec);
        starts.push([ej0, anharm_ec]);
    }
    // Coarse fallbacks across the ratio range; first convergent start wins.
    for ratio in [2.0f64, 5.0, 10.0, 30.0] {
        // With f01 ~ sqrt(8 ej ec) - ec and ej = ratio ec:
        // ec ~ f01 / (sqrt(8 ratio) - 1).
        let ec0 = f01_ghz / ((8.0 * ratio).sqrt() - 1.0);
        starts.push([ratio * ec0, ec0]);
    }

    let opts = FitOptions {
        bounds: Some(vec![(1e-6, 5e3), (1e-6, 50.0)]),
        ..FitOptions::default()
    };
    let mut last_err = None;
    for start in &starts {
        match lsq_minimize(residual, start, &opts) {
            Ok(fit) if fit.residual_rms < 1e-6 && fit.converged() => {
                return Ok((fit.parameters[0], fit.parameters[1], fit));
            }
            Ok(_) => continue,
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        FitError::NoPhysicalSolution(format!(
            "no (ej, ec) reproduces f01 = {f01_ghz}, f02/2 = {f02_half_ghz} to 1e-6 GHz"
        ))
    }))
}

/// Robust linear E_C(E_J) fit with iterative inlier selection.
#[derive(Debug, Clone)]
pub struct CorrelationFit {
    pub relation: EcEjRelation,
    /// Fraction of input pairs inside the inlier band at convergence.
    pub inlier_fraction: f64,
    /// Indices of pairs outside the band.
    pub rejected_points: Vec<usize>,
    /// Set when fewer than half the pairs survive in the band.
    pub unreliable: bool,
}

/// Fit the linear E_C-E_J trend, iterating membership of a fixed 10 MHz
/// band around the line. Seeded by Theil-Sen so gross outliers cannot steer
/// the first iteration.
pub fn fit_ec_ej_correlation(pairs: &[(f64, f64)]) -> Result<CorrelationFit, FitError> {
    if pairs.len() < 5 {
        return Err(FitError::Underdetermined(format!(
            "need >= 5 (ej, ec) pairs, got {}",
            pairs.len()
        )));
    }
    let ej: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ec: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    let (mut slope, mut intercept) = theil_sen(&ej, &ec)?;
    let mut inliers: Vec<usize> = Vec::new();
    for _ in 0..50 {
        let new_inliers: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, (e, c))| (c - (slope * e + intercept)).abs() <= CORRELATION_INLIER_BAND_GHZ)
            .map(|(i, _)| i)
            .collect();
        if new_inliers.len() < 2 {
            break;
        }
        let xs: Vec<f64> = new_inliers.iter().map(|&i| ej[i]).collect();
        let ys: Vec<f64> = new_inliers.iter().map(|&i| ec[i]).collect();
        match ols_line(&xs, &ys) {
            Ok((s, i, _)) => {
                let stable = new_inliers == inliers;
                slope = s;
                intercept = i;
                inliers = new_inliers;
                if stable {
                    break;
                }
            }
            Err(FitError::DegenerateInput(_)) => {
                // all-constant ej among inliers: keep Theil-Sen estimate
                inliers = new_inliers;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let inlier_fraction = inliers.len() as f64 / pairs.len() as f64;
    let rejected_points: Vec<usize> =
        (0..pairs.len()).filter(|i| !inliers.contains(i)).collect();
    Ok(CorrelationFit {
        relation: EcEjRelation { slope, intercept_ghz: intercept },
        inlier_fraction,
        rejected_points,
        unreliable: inlier_fraction < 0.5,
    })
}

/// Charge-parity envelope fit result.
#[derive(Debug, Clone)]
pub struct ParitySplitFit {
    pub ej_ghz: f64,
    pub ec_ghz: f64,
    /// (f01 at n_g = 0.5, f01 at n_g = 0): the band that bounds the peaks.
    pub band_ghz: (f64, f64),
    /// Set when all peaks are consistent with a single branch, leaving the
    /// envelope under-constrained.
    pub under_constrained: bool,
}

/// Largest E_J (with E_C tied through `relation`) whose parity branches
/// still bound every peak: the tightest envelope. The lower branch is
/// monotone in E_J, so the binding constraint is solved by bisection.
pub fn fit_parity_split(
    peaks_ghz: &[f64],
    relation: &EcEjRelation,
) -> Result<ParitySplitFit, FitError> {
    if peaks_ghz.is_empty() {
        return Err(FitError::Underdetermined("no peaks".into()));
    }
    if peaks_ghz.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(FitError::DegenerateInput("peaks must be positive and finite".into()));
    }
    let k = DEFAULT_TRUNCATION;
    let min_pk = peaks_ghz.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_pk = peaks_ghz.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let branches = |ej: f64| -> Result<(f64, f64), FitError> {
        let ec = relation.ec_ghz(ej);
        if ec <= 0.0 {
            return Err(FitError::ModelEval(format!("relation gives ec <= 0 at ej = {ej}")));
        }
        let even = transitions_unchecked(ej, ec, 0.0, k)
            .map_err(|e| FitError::ModelEval(e.to_string()))?
            .0;
        let odd = transitions_unchecked(ej, ec, 0.5, k)
            .map_err(|e| FitError::ModelEval(e.to_string()))?
            .0;
        Ok((odd.min(even), odd.max(even)))
    };

    // Maximal ej with lower(ej) <= min_pk. lower is increasing in ej.
    let (mut lo, mut hi) = (1e-4, 2000.0);
    if branches(lo)?.0 > min_pk {
        return Err(FitError::EnvelopeInfeasible(format!(
            "lowest peak {min_pk} GHz below the smallest reachable lower branch"
        )));
    }
    if branches(hi)?.0 < min_pk {
        return Err(FitError::EnvelopeInfeasible(format!(
            "lowest peak {min_pk} GHz above the largest reachable lower branch"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if branches(mid)?.0 <= min_pk {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    let ej = 0.5 * (lo + hi);
    let ec = relation.ec_ghz(ej);
    let (lower, upper) = branches(ej)?;

    let tol = 1e-6 * max_pk.max(1.0);
    if max_pk > upper + tol {
        return Err(FitError::EnvelopeInfeasible(format!(
            "highest peak {max_pk} GHz above the upper branch {upper} GHz of the tightest envelope"
        )));
    }

    // Both branches must be represented for the envelope to pin E_J from
    // both sides; otherwise flag.
    let band = (upper - lower).max(1e-12);
    let near_lower = peaks_ghz.iter().any(|p| (p - lower).abs() <= 0.1 * band + tol);
    let near_upper = peaks_ghz.iter().any(|p| (upper - p).abs() <= 0.1 * band + tol);

    Ok(ParitySplitFit {
        ej_ghz: ej,
        ec_ghz: ec,
        band_ghz: (lower, upper),
        under_constrained: !(near_lower && near_upper),
    })
}
