//! Fits of the in-plane field dependence E_J(B_par) = E_J0 GL(B) |sinc|,
//! for a single junction or jointly across several junctions with a shared
//! critical field.
//!
//! SQUID arch fits determine the junction energies only through their sum
//! and |difference|, and the two curves can cross as the field grows. The
//! joint fit therefore accepts sum/|difference| curves directly instead of
//! forcing an assignment onto the data.

use serde::{Deserialize, Serialize};

use super::lm::lsq_minimize;
use super::{FitError, FitOptions, FitResult};
use crate::field::{ej_inplane, JunctionFieldParams};
use crate::units::sinc;

/// How the GL critical field enters a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BcritMode {
    /// Fixed, shared by all junctions.
    Fixed(f64),
    /// A single shared free parameter, started from the given value.
    Free { init_t: f64 },
}

/// What a measured curve represents in terms of the fitted junctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    /// E_J of junction `i` directly.
    Direct(usize),
    /// E_J,i + E_J,j (SQUID top sweetspot).
    Sum(usize, usize),
    /// |E_J,i - E_J,j| (SQUID bottom sweetspot).
    AbsDiff(usize, usize),
}

/// One measured E_J(B_par) curve.
#[derive(Debug, Clone)]
pub struct FieldCurve {
    pub kind: CurveKind,
    /// (B_par [T], E_J [GHz]) samples.
    pub points: Vec<(f64, f64)>,
}

/// Per-junction result of a joint fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldCurveFit {
    pub ej0_ghz: f64,
    pub b_phi0_t: f64,
}

/// Joint fit output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointFieldFit {
    pub junctions: Vec<FieldCurveFit>,
    pub b_crit_t: f64,
    pub b_crit_fitted: bool,
    pub fit: FitResult,
}

fn max_junction_index(curves: &[FieldCurve]) -> usize {
    curves
        .iter()
        .map(|c| match c.kind {
            CurveKind::Direct(i) => i,
            CurveKind::Sum(i, j) | CurveKind::AbsDiff(i, j) => i.max(j),
        })
        .max()
        .unwrap_or(0)
}

/// Per-junction (ej0, b_phi0) initial guesses from approximate direct
/// curves: direct data as-is, sum/diff pairs split by magnitude.
fn initial_guesses(
    n_junctions: usize,
    curves: &[FieldCurve],
    b_crit: f64,
) -> Result<Vec<(f64, f64)>, FitError> {
    let mut per_junction: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_junctions];

    // collect direct points
    for c in curves {
        if let CurveKind::Direct(i) = c.kind {
            per_junction[i].extend_from_slice(&c.points);
        }
    }
    // split sum/diff pairs sharing the same junction pair and field grid
    for c in curves {
        if let CurveKind::Sum(i, j) = c.kind {
            let diff = curves.iter().find(
                |d| matches!(d.kind, CurveKind::AbsDiff(a, b) if (a, b) == (i, j) || (b, a) == (i, j)),
            );
            for (idx, &(b, s)) in c.points.iter().enumerate() {
                let d = diff
                    .and_then(|d| d.points.get(idx))
                    .map(|&(_, v)| v)
                    .unwrap_or(0.0);
                per_junction[i].push((b, (s + d) / 2.0));
                per_junction[j].push((b, (s - d) / 2.0));
            }
        }
    }

    let mut out = Vec::with_capacity(n_junctions);
    for (jx, pts) in per_junction.iter_mut().enumerate() {
        if pts.is_empty() {
            return Err(FitError::Underdetermined(format!(
                "junction {jx} appears in no curve"
            )));
        }
        pts.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap());
        let ej0 = pts[0].1.max(1e-3);
        // first Fraunhofer zero if the data crosses it, else back out of the
        // small-argument expansion at the farthest field
        let zero_cross = pts.iter().find(|(_, e)| *e < 0.02 * ej0).map(|(b, _)| b.abs());
        let b_phi0 = match zero_cross {
            Some(b) => b,
            None => {
                let &(b_far, e_far) = pts.last().unwrap();
                let gl = (1.0 - (b_far / b_crit).powi(2)).max(1e-6).sqrt();
                let ratio = (e_far / (ej0 * gl)).clamp(1e-3, 1.0);
                if ratio > 0.99 {
                    10.0 * b_far.abs().max(1e-3)
                } else {
                    // invert |sinc| coarsely by scanning its first lobe
                    let mut x = 1e-3;
                    for i in 1..1000 {
                        let xi = i as f64 * 1e-3;
                        if sinc(xi).abs() <= ratio {
                            x = xi;
                            break;
                        }
                    }
                    (b_far.abs() / x).max(1e-3)
                }
            }
        };
        out.push((ej0, b_phi0));
    }
    Ok(out)
}

/// Joint Eq.-of-state fit across junctions. `n_junctions` is the number of
/// distinct junction parameter blocks; each curve references them by index.
pub fn fit_ej_field_curves(
    n_junctions: usize,
    curves: &[FieldCurve],
    b_crit: BcritMode,
    opts: &FitOptions,
) -> Result<JointFieldFit, FitError> {
    if curves.is_empty() || n_junctions == 0 {
        return Err(FitError::Underdetermined("no curves or junctions".into()));
    }
    if max_junction_index(curves) >= n_junctions {
        return Err(FitError::Underdetermined("curve references junction out of range".into()));
    }
    let n_points: usize = curves.iter().map(|c| c.points.len()).sum();
    if n_points < 4 * n_junctions {
        return Err(FitError::Underdetermined(format!(
            "{n_points} points for {n_junctions} junctions"
        )));
    }

    let (bcrit_fitted, bcrit0) = match b_crit {
        BcritMode::Fixed(b) => (false, b),
        BcritMode::Free { init_t } => (true, init_t),
    };
    let guesses = initial_guesses(n_junctions, curves, bcrit0)?;

    // parameter layout: [b_crit?] ++ [ej0_i, bphi0_i] per junction
    let base = usize::from(bcrit_fitted);
    let mut x0 = Vec::with_capacity(base + 2 * n_junctions);
    let mut bounds = Vec::with_capacity(base + 2 * n_junctions);
    if bcrit_fitted {
        x0.push(bcrit0);
        bounds.push((1e-3, 100.0));
    }
    for (ej0, bphi0) in &guesses {
        x0.push(*ej0);
        bounds.push((1e-6, 1e4));
        x0.push(*bphi0);
        bounds.push((1e-6, 1e3));
    }

    let model_ej = |p: &[f64], junction: usize, b: f64| -> Option<f64> {
        let bc = if bcrit_fitted { p[0] } else { bcrit0 };
        let jp = JunctionFieldParams {
            ej0_ghz: p[base + 2 * junction],
            b_crit_par_t: bc,
            b_phi0_t: p[base + 2 * junction + 1],
            finger_width_l2_m: None,
        };
        ej_inplane(&jp, b).ok()
    };

    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        let mut r = Vec::with_capacity(n_points);
        for c in curves {
            for &(b, e_meas) in &c.points {
                let e_model = match c.kind {
                    CurveKind::Direct(i) => model_ej(p, i, b)?,
                    CurveKind::Sum(i, j) => model_ej(p, i, b)? + model_ej(p, j, b)?,
                    CurveKind::AbsDiff(i, j) => (model_ej(p, i, b)? - model_ej(p, j, b)?).abs(),
                };
                r.push(e_model - e_meas);
            }
        }
        Some(r)
    };

    let lm_opts = FitOptions { bounds: Some(bounds), ..opts.clone() };
    let fit = lsq_minimize(residual, &x0, &lm_opts)?;

    let b_crit_t = if bcrit_fitted { fit.parameters[0] } else { bcrit0 };
    let junctions: Vec<FieldCurveFit> = (0..n_junctions)
        .map(|i| FieldCurveFit {
            ej0_ghz: fit.parameters[base + 2 * i],
            b_phi0_t: fit.parameters[base + 2 * i + 1],
        })
        .collect();

    // Degeneracy check: a junction whose data never probe either field
    // scale pins only ej0; the geometry parameters are unidentified.
    for (jx, j) in junctions.iter().enumerate() {
        let b_max = curves
            .iter()
            .filter(|c| match c.kind {
                CurveKind::Direct(i) => i == jx,
                CurveKind::Sum(i, k) | CurveKind::AbsDiff(i, k) => i == jx || k == jx,
            })
            .flat_map(|c| c.points.iter().map(|(b, _)| b.abs()))
            .fold(0.0f64, f64::max);
        if b_max < 0.05 * j.b_phi0_t && b_max < 0.05 * b_crit_t {
            return Err(FitError::DegenerateInput(format!(
                "junction {jx}: data reach only {b_max} T, far below both field scales \
                 (b_phi0 = {} T, b_crit = {} T)",
                j.b_phi0_t, b_crit_t
            )));
        }
    }
    Ok(JointFieldFit { junctions, b_crit_t, b_crit_fitted: bcrit_fitted, fit })
}

/// Single-junction convenience wrapper over [`fit_ej_field_curves`].
pub fn fit_ej_field_curve(
    points: &[(f64, f64)],
    b_crit: BcritMode,
    opts: &FitOptions,
) -> Result<(FieldCurveFit, JointFieldFit), FitError> {
    let curves = [FieldCurve { kind: CurveKind::Direct(0), points: points.to_vec() }];
    let joint = fit_ej_field_curves(1, &curves, b_crit, opts)?;
    Ok((joint.junctions[0].clone(), joint))
}
