//! Bounded Levenberg-Marquardt minimization with finite-difference
//! Jacobians.
//!
//! Damped normal equations (J^T J + lambda diag(J^T J)) dx = -J^T r, trial
//! steps clamped to the bounds, accept on cost decrease. The parameter
//! update order, damping schedule and finite-difference stencils are fixed,
//! so identical inputs produce bitwise-identical outputs.

use nalgebra::{DMatrix, DVector};

use super::{FitError, FitOptions, FitResult, FitStatus};

/// A residual function. Returning `None` marks the parameter point as
/// infeasible (for example a field past the critical field); the step is
/// rejected and the damping increased.
pub trait Residuals {
    fn eval(&self, params: &[f64]) -> Option<Vec<f64>>;
}

impl<F> Residuals for F
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    fn eval(&self, params: &[f64]) -> Option<Vec<f64>> {
        self(params)
    }
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>()
}

fn clamp_to_bounds(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (v, (lo, hi)) in x.iter_mut().zip(b) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Central finite-difference Jacobian. Fixed parameters get a zero column.
/// Falls back to a one-sided stencil when a bound blocks one side.
fn jacobian(
    f: &dyn Residuals,
    x: &[f64],
    r0: &[f64],
    opts: &FitOptions,
    fixed: &[bool],
) -> Result<DMatrix<f64>, FitError> {
    let m = r0.len();
    let n = x.len();
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        if fixed[j] {
            continue;
        }
        let step = opts.fd_step_rel * x[j].abs().max(1e-8);
        let (lo, hi) = opts
            .bounds
            .as_ref()
            .map_or((f64::NEG_INFINITY, f64::INFINITY), |b| b[j]);

        let x_plus = (x[j] + step).min(hi);
        let x_minus = (x[j] - step).max(lo);
        let denom = x_plus - x_minus;
        if denom <= 0.0 {
            continue; // parameter squeezed to a point by its bounds
        }

        xp[j] = x_plus;
        let r_plus = f
            .eval(&xp)
            .ok_or_else(|| FitError::ModelEval(format!("FD step +{step:e} on parameter {j}")))?;
        xp[j] = x_minus;
        let r_minus = f
            .eval(&xp)
            .ok_or_else(|| FitError::ModelEval(format!("FD step -{step:e} on parameter {j}")))?;
        xp[j] = x[j];

        if r_plus.len() != m || r_minus.len() != m {
            return Err(FitError::ModelEval("residual length changed during FD".into()));
        }
        for i in 0..m {
            jac[(i, j)] = (r_plus[i] - r_minus[i]) / denom;
        }
    }
    Ok(jac)
}

/// Minimize the sum of squared residuals from `initial_guess`.
///
/// Errors are never silent: a non-finite start, a singular normal system
/// under maximal damping, and runaway divergence are reported as [`FitError`];
/// running out of iterations is reported through [`FitStatus::MaxIterations`]
/// in the returned result.
pub fn lsq_minimize<R: Residuals>(
    residuals: R,
    initial_guess: &[f64],
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let n = initial_guess.len();
    if n == 0 {
        return Err(FitError::Underdetermined("no parameters".into()));
    }
    if let Some(b) = &opts.bounds {
        if b.len() != n {
            return Err(FitError::Underdetermined("bounds length mismatch".into()));
        }
    }
    let fixed = opts.fixed.clone().unwrap_or_else(|| vec![false; n]);
    if fixed.len() != n {
        return Err(FitError::Underdetermined("fixed-mask length mismatch".into()));
    }
    let n_free = fixed.iter().filter(|f| !**f).count();

    let mut x = initial_guess.to_vec();
    clamp_to_bounds(&mut x, opts.bounds.as_deref());

    let mut r = residuals.eval(&x).ok_or(FitError::NonFiniteStart)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteStart);
    }
    let m = r.len();
    if m < n_free {
        return Err(FitError::Underdetermined(format!(
            "{m} residuals for {n_free} free parameters"
        )));
    }
    let mut cost = cost_of(&r);
    let cost0 = cost;

    let mut lambda = opts.lambda0;
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;

    for _ in 0..opts.max_iterations {
        let jac = jacobian(&residuals, &x, &r, opts, &fixed)?;
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &rv;
        grad_norm = g.amax();

        if grad_norm < opts.gtol {
            status = FitStatus::ConvergedGradient;
            break;
        }

        // Try steps with increasing damping until one lowers the cost or
        // the system becomes hopeless.
        let mut stepped = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..n {
                let d = jtj[(i, i)];
                a[(i, i)] = d + lambda * if d > 0.0 { d } else { 1.0 };
            }
            let delta = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e14 {
                        return Err(FitError::SingularJacobian);
                    }
                    continue;
                }
            };

            let mut x_trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            for (i, fixed_i) in fixed.iter().enumerate() {
                if *fixed_i {
                    x_trial[i] = x[i];
                }
            }
            clamp_to_bounds(&mut x_trial, opts.bounds.as_deref());

            let r_trial = residuals.eval(&x_trial);
            let c_trial = match r_trial {
                Some(ref rt) if rt.iter().all(|v| v.is_finite()) => cost_of(rt),
                _ => f64::INFINITY,
            };

            if c_trial < cost {
                let step_norm = x_trial
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_decrease = (cost - c_trial) / cost.max(f64::MIN_POSITIVE);

                x = x_trial;
                r = r_trial.unwrap();
                cost = c_trial;
                lambda = (lambda * 0.1).max(1e-12);
                stepped = true;
                iterations += 1;

                if rel_decrease < opts.ftol {
                    status = FitStatus::ConvergedCost;
                } else if step_norm < opts.xtol * (1.0 + x_norm) {
                    status = FitStatus::ConvergedStep;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                // No direction lowers the cost: treat the current point as
                // a (possibly rough) minimum rather than failing.
                status = FitStatus::ConvergedStep;
                break;
            }
        }

        if !stepped || status != FitStatus::MaxIterations {
            if status == FitStatus::MaxIterations && !stepped {
                status = FitStatus::ConvergedStep;
            }
            break;
        }
        if !cost.is_finite() || cost > 1e12 * cost0.max(1.0) {
            return Err(FitError::Diverged(format!("cost grew to {cost:e}")));
        }
    }

    // Covariance at the optimum for the 1-sigma uncertainties.
    let jac = jacobian(&residuals, &x, &r, opts, &fixed)?;
    let jtj = jac.transpose() * &jac;
    let g = jac.transpose() * DVector::from_column_slice(&r);
    grad_norm = grad_norm.min(g.amax());

    let dof = m.saturating_sub(n_free);
    let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
    // covariance over the free parameters only; a fixed parameter has an
    // exactly zero Jacobian column and no uncertainty
    let free_idx: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let mut jtj_free = DMatrix::<f64>::zeros(free_idx.len(), free_idx.len());
    for (a, &i) in free_idx.iter().enumerate() {
        for (b, &j) in free_idx.iter().enumerate() {
            jtj_free[(a, b)] = jtj[(i, j)];
        }
    }
    let mut uncertainties = vec![0.0; n];
    match jtj_free.try_inverse() {
        Some(inv) => {
            for (a, &i) in free_idx.iter().enumerate() {
                let v = inv[(a, a)] * s2;
                uncertainties[i] = if v.is_finite() && v >= 0.0 { v.sqrt() } else { f64::INFINITY };
            }
        }
        None => {
            for &i in &free_idx {
                uncertainties[i] = f64::INFINITY;
            }
        }
    }

    let at_bounds = match &opts.bounds {
        Some(b) => x
            .iter()
            .zip(b)
            .map(|(v, (lo, hi))| {
                let scale = v.abs().max(1.0);
                (v - lo).abs() < 1e-12 * scale || (v - hi).abs() < 1e-12 * scale
            })
            .collect(),
        None => vec![false; n],
    };

    Ok(FitResult {
        parameters: x,
        uncertainties,
        residual_rms: (cost / m as f64).sqrt(),
        iterations,
        status,
        gradient_norm: grad_norm,
        at_bounds,
        rejected_points: Vec::new(),
        unreliable: false,
    })
}
