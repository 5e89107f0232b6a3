//! Nelder-Mead downhill simplex, the fallback for objectives that are not
//! smooth enough for Levenberg-Marquardt (envelope-style constraints with
//! kinks). Deterministic: fixed initial simplex and tie-breaking.

/// Options for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderOptions {
    pub max_evals: usize,
    /// Terminate when the simplex spread in objective values drops below
    /// this (absolute).
    pub ftol: f64,
    /// Relative size of the initial simplex.
    pub initial_step_rel: f64,
}

impl Default for NelderOptions {
    fn default() -> Self {
        Self { max_evals: 2000, ftol: 1e-12, initial_step_rel: 0.05 }
    }
}

/// Minimize `f` from `x0`. Returns (best point, best value, evaluations).
/// Infeasible points should return `f64::INFINITY`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    opts: &NelderOptions,
) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut evals = 0;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: x0 plus per-axis displacements
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        let step = opts.initial_step_rel * x[i].abs().max(1e-4);
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() < opts.ftol && worst.is_finite() {
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n].0)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let v_reflect = eval(&reflect, &mut evals);

        if v_reflect < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let v_expand = eval(&expand, &mut evals);
            simplex[n] = if v_expand < v_reflect {
                (expand, v_expand)
            } else {
                (reflect, v_reflect)
            };
        } else if v_reflect < simplex[n - 1].1 {
            simplex[n] = (reflect, v_reflect);
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            let v_contract = eval(&contract, &mut evals);
            if v_contract < simplex[n].1 {
                simplex[n] = (contract, v_contract);
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (xi, bi) in entry.0.iter_mut().zip(&best_x) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    entry.1 = eval(&entry.0, &mut evals);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, v) = simplex.swap_remove(0);
    (x, v, evals)
}
