//! Eigenvalues of real symmetric tridiagonal matrices.
//!
//! Implicit-shift QL iteration without eigenvector accumulation, the
//! classical TQL1 scheme. Cost is O(n^2) for all eigenvalues, which is exact
//! for the charge-basis Hamiltonian (diagonal charging term, constant
//! tunneling off-diagonal) and avoids pulling in a general-purpose dense
//! solver on the hot path.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TridiagError {
    #[error("diagonal and off-diagonal lengths are inconsistent: {diag} vs {off}")]
    ShapeMismatch { diag: usize, off: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("QL iteration failed to converge for eigenvalue index {0}")]
    NoConvergence(usize),
}

const MAX_QL_SWEEPS: usize = 50;

/// All eigenvalues of the symmetric tridiagonal matrix with main diagonal
/// `diag` (length n) and off-diagonal `off` (length n-1), in ascending order.
pub fn eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, TridiagError> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(TridiagError::ShapeMismatch {
            diag: n,
            off: off.len(),
        });
    }
    if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
        return Err(TridiagError::NonFinite);
    }

    let mut d = diag.to_vec();
    // e[i] couples rows i and i+1; e[n-1] is a workspace slot.
    let mut e = Vec::with_capacity(n);
    e.extend_from_slice(off);
    e.push(0.0);

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Look for a negligible off-diagonal element to split the matrix.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(TridiagError::NoConvergence(l));
            }

            // Implicit shift from the 2x2 block at the lower end.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;

            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Deflate: a rotation annihilated early.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    d.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    Ok(d)
}
