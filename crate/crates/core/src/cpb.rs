//! Cooper-pair-box / transmon spectra in the charge basis.
//!
//! The Hamiltonian is diagonal in the Cooper-pair number difference n with
//! charging term 4 E_C (n - n_g)^2 and a constant tunneling term -E_J/2
//! between adjacent charge states. Truncating at |n| <= k gives a
//! (2k+1)-dimensional real symmetric tridiagonal matrix whose low-lying
//! eigenvalues are accurate both deep in the transmon regime and at low
//! E_J/E_C, where the square-root approximation for f01 breaks down.
//!
//! The overall sign of the tunneling term has no effect on the spectrum.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tridiag;

/// Default charge-basis truncation (41 charge states).
pub const DEFAULT_TRUNCATION: usize = 20;

/// Truncation-convergence tolerance: f01/f02_half must move by less than
/// this when re-solving at k+5.
pub const CONVERGENCE_TOL_GHZ: f64 = 1e-8;

/// Number of levels reported in [`TransmonSpectrum::eigenfrequencies_ghz`].
/// Levels near the truncation edge are dominated by the cutoff and are not
/// physical, so only the low-lying part of the spectrum is exposed.
pub const REPORTED_LEVELS: usize = 8;

#[derive(Debug, Error)]
pub enum CpbError {
    #[error("invalid Cooper-pair-box parameters: {0}")]
    InvalidParams(String),
    #[error(
        "charge-basis truncation k = {k} not converged: f01/f02 drift {drift_ghz:.3e} GHz \
         exceeds {tol_ghz:.1e} GHz when re-solving at k+5"
    )]
    NotConverged { k: usize, drift_ghz: f64, tol_ghz: f64 },
    #[error("eigensolver failure: {0}")]
    Eigensolver(#[from] tridiag::TridiagError),
}

/// Cooper-pair-box Hamiltonian inputs. Energies are frequencies (E/h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpbParams {
    /// Josephson energy [GHz].
    pub ej_ghz: f64,
    /// Charging energy [GHz].
    pub ec_ghz: f64,
    /// Offset charge (any real; the spectrum is periodic in n_g with period
    /// one and even under n_g -> -n_g).
    pub ng: f64,
    /// Charge-basis truncation: charge states n in [-k, k].
    pub k: usize,
}

impl CpbParams {
    pub fn new(ej_ghz: f64, ec_ghz: f64, ng: f64) -> Result<Self, CpbError> {
        Self { ej_ghz, ec_ghz, ng, k: DEFAULT_TRUNCATION }.validated()
    }

    pub fn with_truncation(mut self, k: usize) -> Result<Self, CpbError> {
        self.k = k;
        self.validated()
    }

    fn validated(self) -> Result<Self, CpbError> {
        if !self.ej_ghz.is_finite() || !self.ec_ghz.is_finite() || !self.ng.is_finite() {
            return Err(CpbError::InvalidParams("non-finite input".into()));
        }
        if self.ej_ghz < 0.0 {
            return Err(CpbError::InvalidParams(format!("ej = {} < 0", self.ej_ghz)));
        }
        if self.ec_ghz <= 0.0 {
            return Err(CpbError::InvalidParams(format!("ec = {} <= 0", self.ec_ghz)));
        }
        if self.k < 1 {
            return Err(CpbError::InvalidParams("truncation k must be >= 1".into()));
        }
        Ok(self)
    }
}

/// Low-lying transmon spectrum, ground energy subtracted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpectrum {
    /// Ascending level energies as frequencies [GHz], ground state first
    /// (hence 0), limited to the truncation-converged low levels.
    pub eigenfrequencies_ghz: Vec<f64>,
    /// First transition 0 -> 1 [GHz].
    pub f01_ghz: f64,
    /// Half the 0 -> 2 transition [GHz].
    pub f02_half_ghz: f64,
}

/// Fold n_g into [0, 0.5] using periodicity and reflection symmetry.
fn reduce_ng(ng: f64) -> f64 {
    let m = ng.rem_euclid(1.0);
    if m > 0.5 {
        1.0 - m
    } else {
        m
    }
}

/// Ground-subtracted low-lying levels at an explicit truncation, no
/// convergence check. The workhorse behind both the public solver and the
/// fitting hot loops.
pub fn levels_unchecked(
    ej_ghz: f64,
    ec_ghz: f64,
    ng: f64,
    k: usize,
) -> Result<Vec<f64>, CpbError> {
    let ng = reduce_ng(ng);
    let dim = 2 * k + 1;
    let mut diag = Vec::with_capacity(dim);
    for i in 0..dim {
        let n = i as f64 - k as f64;
        diag.push(4.0 * ec_ghz * (n - ng) * (n - ng));
    }
    let off = vec![-ej_ghz / 2.0; dim - 1];
    let mut ev = tridiag::eigenvalues(&diag, &off)?;
    let ground = ev[0];
    let keep = REPORTED_LEVELS.min(dim);
    ev.truncate(keep);
    for v in &mut ev {
        *v -= ground;
    }
    Ok(ev)
}

/// f01 and f02/2 at an explicit truncation, no convergence check.
pub fn transitions_unchecked(
    ej_ghz: f64,
    ec_ghz: f64,
    ng: f64,
    k: usize,
) -> Result<(f64, f64), CpbError> {
    let ev = levels_unchecked(ej_ghz, ec_ghz, ng, k)?;
    Ok((ev[1], ev[2] / 2.0))
}

/// Exact numerical spectrum of the Cooper-pair box.
///
/// Solves at `params.k` and re-solves at k+5; if f01 or f02/2 drift by more
/// than [`CONVERGENCE_TOL_GHZ`] the truncation is too small for the
/// requested parameters and an error is returned.
pub fn solve_cpb(params: &CpbParams) -> Result<TransmonSpectrum, CpbError> {
    let p = params.validated()?;
    let ev = levels_unchecked(p.ej_ghz, p.ec_ghz, p.ng, p.k)?;
    let (f01, f02h) = (ev[1], ev[2] / 2.0);

    let (f01_chk, f02h_chk) = transitions_unchecked(p.ej_ghz, p.ec_ghz, p.ng, p.k + 5)?;
    let drift = (f01 - f01_chk).abs().max((f02h - f02h_chk).abs());
    if drift > CONVERGENCE_TOL_GHZ {
        return Err(CpbError::NotConverged {
            k: p.k,
            drift_ghz: drift,
            tol_ghz: CONVERGENCE_TOL_GHZ,
        });
    }

    Ok(TransmonSpectrum {
        eigenfrequencies_ghz: ev,
        f01_ghz: f01,
        f02_half_ghz: f02h,
    })
}

/// Charge dispersion f01(n_g = 0) - f01(n_g = 0.5); positive in the transmon
/// regime and exponentially suppressed at large E_J/E_C.
pub fn charge_dispersion(ej_ghz: f64, ec_ghz: f64, k: usize) -> Result<f64, CpbError> {
    let even = solve_cpb(&CpbParams { ej_ghz, ec_ghz, ng: 0.0, k }.validated()?)?;
    let odd = solve_cpb(&CpbParams { ej_ghz, ec_ghz, ng: 0.5, k }.validated()?)?;
    Ok(even.f01_ghz - odd.f01_ghz)
}

/// The two extremal f01 branches seen under random charge-parity switching:
/// (f01 at n_g = 0, f01 at n_g = 0.5). Every intermediate n_g lies between
/// them.
pub fn parity_split_spectrum(ej_ghz: f64, ec_ghz: f64) -> Result<(f64, f64), CpbError> {
    let k = DEFAULT_TRUNCATION;
    let even = solve_cpb(&CpbParams { ej_ghz, ec_ghz, ng: 0.0, k }.validated()?)?;
    let odd = solve_cpb(&CpbParams { ej_ghz, ec_ghz, ng: 0.5, k }.validated()?)?;
    Ok((even.f01_ghz, odd.f01_ghz))
}

/// Deep-transmon approximation f01 ~ sqrt(8 E_J E_C) - E_C, used as a fit
/// initializer and accuracy yardstick.
pub fn f01_asymptotic(ej_ghz: f64, ec_ghz: f64) -> f64 {
    (8.0 * ej_ghz * ec_ghz).sqrt() - ec_ghz
}
