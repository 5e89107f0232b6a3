//! Nonlinear least-squares engine and the parameter-extraction pipelines.
//!
//! The engine is a bounded Levenberg-Marquardt minimizer with
//! finite-difference Jacobians ([`lm`]), a Nelder-Mead simplex fallback for
//! non-smooth objectives ([`nelder`]) and robust linear helpers
//! ([`linear`]). Everything is deterministic: identical inputs produce
//! bitwise-identical outputs.
//!
//! The pipelines invert the forward models: transition pairs to (E_J, E_C),
//! the E_C-E_J correlation, SQUID flux arches, in-plane field curves,
//! magnet-axis alignment, perpendicular-field offsets, and charge-parity
//! envelopes.

pub mod arch;
pub mod field_curve;
pub mod linear;
pub mod lm;
pub mod nelder;
pub mod offsets;
pub mod spectrum;

pub use arch::{fit_squid_arch, ArchEnergyPoint, ArchFit, ArchPoint};
pub use field_curve::{
    fit_ej_field_curve, fit_ej_field_curves, BcritMode, CurveKind, FieldCurve, FieldCurveFit,
    JointFieldFit,
};
pub use lm::lsq_minimize;
pub use offsets::{b0_trend_angle, fit_alignment, fit_b0_offset, AlignmentFit, B0Fit};
pub use spectrum::{
    ej_from_f01, fit_ec_ej_correlation, fit_ej_ec_from_pair, fit_parity_split, CorrelationFit,
    ParitySplitFit,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("residual function not finite at the initial guess")]
    NonFiniteStart,
    #[error("underdetermined fit: {0}")]
    Underdetermined(String),
    #[error("normal equations singular even under maximal damping")]
    SingularJacobian,
    #[error("fit diverged: {0}")]
    Diverged(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("arch period unidentifiable: data span {span_t} T covers less than half the period {period_t} T")]
    PeriodUnidentifiable { span_t: f64, period_t: f64 },
    #[error("no (E_J, E_C) in the physical region reproduces the transitions: {0}")]
    NoPhysicalSolution(String),
    #[error("charge-parity peaks outside any achievable envelope: {0}")]
    EnvelopeInfeasible(String),
    #[error("model evaluation failed during fitting: {0}")]
    ModelEval(String),
}

/// How a minimization run terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    /// Relative cost decrease below `ftol`.
    ConvergedCost,
    /// Step size below `xtol`.
    ConvergedStep,
    /// Gradient norm below `gtol`.
    ConvergedGradient,
    /// Iteration budget exhausted without meeting any criterion.
    MaxIterations,
}

/// Result of a least-squares minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    /// Best-fit parameter values.
    pub parameters: Vec<f64>,
    /// 1-sigma uncertainties from the Jacobian-based covariance at the
    /// optimum. Reported, never used for gating.
    pub uncertainties: Vec<f64>,
    /// sqrt(SSR / m) over the m residuals at the optimum.
    pub residual_rms: f64,
    /// Number of accepted LM iterations.
    pub iterations: usize,
    pub status: FitStatus,
    /// Infinity norm of the gradient J^T r at the optimum.
    pub gradient_norm: f64,
    /// Parameters pinned at a bound at the optimum.
    pub at_bounds: Vec<bool>,
    /// Indices of data points removed by outlier rejection (empty unless a
    /// pipeline rejected any).
    pub rejected_points: Vec<usize>,
    /// Raised when outlier rejection removed more than the configured
    /// fraction, or a pipeline-specific reliability check failed.
    pub unreliable: bool,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        self.status != FitStatus::MaxIterations
    }
}

/// Knobs for [`lsq_minimize`]. The defaults suit every pipeline in this
/// crate; tolerance profiles in the CLI map onto these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative cost-decrease convergence threshold.
    pub ftol: f64,
    /// Relative step-size convergence threshold.
    pub xtol: f64,
    /// Gradient infinity-norm convergence threshold.
    pub gtol: f64,
    /// Relative finite-difference step for Jacobians.
    pub fd_step_rel: f64,
    /// Initial LM damping. Near-zero starts as Gauss-Newton; the damping
    /// escalates automatically when steps fail.
    pub lambda0: f64,
    /// Per-parameter (lower, upper) bounds; infinities allowed.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Parameters held fixed at their initial values.
    pub fixed: Option<Vec<bool>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ftol: 1e-12,
            xtol: 1e-12,
            gtol: 1e-10,
            fd_step_rel: 1e-6,
            lambda0: 1e-10,
            bounds: None,
            fixed: None,
        }
    }
}

/// Linear E_C(E_J) relation extracted from pairwise spectroscopy fits.
/// With it, a single measured transition determines both energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcEjRelation {
    /// dE_C / dE_J (dimensionless).
    pub slope: f64,
    /// E_C at E_J = 0 [GHz].
    pub intercept_ghz: f64,
}

impl EcEjRelation {
    pub fn ec_ghz(&self, ej_ghz: f64) -> f64 {
        self.intercept_ghz + self.slope * ej_ghz
    }

    /// The relation must produce a positive charging energy over the range
    /// of Josephson energies it will be evaluated on.
    pub fn valid_over(&self, ej_min_ghz: f64, ej_max_ghz: f64) -> bool {
        self.ec_ghz(ej_min_ghz) > 0.0 && self.ec_ghz(ej_max_ghz) > 0.0
    }
}
