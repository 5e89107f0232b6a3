//! Two-qutrit-one-cavity Hamiltonian: build, diagonalize, label dressed
//! states, and back out bare transmon parameters.
//!
//! The coupling is excitation-conserving (rotating-wave approximation, no
//! dispersive approximation), so the Hamiltonian is block diagonal in the
//! total excitation number M = q1 + q2 + n. Production solves per block;
//! a full dense solve is kept as a cross-check path. A direct qubit-qubit
//! term is excluded: the measured bound on that interaction is below 1 MHz.
//!
//! All frequencies are ordinary (GHz); couplings g are the usual g/2pi.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::lm::lsq_minimize;
use crate::fit::{FitError, FitOptions, FitResult};

/// Bound (documented, not modeled) on the neglected direct qubit-qubit
/// coupling [GHz].
pub const QQ_COUPLING_BOUND_GHZ: f64 = 1e-3;

/// Labeled-transition drift tolerance for the photon-truncation check [GHz].
pub const TRUNCATION_DRIFT_TOL_GHZ: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum DressedError {
    #[error("invalid cavity parameters: {0}")]
    InvalidParams(String),
    #[error(
        "photon truncation N = {n} not converged: transition drift {drift_ghz:.3e} GHz at N+2"
    )]
    TruncationTooSmall { n: usize, drift_ghz: f64 },
    #[error("ambiguous dressed-state labeling near degeneracy: bare states {0:?} claim one eigenstate")]
    AmbiguousLabeling(Vec<String>),
    #[error("dispersive-shift pole: {resonance} denominator {value:.3e} GHz below guard")]
    PoleProximity { resonance: &'static str, value: f64 },
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Cavity and coupling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Bare cavity frequency [GHz].
    pub f_cavity_ghz: f64,
    /// Total quality factor.
    pub q_total: f64,
    /// Qutrit-1 to cavity coupling [GHz].
    pub g1_ghz: f64,
    /// Qutrit-2 to cavity coupling [GHz].
    pub g2_ghz: f64,
    /// Photon-number truncation: Fock states 0..=N.
    pub photon_truncation: usize,
}

impl CavityParams {
    pub fn new(
        f_cavity_ghz: f64,
        q_total: f64,
        g1_ghz: f64,
        g2_ghz: f64,
    ) -> Result<Self, DressedError> {
        Self { f_cavity_ghz, q_total, g1_ghz, g2_ghz, photon_truncation: 5 }.validated()
    }

    pub fn with_truncation(mut self, n: usize) -> Result<Self, DressedError> {
        self.photon_truncation = n;
        self.validated()
    }

    fn validated(self) -> Result<Self, DressedError> {
        if !(self.f_cavity_ghz > 0.0 && self.q_total > 0.0) {
            return Err(DressedError::InvalidParams(
                "cavity frequency and Q must be positive".into(),
            ));
        }
        if self.g1_ghz < 0.0 || self.g2_ghz < 0.0 {
            return Err(DressedError::InvalidParams("couplings must be >= 0".into()));
        }
        if self.photon_truncation < 3 {
            return Err(DressedError::InvalidParams("photon truncation must be >= 3".into()));
        }
        Ok(self)
    }

    /// Linewidth in the crate's ordinary-frequency convention,
    /// kappa = f_c / Q_tot [GHz].
    pub fn kappa_ghz(&self) -> f64 {
        self.f_cavity_ghz / self.q_total
    }

    /// Angular photon decay rate 2 pi f_c / Q_tot [rad/us], for interfaces
    /// written against the angular convention.
    pub fn kappa_angular_per_us(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.kappa_ghz() * crate::units::GHZ_AS_PER_US
    }
}

/// Bare qutrit transitions (f01, f02) [GHz].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareTransitions {
    pub f01_ghz: f64,
    pub f02_ghz: f64,
}

impl BareTransitions {
    pub fn f02_half_ghz(&self) -> f64 {
        self.f02_ghz / 2.0
    }

    /// Anharmonicity f12 - f01 (negative for a transmon).
    pub fn anharmonicity_ghz(&self) -> f64 {
        self.f02_ghz - 2.0 * self.f01_ghz
    }
}

/// Dressed transitions extracted by bare-state overlap labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedTransitions {
    pub f_cavity_ghz: f64,
    pub q1_f01_ghz: f64,
    pub q1_f02_half_ghz: f64,
    pub q2_f01_ghz: f64,
    pub q2_f02_half_ghz: f64,
}

/// Linear coupling law g(f01) = c0 + slope * f01 [GHz].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingLaw {
    pub c0_ghz: f64,
    pub slope: f64,
}

impl CouplingLaw {
    /// The law found for this cavity: g = 57 MHz + 0.01 f01.
    pub const MEASURED: CouplingLaw = CouplingLaw { c0_ghz: 0.057, slope: 0.01 };

    pub fn g_ghz(&self, f01_ghz: f64) -> f64 {
        self.c0_ghz + self.slope * f01_ghz
    }
}

/// State index within the product basis |q1, q2, n>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BareIndex {
    q1: usize,
    q2: usize,
    n: usize,
}

/// Eigensystem of one excitation block.
struct Block {
    states: Vec<BareIndex>,
    energies: Vec<f64>,
    /// Column-major eigenvectors; vectors[(i, j)] is amplitude of states[i]
    /// in eigenstate j.
    vectors: DMatrix<f64>,
}

fn qutrit_energies(bare: &BareTransitions) -> [f64; 3] {
    [0.0, bare.f01_ghz, bare.f02_ghz]
}

/// Enumerate and solve the excitation-number blocks up to the truncation.
fn solve_blocks(
    bare1: &BareTransitions,
    bare2: &BareTransitions,
    cav: &CavityParams,
    nmax: usize,
) -> Vec<Block> {
    let e1 = qutrit_energies(bare1);
    let e2 = qutrit_energies(bare2);
    let m_max = 2 + 2 + nmax;
    let mut blocks = Vec::with_capacity(m_max + 1);

    for m in 0..=m_max {
        let mut states = Vec::new();
        for q1 in 0..3usize {
            for q2 in 0..3usize {
                if q1 + q2 > m {
                    continue;
                }
                let n = m - q1 - q2;
                if n <= nmax {
                    states.push(BareIndex { q1, q2, n });
                }
            }
        }
        if states.is_empty() {
            continue;
        }
        let dim = states.len();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (i, s) in states.iter().enumerate() {
            h[(i, i)] = e1[s.q1] + e2[s.q2] + s.n as f64 * cav.f_cavity_ghz;
        }
        // qutrit lowering with photon creation: <q-1, n+1| H |q, n>
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                if j <= i {
                    continue;
                }
                let elem = coupling_element(a, b, cav);
                if elem != 0.0 {
                    h[(i, j)] = elem;
                    h[(j, i)] = elem;
                }
            }
        }
        debug_assert_eq!((&h - h.transpose()).amax(), 0.0);

        let eig = h.clone().symmetric_eigen();
        // sort ascending by energy, reorder vectors to match
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::<f64>::zeros(dim, dim);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        blocks.push(Block { states, energies, vectors });
    }
    blocks
}

fn coupling_element(a: &BareIndex, b: &BareIndex, cav: &CavityParams) -> f64 {
    // qutrit 1 exchange: (q1, n) <-> (q1 - 1, n + 1), q2 equal
    if a.q2 == b.q2 && a.q1 == b.q1 + 1 && b.n == a.n + 1 {
        let m = (a.q1 as f64).sqrt(); // 1 for 1->0, sqrt(2) for 2->1
        return cav.g1_ghz * m * ((a.n + 1) as f64).sqrt();
    }
    if a.q2 == b.q2 && b.q1 == a.q1 + 1 && a.n == b.n + 1 {
        let m = (b.q1 as f64).sqrt();
        return cav.g1_ghz * m * ((b.n + 1) as f64).sqrt();
    }
    // qutrit 2 exchange
    if a.q1 == b.q1 && a.q2 == b.q2 + 1 && b.n == a.n + 1 {
        let m = (a.q2 as f64).sqrt();
        return cav.g2_ghz * m * ((a.n + 1) as f64).sqrt();
    }
    if a.q1 == b.q1 && b.q2 == a.q2 + 1 && a.n == b.n + 1 {
        let m = (b.q2 as f64).sqrt();
        return cav.g2_ghz * m * ((b.n + 1) as f64).sqrt();
    }
    0.0
}

/// Energy of the dressed state labeled by maximal overlap with the given
/// bare product state. `claimed` tracks (block, column) assignments so two
/// labels cannot silently share one eigenstate.
fn labeled_energy(
    blocks: &[Block],
    want: BareIndex,
    claimed: &mut Vec<(usize, usize, String)>,
) -> Result<f64, DressedError> {
    for (bi, block) in blocks.iter().enumerate() {
        if let Some(row) = block.states.iter().position(|s| *s == want) {
            // eigenstate with maximal overlap; ties broken toward lower energy
            let mut best = (0usize, -1.0f64);
            for col in 0..block.states.len() {
                let amp = block.vectors[(row, col)];
                let w = amp * amp;
                if w > best.1 + 1e-12 {
                    best = (col, w);
                }
            }
            let label = format!("|{},{},{}>", want.q1, want.q2, want.n);
            if let Some(prev) = claimed.iter().find(|(b, c, _)| *b == bi && *c == best.0) {
                return Err(DressedError::AmbiguousLabeling(vec![prev.2.clone(), label]));
            }
            claimed.push((bi, best.0, label));
            return Ok(block.energies[best.0]);
        }
    }
    Err(DressedError::InvalidParams(format!(
        "bare state |{},{},{}> outside truncation",
        want.q1, want.q2, want.n
    )))
}

fn transitions_at(
    bare1: &BareTransitions,
    bare2: &BareTransitions,
    cav: &CavityParams,
    nmax: usize,
) -> Result<DressedTransitions, DressedError> {
    let blocks = solve_blocks(bare1, bare2, cav, nmax);
    let mut claimed = Vec::new();
    let ground = labeled_energy(&blocks, BareIndex { q1: 0, q2: 0, n: 0 }, &mut claimed)?;
    let cav_1 = labeled_energy(&blocks, BareIndex { q1: 0, q2: 0, n: 1 }, &mut claimed)?;
    let q1_1 = labeled_energy(&blocks, BareIndex { q1: 1, q2: 0, n: 0 }, &mut claimed)?;
    let q1_2 = labeled_energy(&blocks, BareIndex { q1: 2, q2: 0, n: 0 }, &mut claimed)?;
    let q2_1 = labeled_energy(&blocks, BareIndex { q1: 0, q2: 1, n: 0 }, &mut claimed)?;
    let q2_2 = labeled_energy(&blocks, BareIndex { q1: 0, q2: 2, n: 0 }, &mut claimed)?;
    Ok(DressedTransitions {
        f_cavity_ghz: cav_1 - ground,
        q1_f01_ghz: q1_1 - ground,
        q1_f02_half_ghz: (q1_2 - ground) / 2.0,
        q2_f01_ghz: q2_1 - ground,
        q2_f02_half_ghz: (q2_2 - ground) / 2.0,
    })
}

/// Diagonalize the coupled system and return the labeled dressed
/// transitions. Convergence in the photon truncation is verified by
/// re-solving at N+2.
pub fn build_and_solve_jc(
    bare_q1: &BareTransitions,
    bare_q2: &BareTransitions,
    cav: &CavityParams,
) -> Result<DressedTransitions, DressedError> {
    let cav = cav.validated()?;
    let nmax = cav.photon_truncation;
    let t = transitions_at(bare_q1, bare_q2, &cav, nmax)?;
    let t_chk = transitions_at(bare_q1, bare_q2, &cav, nmax + 2)?;
    let drift = [
        t.f_cavity_ghz - t_chk.f_cavity_ghz,
        t.q1_f01_ghz - t_chk.q1_f01_ghz,
        t.q1_f02_half_ghz - t_chk.q1_f02_half_ghz,
        t.q2_f01_ghz - t_chk.q2_f01_ghz,
        t.q2_f02_half_ghz - t_chk.q2_f02_half_ghz,
    ]
    .iter()
    .fold(0.0f64, |m, d| m.max(d.abs()));
    if drift > TRUNCATION_DRIFT_TOL_GHZ {
        return Err(DressedError::TruncationTooSmall { n: nmax, drift_ghz: drift });
    }
    Ok(t)
}

/// All eigenvalues from the excitation-block solver, ascending; the
/// cross-check partner of [`jc_eigenvalues_dense`].
pub fn jc_eigenvalues_blockwise(
    bare1: &BareTransitions,
    bare2: &BareTransitions,
    cav: &CavityParams,
) -> Vec<f64> {
    let mut ev: Vec<f64> = solve_blocks(bare1, bare2, cav, cav.photon_truncation)
        .into_iter()
        .flat_map(|b| b.energies)
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// All eigenvalues from one dense solve of the full
/// 3 x 3 x (N+1)-dimensional matrix, ascending.
pub fn jc_eigenvalues_dense(
    bare1: &BareTransitions,
    bare2: &BareTransitions,
    cav: &CavityParams,
) -> Vec<f64> {
    let nmax = cav.photon_truncation;
    let e1 = qutrit_energies(bare1);
    let e2 = qutrit_energies(bare2);
    let dim = 3 * 3 * (nmax + 1);
    let idx = |q1: usize, q2: usize, n: usize| (q1 * 3 + q2) * (nmax + 1) + n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for q1 in 0..3 {
        for q2 in 0..3 {
            for n in 0..=nmax {
                h[(idx(q1, q2, n), idx(q1, q2, n))] =
                    e1[q1] + e2[q2] + n as f64 * cav.f_cavity_ghz;
            }
        }
    }
    for q1 in 0..2 {
        let m = ((q1 + 1) as f64).sqrt();
        for q2 in 0..3 {
            for n in 0..nmax {
                let v = cav.g1_ghz * m * ((n + 1) as f64).sqrt();
                let (i, j) = (idx(q1 + 1, q2, n), idx(q1, q2, n + 1));
                h[(i, j)] += v;
                h[(j, i)] += v;
            }
        }
    }
    for q2 in 0..2 {
        let m = ((q2 + 1) as f64).sqrt();
        for q1 in 0..3 {
            for n in 0..nmax {
                let v = cav.g2_ghz * m * ((n + 1) as f64).sqrt();
                let (i, j) = (idx(q1, q2 + 1, n), idx(q1, q2, n + 1));
                h[(i, j)] += v;
                h[(j, i)] += v;
            }
        }
    }
    assert_eq!((&h - h.transpose()).amax(), 0.0, "construction must be exactly symmetric");
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Denominator guard for the dispersive-shift formula [GHz].
const CHI_POLE_GUARD_GHZ: f64 = 1e-6;

/// Transmon dispersive shift
/// chi = g^2 alpha [1/(delta (delta + alpha))
///                  - 1/((delta - 2 f01)(delta - alpha - 2 f01))] [GHz],
/// with delta = f01 - f_cavity and alpha = f12 - f01 (negative for a
/// transmon). Poles are guarded and reported by name.
pub fn dispersive_chi(
    f01_ghz: f64,
    anharm_ghz: f64,
    g_ghz: f64,
    f_cavity_ghz: f64,
) -> Result<f64, DressedError> {
    let delta = f01_ghz - f_cavity_ghz;
    let guards: [(&'static str, f64); 4] = [
        ("qubit-cavity resonance (delta)", delta),
        ("two-photon resonance (delta + alpha)", delta + anharm_ghz),
        ("counter-rotating (delta - 2 f01)", delta - 2.0 * f01_ghz),
        (
            "counter-rotating (delta - alpha - 2 f01)",
            delta - anharm_ghz - 2.0 * f01_ghz,
        ),
    ];
    for (name, value) in guards {
        if value.abs() < CHI_POLE_GUARD_GHZ {
            return Err(DressedError::PoleProximity { resonance: name, value });
        }
    }
    Ok(g_ghz * g_ghz
        * anharm_ghz
        * (1.0 / (delta * (delta + anharm_ghz))
            - 1.0 / ((delta - 2.0 * f01_ghz) * (delta - anharm_ghz - 2.0 * f01_ghz))))
}

/// One record for the bare-parameter recovery: the five dressed transitions
/// measured at one field point.
pub type DressedRecord = DressedTransitions;

/// Output of [`bare_from_dressed`].
#[derive(Debug, Clone)]
pub struct BareFromDressedFit {
    /// Per-record bare transitions (qutrit 1, qutrit 2).
    pub bare: Vec<(BareTransitions, BareTransitions)>,
    pub coupling_law: CouplingLaw,
    pub residual_rms_ghz: f64,
    pub fit: FitResult,
}

/// Recover bare qutrit transitions and the linear coupling law from
/// measured dressed transitions, holding the bare cavity frequency fixed
/// at its high-power value.
///
/// Parameters: per record (f01_1, f02_1, f01_2, f02_2) plus the global
/// (c0, slope) of g = c0 + slope f01; residuals are the five modeled minus
/// measured transitions per record.
pub fn bare_from_dressed(
    measured: &[DressedRecord],
    f_cavity_fixed_ghz: f64,
    photon_truncation: usize,
) -> Result<BareFromDressedFit, DressedError> {
    if measured.len() < 4 {
        return Err(FitError::Underdetermined(format!(
            "need >= 4 dressed records, got {}",
            measured.len()
        ))
        .into());
    }
    let nrec = measured.len();

    // layout: [c0, slope, then per record f01_1, f02_1, f01_2, f02_2]
    let mut x0 = vec![CouplingLaw::MEASURED.c0_ghz, CouplingLaw::MEASURED.slope];
    for r in measured {
        x0.extend_from_slice(&[
            r.q1_f01_ghz,
            2.0 * r.q1_f02_half_ghz,
            r.q2_f01_ghz,
            2.0 * r.q2_f02_half_ghz,
        ]);
    }

    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        let law = CouplingLaw { c0_ghz: p[0], slope: p[1] };
        let mut r = Vec::with_capacity(5 * nrec);
        for (i, rec) in measured.iter().enumerate() {
            let b1 = BareTransitions { f01_ghz: p[2 + 4 * i], f02_ghz: p[3 + 4 * i] };
            let b2 = BareTransitions { f01_ghz: p[4 + 4 * i], f02_ghz: p[5 + 4 * i] };
            if !(b1.f01_ghz > 0.0 && b1.f02_ghz > 0.0 && b2.f01_ghz > 0.0 && b2.f02_ghz > 0.0) {
                return None;
            }
            let cav = CavityParams {
                f_cavity_ghz: f_cavity_fixed_ghz,
                q_total: 1.0, // Q does not enter the spectrum
                g1_ghz: law.g_ghz(b1.f01_ghz).max(0.0),
                g2_ghz: law.g_ghz(b2.f01_ghz).max(0.0),
                photon_truncation,
            };
            let t = transitions_at(&b1, &b2, &cav, photon_truncation).ok()?;
            r.push(t.f_cavity_ghz - rec.f_cavity_ghz);
            r.push(t.q1_f01_ghz - rec.q1_f01_ghz);
            r.push(t.q1_f02_half_ghz - rec.q1_f02_half_ghz);
            r.push(t.q2_f01_ghz - rec.q2_f01_ghz);
            r.push(t.q2_f02_half_ghz - rec.q2_f02_half_ghz);
        }
        Some(r)
    };

    let opts = FitOptions {
        max_iterations: 100,
        // transitions are ~GHz while couplings are ~0.1 GHz: the default
        // relative FD step is adequate for both
        ..FitOptions::default()
    };
    let fit = lsq_minimize(residual, &x0, &opts)?;

    let law = CouplingLaw { c0_ghz: fit.parameters[0], slope: fit.parameters[1] };
    let bare = (0..nrec)
        .map(|i| {
            (
                BareTransitions {
                    f01_ghz: fit.parameters[2 + 4 * i],
                    f02_ghz: fit.parameters[3 + 4 * i],
                },
                BareTransitions {
                    f01_ghz: fit.parameters[4 + 4 * i],
                    f02_ghz: fit.parameters[5 + 4 * i],
                },
            )
        })
        .collect();
    Ok(BareFromDressedFit {
        bare,
        coupling_law: law,
        residual_rms_ghz: fit.residual_rms,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cavity(g1: f64, g2: f64) -> CavityParams {
        CavityParams::new(8.107, 5800.0, g1, g2).unwrap()
    }

    fn typical_bare() -> (BareTransitions, BareTransitions) {
        (
            BareTransitions { f01_ghz: 6.2, f02_ghz: 12.1 },
            BareTransitions { f01_ghz: 4.8, f02_ghz: 9.35 },
        )
    }

    #[test]
    fn decoupled_limit_returns_bare() {
        let (b1, b2) = typical_bare();
        let t = build_and_solve_jc(&b1, &b2, &cavity(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(t.q1_f01_ghz, 6.2, epsilon = 1e-12);
        assert_abs_diff_eq!(t.q1_f02_half_ghz, 6.05, epsilon = 1e-12);
        assert_abs_diff_eq!(t.q2_f01_ghz, 4.8, epsilon = 1e-12);
        assert_abs_diff_eq!(t.f_cavity_ghz, 8.107, epsilon = 1e-12);
    }

    #[test]
    fn dressed_cavity_within_coupling_of_bare() {
        let (b1, b2) = typical_bare();
        let cav = cavity(0.119, 0.105);
        let t = build_and_solve_jc(&b1, &b2, &cav).unwrap();
        assert!((t.f_cavity_ghz - cav.f_cavity_ghz).abs() < cav.g1_ghz.max(cav.g2_ghz));
        // repulsion pushes the qubit below its bare value
        assert!(t.q1_f01_ghz < b1.f01_ghz);
    }

    #[test]
    fn blockwise_equals_dense() {
        let (b1, b2) = typical_bare();
        let cav = cavity(0.12, 0.1);
        let a = jc_eigenvalues_blockwise(&b1, &b2, &cav);
        let b = jc_eigenvalues_dense(&b1, &b2, &cav);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn truncation_convergence_of_labeled_transitions() {
        let (b1, b2) = typical_bare();
        let cav = cavity(0.12, 0.1);
        let t5 = build_and_solve_jc(&b1, &b2, &cav).unwrap();
        let t7 = build_and_solve_jc(&b1, &b2, &cav.with_truncation(7).unwrap()).unwrap();
        assert!((t5.q1_f01_ghz - t7.q1_f01_ghz).abs() < TRUNCATION_DRIFT_TOL_GHZ);
        assert!((t5.f_cavity_ghz - t7.f_cavity_ghz).abs() < TRUNCATION_DRIFT_TOL_GHZ);
    }

    #[test]
    fn cavity_pull_matches_dispersive_formula() {
        // one far-detuned qutrit: pull of the cavity by the qubit state
        // should match 2 chi
        let delta = 1.5;
        let g = 0.12;
        let b1 = BareTransitions { f01_ghz: 8.107 - delta, f02_ghz: 2.0 * (8.107 - delta) - 0.3 };
        let b2 = BareTransitions { f01_ghz: 3.0, f02_ghz: 5.7 };
        let cav = cavity(g, 0.0);

        let blocks = solve_blocks(&b1, &b2, &cav, cav.photon_truncation);
        let mut claimed = Vec::new();
        let e00 = labeled_energy(&blocks, BareIndex { q1: 0, q2: 0, n: 0 }, &mut claimed).unwrap();
        let e01 = labeled_energy(&blocks, BareIndex { q1: 0, q2: 0, n: 1 }, &mut claimed).unwrap();
        let e10 = labeled_energy(&blocks, BareIndex { q1: 1, q2: 0, n: 0 }, &mut claimed).unwrap();
        let e11 = labeled_energy(&blocks, BareIndex { q1: 1, q2: 0, n: 1 }, &mut claimed).unwrap();
        let pull_full = (e11 - e10) - (e01 - e00);

        let chi = dispersive_chi(b1.f01_ghz, b1.anharmonicity_ghz(), g, 8.107).unwrap();
        assert_relative_eq!(pull_full, 2.0 * chi, max_relative = 0.05);
    }

    #[test]
    fn dispersive_consistency_far_detuned() {
        // delta/g > 15: full-model pull within 2% of the formula
        let g = 0.1;
        let delta = 1.6;
        let b1 = BareTransitions { f01_ghz: 8.107 - delta, f02_ghz: 2.0 * (8.107 - delta) - 0.28 };
        let b2 = BareTransitions { f01_ghz: 2.5, f02_ghz: 4.75 };
        let cav = cavity(g, 0.0);
        let blocks = solve_blocks(&b1, &b2, &cav, cav.photon_truncation);
        let mut claimed = Vec::new();
        let e00 = labeled_energy(&blocks, BareIndex { q1: 0, q2: 0, n: 0 }, &mut claimed).unwrap();
        let e01 = labeled_energy(&blocks, BareIndex { q1: 0, q2: 0, n: 1 }, &mut claimed).unwrap();
        let e10 = labeled_energy(&blocks, BareIndex { q1: 1, q2: 0, n: 0 }, &mut claimed).unwrap();
        let e11 = labeled_energy(&blocks, BareIndex { q1: 1, q2: 0, n: 1 }, &mut claimed).unwrap();
        let pull_full = (e11 - e10) - (e01 - e00);
        let chi = dispersive_chi(b1.f01_ghz, b1.anharmonicity_ghz(), g, 8.107).unwrap();
        assert_relative_eq!(pull_full, 2.0 * chi, max_relative = 0.02);
    }

    #[test]
    fn chi_zeros_and_frozen_value() {
        assert_eq!(dispersive_chi(6.2, -0.3, 0.0, 8.107).unwrap(), 0.0);
        // harmonic limit: alpha -> 0 kills chi
        let chi = dispersive_chi(6.2, -1e-9, 0.12, 8.107).unwrap();
        assert!(chi.abs() < 1e-10);
        // frozen from 40-digit arithmetic
        let chi = dispersive_chi(6.2, -0.3, 0.12, 8.107).unwrap();
        assert_relative_eq!(chi, -0.0010048761849736708, max_relative = 1e-12);
    }

    #[test]
    fn chi_pole_guard_names_resonance() {
        let err = dispersive_chi(8.107, -0.3, 0.12, 8.107).unwrap_err();
        match err {
            DressedError::PoleProximity { resonance, .. } => {
                assert!(resonance.contains("delta"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn coupling_law_range() {
        // g between 100 and 130 MHz over the fitted frequency range
        let law = CouplingLaw::MEASURED;
        assert_relative_eq!(law.g_ghz(4.3), 0.100, max_relative = 1e-12);
        assert_relative_eq!(law.g_ghz(7.3), 0.130, max_relative = 1e-12);
    }

    #[test]
    fn bare_from_dressed_roundtrip() {
        // dress synthetic bare parameters, then refit
        let law = CouplingLaw::MEASURED;
        let truth: Vec<(BareTransitions, BareTransitions)> = [6.9, 6.3, 5.6, 4.9, 4.2]
            .iter()
            .map(|&f1| {
                let f2 = f1 - 1.4;
                (
                    BareTransitions { f01_ghz: f1, f02_ghz: 2.0 * f1 - 0.25 },
                    BareTransitions { f01_ghz: f2, f02_ghz: 2.0 * f2 - 0.27 },
                )
            })
            .collect();
        let records: Vec<DressedRecord> = truth
            .iter()
            .map(|(b1, b2)| {
                let cav = CavityParams::new(
                    8.107,
                    5800.0,
                    law.g_ghz(b1.f01_ghz),
                    law.g_ghz(b2.f01_ghz),
                )
                .unwrap();
                build_and_solve_jc(b1, b2, &cav).unwrap()
            })
            .collect();

        let fit = bare_from_dressed(&records, 8.107, 5).unwrap();
        assert!(fit.residual_rms_ghz < 1e-7, "rms = {}", fit.residual_rms_ghz);
        for ((b1, _), (t1, _)) in fit.bare.iter().zip(&truth) {
            assert_abs_diff_eq!(b1.f01_ghz, t1.f01_ghz, epsilon = 1e-4);
        }
        assert_relative_eq!(fit.coupling_law.c0_ghz, 0.057, max_relative = 0.02);
        assert_relative_eq!(fit.coupling_law.slope, 0.01, max_relative = 0.05);
    }

    #[test]
    fn bare_from_dressed_zero_coupling() {
        let truth: Vec<(BareTransitions, BareTransitions)> = [6.8, 6.0, 5.2, 4.4]
            .iter()
            .map(|&f1| {
                (
                    BareTransitions { f01_ghz: f1, f02_ghz: 2.0 * f1 - 0.25 },
                    BareTransitions { f01_ghz: f1 - 1.5, f02_ghz: 2.0 * (f1 - 1.5) - 0.27 },
                )
            })
            .collect();
        // dressed with zero coupling = bare
        let records: Vec<DressedRecord> = truth
            .iter()
            .map(|(b1, b2)| {
                build_and_solve_jc(b1, b2, &cavity(0.0, 0.0)).unwrap()
            })
            .collect();
        let fit = bare_from_dressed(&records, 8.107, 5).unwrap();
        for ((b1, b2), (t1, t2)) in fit.bare.iter().zip(&truth) {
            assert_abs_diff_eq!(b1.f01_ghz, t1.f01_ghz, epsilon = 1e-6);
            assert_abs_diff_eq!(b2.f01_ghz, t2.f01_ghz, epsilon = 1e-6);
        }
    }

    #[test]
    fn underdetermined_records_rejected() {
        let b1 = BareTransitions { f01_ghz: 6.0, f02_ghz: 11.7 };
        let b2 = BareTransitions { f01_ghz: 5.1, f02_ghz: 9.9 };
        let rec = build_and_solve_jc(&b1, &b2, &cavity(0.1, 0.1)).unwrap();
        assert!(matches!(
            bare_from_dressed(&[rec, rec, rec], 8.107, 5),
            Err(DressedError::Fit(FitError::Underdetermined(_)))
        ));
    }

    #[test]
    fn exact_degeneracy_labeling_is_ambiguous() {
        // identical qutrits with equal couplings: the single-excitation
        // eigenstates are symmetric/antisymmetric superpositions with equal
        // bare overlap, so labeling must refuse rather than guess
        let b = BareTransitions { f01_ghz: 6.0, f02_ghz: 11.7 };
        assert!(matches!(
            build_and_solve_jc(&b, &b, &cavity(0.1, 0.1)),
            Err(DressedError::AmbiguousLabeling(_))
        ));
    }
}
