//! Seeded synthetic-experiment generator.
//!
//! Forward-models the two-transmon experiment from ground-truth parameters:
//! in-plane field curves for every junction, SQUID flux arches, transition
//! pairs (optionally cavity-dressed), parity-branch duplication at low
//! E_J/E_C, coherence times from the summed rate channels, flux jumps,
//! a drifting perpendicular-field offset of maximal T1, outliers, and an
//! instability band that blanks data.
//!
//! The output is the oracle for every fitting pipeline: at zero noise each
//! pipeline must recover the configuration exactly to its tolerance. A
//! given seed is bit-reproducible; per-sweep generators are derived from it
//! so sweeps can be produced independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence::{
    budget, sensitivity, BudgetChannels, BudgetInput, QuasiparticleParams, VortexParams,
};
use crate::cpb::transitions_unchecked;
use crate::dataset::{
    AlignmentScanRecord, CoherenceDataset, CoherenceRecord, DatasetHeader, SpectroscopyDataset,
    SpectroscopyRecord, Transition,
};
use crate::dressed::{build_and_solve_jc, dispersive_chi, BareTransitions, CavityParams, CouplingLaw};
use crate::field::{ej_inplane, ej_squid, gl_gap, FilmParams, JunctionFieldParams, SquidParams};
use crate::fit::EcEjRelation;
use crate::units::T_TO_MT;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("inconsistent scenario: {0}")]
    InvalidConfig(String),
}

/// Noise injection levels. All zero means exactly invertible data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Gaussian 1-sigma on every emitted frequency [GHz].
    pub freq_jitter_ghz: f64,
    /// Log-normal sigma of the multiplicative T1 scatter.
    pub t1_lognormal_sigma: f64,
    /// Probability that a frequency record is replaced by a uniform draw.
    pub outlier_fraction: f64,
    /// Per-B_perp-step probability of a half-period arch-offset jump.
    pub flux_jump_probability: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        freq_jitter_ghz: 0.0,
        t1_lognormal_sigma: 0.0,
        outlier_fraction: 0.0,
        flux_jump_probability: 0.0,
    };
}

/// Field sweep grids: a list of in-plane fields, each with a centered
/// perpendicular sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub b_par_list_t: Vec<f64>,
    /// Full perpendicular span, centered on zero [T].
    pub b_perp_span_t: f64,
    pub b_perp_points: usize,
}

/// Cavity model used during generation. Dressing is optional: the bare
/// pipelines (pair, arch, field-curve fits) are exact inverses only of
/// undressed spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    pub dress_spectra: bool,
    pub f_cavity_ghz: f64,
    pub q_total: f64,
    pub coupling: CouplingLaw,
    pub photon_truncation: usize,
}

/// Rate-channel parameters shared by both devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceConfig {
    pub vortex: VortexParams,
    /// Linear drift of the T1-optimal perpendicular offset with B_par,
    /// as an angle [deg].
    pub b0_trend_deg: f64,
    pub quasiparticle_bath_k: f64,
    pub q_background: f64,
    pub t_cavity_k: f64,
    /// Ramsey slow-noise slope a(B_par) = coefficient * B_par
    /// [(1/us)/(GHz/mT) per tesla].
    pub vibration_slope_per_t: f64,
}

/// Ground truth plus grids and noise: everything the generator needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub single_jj: JunctionFieldParams,
    pub squid_jj1: JunctionFieldParams,
    pub squid_jj2: JunctionFieldParams,
    pub squid_period_t: f64,
    pub squid_offset_t: f64,
    pub relation: EcEjRelation,
    pub film: FilmParams,
    pub cavity: CavityConfig,
    pub coherence: CoherenceConfig,
    pub noise: NoiseConfig,
    pub grid: SweepGrid,
    /// Parity branches are emitted instead of f01 when the charge
    /// dispersion exceeds this visibility threshold [GHz].
    pub parity_visibility_ghz: f64,
    /// In-plane interval where no stable data can be taken; records inside
    /// are blanked.
    pub unstable_band_t: Option<(f64, f64)>,
}

impl ScenarioConfig {
    /// The measured-device scenario: three junctions with a shared 1.03 T
    /// critical field, a 0.43 mT SQUID period, the measured coupling law
    /// and rate-channel constants. Dressing off, noise off.
    pub fn table_one(seed: u64) -> Self {
        let b_par_list_t = (0..=10).map(|i| 0.1 * i as f64).collect();
        Self {
            seed,
            single_jj: JunctionFieldParams::new(24.7, 1.03, 0.83).unwrap(),
            squid_jj1: JunctionFieldParams::new(23.5, 1.03, 0.90).unwrap(),
            squid_jj2: JunctionFieldParams::new(6.0, 1.03, 1.65).unwrap(),
            squid_period_t: 0.43e-3,
            squid_offset_t: 0.05e-3,
            relation: EcEjRelation { slope: 0.002, intercept_ghz: 0.18 },
            film: FilmParams::with_bcs_gap(10e-9, 0.010, 16e-9, 1600e-9, 10e-9, 1.2).unwrap(),
            cavity: CavityConfig {
                dress_spectra: false,
                f_cavity_ghz: 8.107,
                q_total: 5800.0,
                coupling: CouplingLaw::MEASURED,
                photon_truncation: 5,
            },
            coherence: CoherenceConfig {
                vortex: VortexParams::new(5.0, 1.3, 4.0, 0.15, -0.2e-3).unwrap(),
                b0_trend_deg: -0.15,
                quasiparticle_bath_k: 0.09,
                q_background: 3.5e6,
                t_cavity_k: 0.076,
                vibration_slope_per_t: 0.02,
            },
            noise: NoiseConfig::NONE,
            grid: SweepGrid {
                b_par_list_t,
                b_perp_span_t: 0.8e-3,
                b_perp_points: 41,
            },
            parity_visibility_ghz: 0.010,
            unstable_band_t: None,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        for (name, j) in [
            ("single_jj", &self.single_jj),
            ("squid_jj1", &self.squid_jj1),
            ("squid_jj2", &self.squid_jj2),
        ] {
            for &b in &self.grid.b_par_list_t {
                if b.abs() >= j.b_crit_par_t {
                    return Err(SynthError::InvalidConfig(format!(
                        "grid point B_par = {b} T at or past the critical field of {name}"
                    )));
                }
            }
        }
        let n = &self.noise;
        if n.freq_jitter_ghz < 0.0
            || n.t1_lognormal_sigma < 0.0
            || !(0.0..=1.0).contains(&n.outlier_fraction)
            || !(0.0..=1.0).contains(&n.flux_jump_probability)
        {
            return Err(SynthError::InvalidConfig("noise levels out of range".into()));
        }
        if self.grid.b_perp_points < 2 || self.grid.b_par_list_t.is_empty() {
            return Err(SynthError::InvalidConfig("grids must be non-empty".into()));
        }
        if !(self.squid_period_t > 0.0) {
            return Err(SynthError::InvalidConfig("SQUID period must be positive".into()));
        }
        Ok(())
    }
}

/// Generator output: per-device spectroscopy and coherence datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub single_spectroscopy: SpectroscopyDataset,
    pub squid_spectroscopy: SpectroscopyDataset,
    pub single_coherence: CoherenceDataset,
    pub squid_coherence: CoherenceDataset,
}

fn derived_seed(seed: u64, sweep: u64) -> u64 {
    // splitmix-style stream separation per sweep
    seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(sweep.wrapping_mul(0xBF58476D1CE4E5B9))
}

fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller; both uniforms drawn unconditionally to keep the stream
    // layout independent of the values
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

struct SweepState<'a> {
    cfg: &'a ScenarioConfig,
    rng: ChaCha20Rng,
    timestamp: u64,
}

impl SweepState<'_> {
    fn jitter(&mut self, f_ghz: f64) -> (f64, Option<f64>) {
        let n = &self.cfg.noise;
        if n.outlier_fraction > 0.0 && self.rng.gen::<f64>() < n.outlier_fraction {
            // gross outlier: wrong peak picked somewhere in the band
            return (self.rng.gen_range(1.0..9.0), Some(n.freq_jitter_ghz.max(1e-6)));
        }
        if n.freq_jitter_ghz > 0.0 {
            let g = gaussian(&mut self.rng);
            ((f_ghz + n.freq_jitter_ghz * g).max(1e-6), Some(n.freq_jitter_ghz))
        } else {
            (f_ghz, None)
        }
    }

    fn t1_multiplier(&mut self) -> f64 {
        let s = self.cfg.noise.t1_lognormal_sigma;
        if s > 0.0 {
            (s * gaussian(&mut self.rng)).exp()
        } else {
            1.0
        }
    }

    fn next_timestamp(&mut self) -> u64 {
        self.timestamp += 1;
        self.timestamp
    }
}

/// Generate the full synthetic experiment for a scenario.
pub fn generate_dataset(cfg: &ScenarioConfig) -> Result<SynthOutput, SynthError> {
    cfg.validate()?;

    let header = |device: &str| DatasetHeader {
        device: device.into(),
        alignment_angle_deg: 0.0,
        current_source: "simulated".into(),
    };
    let mut out = SynthOutput {
        single_spectroscopy: SpectroscopyDataset { header: header("single_jj"), records: vec![] },
        squid_spectroscopy: SpectroscopyDataset { header: header("squid"), records: vec![] },
        single_coherence: CoherenceDataset { header: header("single_jj"), records: vec![] },
        squid_coherence: CoherenceDataset { header: header("squid"), records: vec![] },
    };

    // zero-field frequencies anchor the depinning ratio in the vortex model
    let f01_single_zero = pair_for(cfg, self_ej(cfg, &cfg.single_jj, 0.0)?)?.0;
    let ej_sq_zero = self_ej(cfg, &cfg.squid_jj1, 0.0)? + self_ej(cfg, &cfg.squid_jj2, 0.0)?;
    let f01_squid_zero = pair_for(cfg, ej_sq_zero)?.0;

    for (sweep, &b_par) in cfg.grid.b_par_list_t.iter().enumerate() {
        let sweep_id = sweep as u32;
        if let Some((lo, hi)) = cfg.unstable_band_t {
            // no clear oscillations in the instability band: blanked
            if b_par >= lo && b_par <= hi {
                continue;
            }
        }
        let mut state = SweepState {
            cfg,
            rng: ChaCha20Rng::seed_from_u64(derived_seed(cfg.seed, sweep as u64)),
            timestamp: (sweep as u64) << 32,
        };

        let ej_single = self_ej(cfg, &cfg.single_jj, b_par)?;
        let ej1 = self_ej(cfg, &cfg.squid_jj1, b_par)?;
        let ej2 = self_ej(cfg, &cfg.squid_jj2, b_par)?;

        let b0_t = cfg.coherence.vortex.b0_offset_t
            + cfg.coherence.b0_trend_deg.to_radians().tan() * b_par;
        let vortex_here = VortexParams { b0_offset_t: b0_t, ..cfg.coherence.vortex };

        let gap_here = gl_gap(cfg.film.delta0_ghz, b_par, cfg.single_jj.b_crit_par_t)
            .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        let qp = QuasiparticleParams { t_bath_k: cfg.coherence.quasiparticle_bath_k, gap_ghz: gap_here };

        let mut arch_offset = cfg.squid_offset_t;

        for i in 0..cfg.grid.b_perp_points {
            let b_perp = -cfg.grid.b_perp_span_t / 2.0
                + cfg.grid.b_perp_span_t * i as f64 / (cfg.grid.b_perp_points - 1) as f64;

            // occasional flux jump; the new offset persists for the sweep
            if cfg.noise.flux_jump_probability > 0.0
                && state.rng.gen::<f64>() < cfg.noise.flux_jump_probability
            {
                let sign = if state.rng.gen::<bool>() { 1.0 } else { -1.0 };
                arch_offset += sign * cfg.squid_period_t / 2.0;
            }

            let squid = SquidParams::from_junction_energies(
                ej1,
                ej2,
                cfg.squid_period_t,
                arch_offset,
            )
            .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
            let ej_sq = ej_squid(&squid, b_perp);

            emit_point(
                cfg,
                &mut state,
                &mut out,
                sweep_id,
                b_par,
                b_perp,
                ej_single,
                ej_sq,
                &squid,
                &vortex_here,
                &qp,
                f01_single_zero,
                f01_squid_zero,
            )?;
        }
    }

    out.single_spectroscopy.sort();
    out.squid_spectroscopy.sort();
    out.single_coherence.sort();
    out.squid_coherence.sort();
    Ok(out)
}

fn self_ej(
    _cfg: &ScenarioConfig,
    j: &JunctionFieldParams,
    b_par: f64,
) -> Result<f64, SynthError> {
    ej_inplane(j, b_par).map_err(|e| SynthError::InvalidConfig(e.to_string()))
}

fn pair_for(cfg: &ScenarioConfig, ej: f64) -> Result<(f64, f64), SynthError> {
    let ec = cfg.relation.ec_ghz(ej);
    if ec <= 0.0 {
        return Err(SynthError::InvalidConfig(format!("relation gives ec <= 0 at ej = {ej}")));
    }
    transitions_unchecked(ej, ec, 0.0, crate::cpb::DEFAULT_TRUNCATION)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn emit_point(
    cfg: &ScenarioConfig,
    state: &mut SweepState,
    out: &mut SynthOutput,
    sweep_id: u32,
    b_par: f64,
    b_perp: f64,
    ej_single: f64,
    ej_sq: f64,
    squid: &SquidParams,
    vortex_here: &VortexParams,
    qp: &QuasiparticleParams,
    f01_single_zero: f64,
    f01_squid_zero: f64,
) -> Result<(), SynthError> {
    let k = crate::cpb::DEFAULT_TRUNCATION;
    let ec_single = cfg.relation.ec_ghz(ej_single);
    let ec_sq = cfg.relation.ec_ghz(ej_sq);
    let (mut f01_s, mut f02h_s) = pair_for(cfg, ej_single)?;
    let (mut f01_q, mut f02h_q) = pair_for(cfg, ej_sq)?;

    let mut cavity_freq = None;
    if cfg.cavity.dress_spectra {
        let bare1 = BareTransitions { f01_ghz: f01_s, f02_ghz: 2.0 * f02h_s };
        let bare2 = BareTransitions { f01_ghz: f01_q, f02_ghz: 2.0 * f02h_q };
        let cav = CavityParams {
            f_cavity_ghz: cfg.cavity.f_cavity_ghz,
            q_total: cfg.cavity.q_total,
            g1_ghz: cfg.cavity.coupling.g_ghz(f01_s),
            g2_ghz: cfg.cavity.coupling.g_ghz(f01_q),
            photon_truncation: cfg.cavity.photon_truncation,
        };
        let d = build_and_solve_jc(&bare1, &bare2, &cav)
            .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
        f01_s = d.q1_f01_ghz;
        f02h_s = d.q1_f02_half_ghz;
        f01_q = d.q2_f01_ghz;
        f02h_q = d.q2_f02_half_ghz;
        cavity_freq = Some(d.f_cavity_ghz);
    }

    // parity duplication when the dispersion is visible; the branch pair
    // replaces the plain f01 record (f02/2 is unmeasurable in that regime)
    let dispersion_s = transitions_unchecked(ej_single, ec_single, 0.0, k)
        .and_then(|(a, _)| Ok(a - transitions_unchecked(ej_single, ec_single, 0.5, k)?.0))
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let dispersion_q = transitions_unchecked(ej_sq, ec_sq, 0.0, k)
        .and_then(|(a, _)| Ok(a - transitions_unchecked(ej_sq, ec_sq, 0.5, k)?.0))
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;

    let push_spec = |ds: &mut SpectroscopyDataset,
                         state: &mut SweepState,
                         transition: Transition,
                         f: f64| {
        let (freq, sigma) = state.jitter(f);
        let ts = state.next_timestamp();
        ds.records.push(SpectroscopyRecord {
            sweep_id,
            b_par_t: b_par,
            b_perp_t: b_perp,
            transition,
            freq_ghz: freq,
            sigma_ghz: sigma,
            timestamp: ts,
        });
    };

    // single JJ spectroscopy
    if dispersion_s.abs() > cfg.parity_visibility_ghz {
        let even = transitions_unchecked(ej_single, ec_single, 0.0, k).unwrap().0;
        let odd = transitions_unchecked(ej_single, ec_single, 0.5, k).unwrap().0;
        push_spec(&mut out.single_spectroscopy, state, Transition::F01Even, even);
        push_spec(&mut out.single_spectroscopy, state, Transition::F01Odd, odd);
    } else {
        push_spec(&mut out.single_spectroscopy, state, Transition::F01, f01_s);
        push_spec(&mut out.single_spectroscopy, state, Transition::F02Half, f02h_s);
    }

    // SQUID spectroscopy
    if dispersion_q.abs() > cfg.parity_visibility_ghz {
        let even = transitions_unchecked(ej_sq, ec_sq, 0.0, k).unwrap().0;
        let odd = transitions_unchecked(ej_sq, ec_sq, 0.5, k).unwrap().0;
        push_spec(&mut out.squid_spectroscopy, state, Transition::F01Even, even);
        push_spec(&mut out.squid_spectroscopy, state, Transition::F01Odd, odd);
    } else {
        push_spec(&mut out.squid_spectroscopy, state, Transition::F01, f01_q);
        push_spec(&mut out.squid_spectroscopy, state, Transition::F02Half, f02h_q);
    }
    if let Some(fc) = cavity_freq {
        push_spec(&mut out.squid_spectroscopy, state, Transition::Cavity, fc);
    }

    // coherence: both devices through the additive budget
    for (is_squid, f01, ej, ec) in [
        (false, f01_s, ej_single, ec_single),
        (true, f01_q, ej_sq, ec_sq),
    ] {
        let g = cfg.cavity.coupling.g_ghz(f01);
        let anharm = 2.0 * (if is_squid { f02h_q } else { f02h_s } - f01);
        let chi = dispersive_chi(f01, anharm, g, cfg.cavity.f_cavity_ghz).unwrap_or(0.0);
        let (slope_a, sens) = if is_squid {
            let s = sensitivity(squid, &cfg.relation, b_perp)
                .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
            (cfg.coherence.vibration_slope_per_t * b_par, s / T_TO_MT)
        } else {
            (0.0, 0.0)
        };
        let input = BudgetInput {
            f01_ghz: f01,
            f01_zero_field_ghz: if is_squid { f01_squid_zero } else { f01_single_zero },
            ej_ghz: ej,
            ec_ghz: ec,
            b_par_t: b_par,
            b_perp_t: b_perp,
            b_crit_par_t: cfg.single_jj.b_crit_par_t,
            g_ghz: g,
            f_cavity_ghz: cfg.cavity.f_cavity_ghz,
            kappa_ghz: cfg.cavity.f_cavity_ghz / cfg.cavity.q_total,
            q_background: cfg.coherence.q_background,
            t_cavity_k: cfg.coherence.t_cavity_k,
            quasiparticle: *qp,
            vortex: *vortex_here,
            chi_ghz: chi,
            ramsey_slope_a: slope_a,
            sensitivity_ghz_per_mt: sens,
        };
        let b = budget(&input, &BudgetChannels::default())
            .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;

        let m = state.t1_multiplier();
        let ts = state.next_timestamp();
        let rec = CoherenceRecord {
            sweep_id,
            b_par_t: b_par,
            b_perp_t: b_perp,
            t1_us: Some(b.t1_us * m),
            t1_sigma_us: None,
            t2_star_us: Some(b.t2_star_us * m.min(1.0)),
            t2_star_sigma_us: None,
            t2_echo_us: Some(b.t2_echo_us * m.min(1.0)),
            t2_echo_sigma_us: None,
            timestamp: ts,
        };
        if is_squid {
            out.squid_coherence.records.push(rec);
        } else {
            out.single_coherence.records.push(rec);
        }
    }
    Ok(())
}

/// Alignment-scan generator: rows of the SQUID-arch offset versus one
/// in-plane coil, with a true misalignment angle and optional half-period
/// flux jumps on a fraction of rows.
pub fn generate_alignment_scan(
    misalignment_deg: f64,
    rows: usize,
    b_inplane_max_t: f64,
    squid_period_t: f64,
    jump_fraction: f64,
    offset_noise_t: f64,
    seed: u64,
) -> Vec<AlignmentScanRecord> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let slope = misalignment_deg.to_radians().tan();
    (0..rows)
        .map(|i| {
            let b_y = b_inplane_max_t * i as f64 / (rows.max(2) - 1) as f64;
            let mut offset = slope * b_y;
            if jump_fraction > 0.0 && rng.gen::<f64>() < jump_fraction {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                offset += sign * squid_period_t / 2.0;
            }
            if offset_noise_t > 0.0 {
                offset += offset_noise_t * gaussian(&mut rng);
            }
            AlignmentScanRecord { b_x_t: 0.0, b_y_t: b_y, arch_offset_t: offset }
        })
        .collect()
}
