//! Spectrum, field-dependence, and coherence models for transmon qubits in
//! applied magnetic fields, plus the parameter-extraction pipelines that
//! invert them.
//!
//! The crate is organized around the experiment it models: a single-junction
//! and an asymmetric-SQUID transmon in a copper cavity, inside a vector
//! magnet.
//!
//! - [`cpb`] — exact Cooper-pair-box / transmon spectra in the charge basis,
//!   charge dispersion and parity splitting.
//! - [`field`] — magnetic-field dependence of junction and film parameters:
//!   Ginzburg-Landau gap suppression, Fraunhofer flux penetration, SQUID
//!   flux arches, thin-film critical fields, vortex scales.
//! - [`dressed`] — two-qutrit-one-cavity Hamiltonian, dressed transitions,
//!   dispersive shifts, bare-parameter recovery.
//! - [`coherence`] — relaxation and dephasing rate models: Purcell,
//!   dielectric background, quasiparticles, vortex loss, photon shot noise,
//!   flux-noise sensitivity.
//! - [`fit`] — a Levenberg-Marquardt core and the extraction pipelines
//!   (E_J/E_C from transition pairs, SQUID arches, field curves, alignment,
//!   offsets, parity envelopes).
//! - [`synth`] — seeded synthetic-experiment generator; the oracle for every
//!   fitting pipeline.
//! - [`dataset`] — the columnar dataset formats shared by the generator and
//!   the command-line tools.
//!
//! Unit conventions live in [`units`] and are used everywhere: energies as
//! frequencies in GHz, rates in 1/us, fields in tesla.

pub mod coherence;
pub mod cpb;
pub mod dataset;
pub mod dressed;
pub mod field;
pub mod fit;
pub mod synth;
pub mod tridiag;
pub mod units;

pub use cpb::{solve_cpb, CpbParams, TransmonSpectrum};
pub use field::{FilmParams, JunctionFieldParams, SquidParams};
pub use fit::{EcEjRelation, FitResult};

