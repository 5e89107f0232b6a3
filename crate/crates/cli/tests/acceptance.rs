//! Acceptance suite: every release-gating criterion as one test printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The criteria pin eigensolver fidelity against an independent dense
//! oracle, the closed-form field and rate models against their anchor
//! values, and the full simulate -> fit pipeline as a roundtrip identity,
//! clean and under noise.

use std::time::Instant;

use approx::relative_eq;
use nalgebra::DMatrix;
use tmfield::coherence::{
    photon_shotnoise_rate, photon_shotnoise_small_chi, quasiparticle_rate, sensitivity,
    sensitivity_regression, QuasiparticleParams, ShotNoiseParams, VortexParams,
};
use tmfield::cpb::{f01_asymptotic, solve_cpb, CpbParams};
use tmfield::dressed::{build_and_solve_jc, BareTransitions, CavityParams, CouplingLaw};
use tmfield::field::{
    gl_gap, thin_film_bcrit, upper_critical_field, vortex_scales, FilmParams,
    JunctionFieldParams, SquidParams,
};
use tmfield::fit::{
    ej_from_f01, fit_alignment, fit_ej_ec_from_pair, offsets::AlignmentPoint, EcEjRelation,
};
use tmfield::synth::{generate_alignment_scan, NoiseConfig, ScenarioConfig, SweepGrid};
use tmfield::units::bcs_gap_ghz;
use tmfield_cli::{commands, ToleranceProfile};

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

fn criterion(n: u32, name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("ACCEPTANCE {n} ({name}): PASS"),
        Err(msg) => {
            println!("ACCEPTANCE {n} ({name}): FAIL - {msg}");
            panic!("acceptance criterion {n} ({name}) failed: {msg}");
        }
    }
}

/// Independent oracle: dense symmetric diagonalization of the charge-basis
/// Hamiltonian at double truncation.
fn dense_oracle_transitions(ej: f64, ec: f64, ng: f64, k: usize) -> (f64, f64) {
    let dim = 2 * k + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let n = i as f64 - k as f64;
        h[(i, i)] = 4.0 * ec * (n - ng) * (n - ng);
    }
    for i in 0..dim - 1 {
        h[(i, i + 1)] = -ej / 2.0;
        h[(i + 1, i)] = -ej / 2.0;
    }
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (ev[1] - ev[0], (ev[2] - ev[0]) / 2.0)
}

#[test]
fn acceptance_01_eigensolver_fidelity() {
    criterion(1, "eigensolver vs dense k=40 oracle on 10x10 grid", || {
        let start = Instant::now();
        let mut worst = 0.0f64;
        for i in 0..10 {
            let ec = 0.1 + 0.1 * i as f64;
            for j in 0..10 {
                // ratios log-spaced over [4, 200]
                let ratio = 4.0 * (200.0f64 / 4.0).powf(j as f64 / 9.0);
                let ej = ratio * ec;
                let s = solve_cpb(&CpbParams::new(ej, ec, 0.0).unwrap())
                    .map_err(|e| e.to_string())?;
                let (f01_o, f02h_o) = dense_oracle_transitions(ej, ec, 0.0, 40);
                worst = worst
                    .max((s.f01_ghz - f01_o).abs())
                    .max((s.f02_half_ghz - f02h_o).abs());
            }
        }
        let elapsed = start.elapsed();
        ensure!(worst < 1e-8, "worst deviation {worst:.3e} GHz >= 1e-8");
        ensure!(elapsed.as_secs_f64() < 1.0, "grid took {elapsed:?} >= 1 s");
        Ok(())
    });
}

#[test]
fn acceptance_02_asymptotic_transmon_formula() {
    criterion(2, "sqrt(8 EJ EC) - EC accuracy thresholds", || {
        for ratio in [50.0, 80.0, 120.0, 200.0] {
            let ec = 0.25;
            let s = solve_cpb(&CpbParams::new(ratio * ec, ec, 0.0).unwrap())
                .map_err(|e| e.to_string())?;
            let rel = (s.f01_ghz - f01_asymptotic(ratio * ec, ec)).abs() / s.f01_ghz;
            ensure!(rel < 0.005, "ratio {ratio}: deviation {rel:.4} >= 0.5%");
        }
        let ec = 0.25;
        let s =
            solve_cpb(&CpbParams::new(5.0 * ec, ec, 0.0).unwrap()).map_err(|e| e.to_string())?;
        let rel = (s.f01_ghz - f01_asymptotic(5.0 * ec, ec)).abs() / s.f01_ghz;
        ensure!(rel > 0.02, "ratio 5: deviation {rel:.4} <= 2%, approximation too good");
        Ok(())
    });
}

#[test]
fn acceptance_03_table_barrier_heights() {
    criterion(3, "effective barrier heights from junction periods", || {
        let jjs = [
            (24.7, 0.83, 231e-9),
            (23.5, 0.90, 206e-9),
            (6.0, 1.65, 122e-9),
        ];
        let mut heights = Vec::new();
        for (ej0, b_phi0, l2) in jjs {
            let j = JunctionFieldParams::new(ej0, 1.03, b_phi0)
                .and_then(|j| j.with_finger_width(l2))
                .map_err(|e| e.to_string())?;
            heights.push(j.effective_barrier_height_m().unwrap());
        }
        for h in &heights {
            let dev = (h - 10e-9).abs() / 10e-9;
            ensure!(dev < 0.20, "height {h:.3e} m deviates {dev:.3} from 10 nm");
        }
        let (min, max) = heights
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), h| (lo.min(*h), hi.max(*h)));
        ensure!(max / min < 1.10, "mutual spread {:.4} >= 10%", max / min);
        Ok(())
    });
}

#[test]
fn acceptance_04_thin_film_critical_fields() {
    criterion(4, "thin-film parallel critical fields vs thickness", || {
        for (d_nm, expect) in [(10.0, 1.0), (15.0, 0.5), (30.0, 0.2)] {
            let film =
                FilmParams::with_bcs_gap(d_nm * 1e-9, 0.010, 16e-9, 1600e-9, d_nm * 1e-9, 1.2)
                    .map_err(|e| e.to_string())?;
            let b = thin_film_bcrit(&film);
            let dev = (b - expect).abs() / expect;
            ensure!(dev < 0.10, "d = {d_nm} nm: {b:.4} T deviates {dev:.3} from {expect} T");
        }
        Ok(())
    });
}

#[test]
fn acceptance_05_vortex_scales() {
    criterion(5, "coherence length, entry field, Bc2, threshold", || {
        let film = FilmParams::with_bcs_gap(10e-9, 0.010, 16e-9, 1600e-9, 10e-9, 1.2)
            .map_err(|e| e.to_string())?;
        let v = vortex_scales(&film, 410e-9);
        ensure!(
            (v.xi_m - 108e-9).abs() / 108e-9 < 0.02,
            "xi = {:.2} nm not within 2% of 108 nm",
            v.xi_m * 1e9
        );
        let bc2 = upper_critical_field(120e-9);
        ensure!(
            (bc2 - 23e-3).abs() / 23e-3 < 0.02,
            "Bc2(120 nm) = {:.3} mT not within 2% of 23 mT",
            bc2 * 1e3
        );
        ensure!(
            (10e-3..=13e-3).contains(&v.b_entry_t),
            "B_v = {:.3} mT outside [10, 13] mT",
            v.b_entry_t * 1e3
        );
        let vp = VortexParams::new(5.0, 1.3, 4.0, 0.15, 0.0).map_err(|e| e.to_string())?;
        ensure!(
            (vp.threshold_field_mt() - 0.26).abs() / 0.26 < 0.02,
            "threshold {:.4} mT not within 2% of 0.26 mT",
            vp.threshold_field_mt()
        );
        Ok(())
    });
}

#[test]
fn acceptance_06_gap_arithmetic() {
    criterion(6, "BCS gap from Tc and GL suppression at 0.88 T", || {
        let gap = bcs_gap_ghz(1.2);
        let expect = 1.764 * 1.380649e-23 * 1.2 / 6.62607015e-34 / 1e9;
        ensure!(
            (gap - expect).abs() / expect < 0.001,
            "gap {gap} GHz deviates from {expect} GHz"
        );
        let frac = gl_gap(gap, 0.88, 1.03).map_err(|e| e.to_string())? / gap;
        ensure!(
            (0.48..=0.56).contains(&frac),
            "GL fraction {frac:.4} outside [0.48, 0.56]"
        );
        Ok(())
    });
}

#[test]
fn acceptance_07_quasiparticle_bound() {
    criterion(7, "quasiparticle lifetime above measured T1 at 0.88 T", || {
        let gap = 0.52 * bcs_gap_ghz(1.2);
        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let ej = ej_from_f01(1.8, &relation, 20).map_err(|e| e.to_string())?;
        let qp = QuasiparticleParams::new(0.09, gap).map_err(|e| e.to_string())?;
        let rate =
            quasiparticle_rate(ej, relation.ec_ghz(ej), 1.8, &qp).map_err(|e| e.to_string())?;
        ensure!(1.0 / rate >= 2.4, "1/Gamma_qp = {:.3} us < 2.4 us", 1.0 / rate);

        let mut last = f64::INFINITY;
        for t_r in [0.05, 0.07, 0.09, 0.12, 0.15, 0.20] {
            let qp = QuasiparticleParams::new(t_r, gap).map_err(|e| e.to_string())?;
            let lifetime = 1.0
                / quasiparticle_rate(ej, relation.ec_ghz(ej), 1.8, &qp)
                    .map_err(|e| e.to_string())?;
            ensure!(lifetime < last, "lifetime not monotone decreasing at T_R = {t_r} K");
            last = lifetime;
        }
        Ok(())
    });
}

#[test]
fn acceptance_08_shot_noise_constants() {
    criterion(8, "thermal photon number, exact zeros, small-chi series", || {
        let sp = ShotNoiseParams::new(-1e-3, 1.4e-3, 0.076, 8.107).map_err(|e| e.to_string())?;
        let n_th = sp.n_thermal();
        ensure!(
            (5.5e-3..=6.5e-3).contains(&n_th),
            "n_th = {n_th:.4e} outside [5.5e-3, 6.5e-3]"
        );
        let zero_chi =
            ShotNoiseParams::new(0.0, 1.4e-3, 0.076, 8.107).map_err(|e| e.to_string())?;
        ensure!(photon_shotnoise_rate(&zero_chi) == 0.0, "Gamma(chi = 0) != 0");
        let zero_t =
            ShotNoiseParams::new(-1e-3, 1.4e-3, 0.0, 8.107).map_err(|e| e.to_string())?;
        ensure!(
            photon_shotnoise_rate(&zero_t).abs() < 1e-15,
            "Gamma(T = 0) = {} != 0",
            photon_shotnoise_rate(&zero_t)
        );
        let kappa = 1.4e-3;
        for chi in [kappa * 1e-3, kappa * 3e-3, kappa * 9e-3] {
            let sp = ShotNoiseParams::new(chi, kappa, 0.076, 8.107).map_err(|e| e.to_string())?;
            let exact = photon_shotnoise_rate(&sp);
            let series = photon_shotnoise_small_chi(&sp);
            let rel = (exact - series).abs() / series;
            ensure!(rel < 0.01, "chi/kappa = {}: series deviation {rel:.4}", chi / kappa);
        }
        Ok(())
    });
}

/// Run the full CLI pipeline on one scenario, returning the field-fit JSON
/// plus the zero-field arch row (sum, alpha, period, offset).
fn run_pipeline(
    cfg: &ScenarioConfig,
    dir: &std::path::Path,
) -> Result<(serde_json::Value, Vec<f64>, EcEjRelation), String> {
    let config_path = dir.join("scenario.toml");
    std::fs::write(&config_path, toml::to_string(cfg).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let sim = dir.join("sim");
    commands::simulate::run(&config_path, &sim, None).map_err(|e| e.to_string())?;

    let spec_sq = dir.join("spec_squid");
    commands::fit_spectrum::run(
        &sim.join("squid_spectroscopy.tsv"),
        &spec_sq,
        ToleranceProfile::Default,
    )
    .map_err(|e| e.to_string())?;
    let spec_single = dir.join("spec_single");
    commands::fit_spectrum::run(
        &sim.join("single_jj_spectroscopy.tsv"),
        &spec_single,
        ToleranceProfile::Default,
    )
    .map_err(|e| e.to_string())?;

    let arch = dir.join("arch");
    commands::fit_arch::run(
        &sim.join("squid_spectroscopy.tsv"),
        &spec_sq.join("relation.json"),
        &arch,
        1,
        ToleranceProfile::Default,
    )
    .map_err(|e| e.to_string())?;

    let field = dir.join("field");
    commands::fit_field::run(
        &[spec_single.join("single_curve.tsv"), arch.join("squid_curves.tsv")],
        &field,
        Some(cfg.single_jj.b_crit_par_t),
        None,
        ToleranceProfile::Default,
    )
    .map_err(|e| e.to_string())?;

    let field_fit: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(field.join("field_fit.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;

    // zero-field arch parameters from the arches table
    let arches = std::fs::read_to_string(arch.join("arches.tsv")).map_err(|e| e.to_string())?;
    let row: Vec<f64> = arches
        .lines()
        .filter(|l| !l.starts_with('#'))
        .next()
        .ok_or("no arch rows")?
        .split('\t')
        .skip(2)
        .take(6)
        .map(|t| t.parse::<f64>().unwrap())
        .collect();

    let relation: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(spec_sq.join("relation.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let rel = EcEjRelation {
        slope: relation["relation"]["slope"].as_f64().unwrap(),
        intercept_ghz: relation["relation"]["intercept_ghz"].as_f64().unwrap(),
    };
    Ok((field_fit, row, rel))
}

fn junction_from(fit: &serde_json::Value, label: &str) -> Result<(f64, f64), String> {
    let arr = fit["junctions"].as_array().ok_or("no junctions array")?;
    for j in arr {
        if j["label"].as_str() == Some(label) {
            return Ok((j["ej0_ghz"].as_f64().unwrap(), j["b_phi0_t"].as_f64().unwrap()));
        }
    }
    Err(format!("junction {label} missing from fit"))
}

#[test]
fn acceptance_09_pipeline_roundtrips() {
    criterion(9, "simulate -> fit-spectrum -> fit-arch -> fit-field roundtrip", || {
        let start = Instant::now();

        // clean roundtrip over the full grid: every parameter to 1e-4
        let cfg = ScenarioConfig::table_one(42);
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (field_fit, arch0, rel) = run_pipeline(&cfg, tmp.path())?;
        let truth: &[(&str, f64, f64)] = &[
            ("single", 24.7, 0.83),
            ("squid_jj1", 23.5, 0.90),
            ("squid_jj2", 6.0, 1.65),
        ];
        for &(label, ej0, b_phi0) in truth {
            let (ej0_fit, b_phi0_fit) = junction_from(&field_fit, label)?;
            ensure!(
                relative_eq!(ej0_fit, ej0, max_relative = 1e-4),
                "{label}: ej0 {ej0_fit} vs {ej0}"
            );
            ensure!(
                relative_eq!(b_phi0_fit, b_phi0, max_relative = 1e-4),
                "{label}: b_phi0 {b_phi0_fit} vs {b_phi0}"
            );
        }
        // zero-field arch: sum, alpha, period, offset
        ensure!(
            relative_eq!(arch0[0], 29.5, max_relative = 1e-4),
            "ej_sum {} vs 29.5",
            arch0[0]
        );
        ensure!(
            relative_eq!(arch0[1], 17.5 / 29.5, max_relative = 1e-4),
            "alpha {} vs {}",
            arch0[1],
            17.5 / 29.5
        );
        ensure!(
            relative_eq!(arch0[4], 0.43e-3, max_relative = 1e-4),
            "period {} vs 0.43e-3",
            arch0[4]
        );
        ensure!(
            relative_eq!(arch0[5], 0.05e-3, max_relative = 1e-4),
            "offset {} vs 0.05e-3",
            arch0[5]
        );
        ensure!(
            relative_eq!(rel.slope, 0.002, max_relative = 1e-4)
                && relative_eq!(rel.intercept_ghz, 0.18, max_relative = 1e-4),
            "relation ({}, {}) vs (0.002, 0.18)",
            rel.slope,
            rel.intercept_ghz
        );

        // noisy Monte-Carlo: 1 MHz jitter, 100 seeds, 2% recovery
        let mc_grid = SweepGrid {
            b_par_list_t: vec![0.0, 0.25, 0.5, 0.7],
            b_perp_span_t: 0.8e-3,
            b_perp_points: 21,
        };
        for seed in 0..100u64 {
            let cfg = ScenarioConfig {
                seed,
                noise: NoiseConfig {
                    freq_jitter_ghz: 1e-3,
                    t1_lognormal_sigma: 0.0,
                    outlier_fraction: 0.0,
                    flux_jump_probability: 0.0,
                },
                grid: mc_grid.clone(),
                ..ScenarioConfig::table_one(seed)
            };
            let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
            let (field_fit, arch0, _) = run_pipeline(&cfg, tmp.path())
                .map_err(|e| format!("seed {seed}: {e}"))?;
            for &(label, ej0, b_phi0) in truth {
                let (ej0_fit, b_phi0_fit) = junction_from(&field_fit, label)?;
                ensure!(
                    relative_eq!(ej0_fit, ej0, max_relative = 0.02),
                    "seed {seed} {label}: ej0 {ej0_fit} vs {ej0}"
                );
                ensure!(
                    relative_eq!(b_phi0_fit, b_phi0, max_relative = 0.02),
                    "seed {seed} {label}: b_phi0 {b_phi0_fit} vs {b_phi0}"
                );
            }
            ensure!(
                relative_eq!(arch0[0], 29.5, max_relative = 0.02),
                "seed {seed}: ej_sum {}",
                arch0[0]
            );
            ensure!(
                relative_eq!(arch0[4], 0.43e-3, max_relative = 0.02),
                "seed {seed}: period {}",
                arch0[4]
            );
        }

        let elapsed = start.elapsed();
        ensure!(
            elapsed.as_secs_f64() < 60.0,
            "pipeline roundtrips took {elapsed:?} >= 60 s"
        );
        Ok(())
    });
}

#[test]
fn acceptance_10_alignment_recovery() {
    criterion(10, "misalignment angle, clean and with flux jumps", || {
        // clean scan
        let rows = generate_alignment_scan(-0.61, 24, 0.2, 0.43e-3, 0.0, 0.0, 1);
        let points: Vec<AlignmentPoint> = rows
            .iter()
            .map(|r| AlignmentPoint { b_inplane_t: r.b_y_t, arch_offset_t: r.arch_offset_t })
            .collect();
        let fit = fit_alignment(&points, 0.43e-3).map_err(|e| e.to_string())?;
        let err = (fit.misalignment_angle_rad.to_degrees() + 0.61).abs();
        ensure!(err <= 0.01, "clean recovery off by {err:.4} deg");

        // Monte-Carlo with 10% half-period jumps and offset noise
        for seed in 0..50u64 {
            let rows = generate_alignment_scan(-0.61, 24, 0.2, 0.43e-3, 0.10, 0.02e-3, seed);
            let points: Vec<AlignmentPoint> = rows
                .iter()
                .map(|r| AlignmentPoint { b_inplane_t: r.b_y_t, arch_offset_t: r.arch_offset_t })
                .collect();
            let fit = fit_alignment(&points, 0.43e-3).map_err(|e| e.to_string())?;
            let err = (fit.misalignment_angle_rad.to_degrees() + 0.61).abs();
            ensure!(err <= 0.05, "seed {seed}: recovery off by {err:.4} deg");
        }
        Ok(())
    });
}

#[test]
fn acceptance_11_sensitivity_operator_and_regression() {
    criterion(11, "flux sensitivity: zeros, FD agreement, regression", || {
        // noiseless regression line: exact recovery
        let points: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let s = 0.25 * i as f64;
                (s, 0.02 * s + 0.1)
            })
            .collect();
        let (a, b, _, _) = sensitivity_regression(&points).map_err(|e| e.to_string())?;
        ensure!(
            (a - 0.02).abs() < 1e-12 && (b - 0.1).abs() < 1e-12,
            "regression recovered ({a}, {b})"
        );

        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let squid =
            SquidParams::from_junction_energies(23.5, 6.0, 0.43e-3, 0.05e-3)
                .map_err(|e| e.to_string())?;

        // sweetspot zeros: below 1e-6 GHz/mT = 1e-3 GHz/T
        for b in [0.05e-3, 0.05e-3 + 0.215e-3] {
            let s = sensitivity(&squid, &relation, b).map_err(|e| e.to_string())?;
            ensure!(s < 1e-3, "sweetspot sensitivity {s} GHz/T");
        }

        // end-to-end finite difference at mid-arch within 0.1%
        let f01_at = |b: f64| {
            let ej = tmfield::field::ej_squid(&squid, b);
            tmfield::cpb::transitions_unchecked(ej, relation.ec_ghz(ej), 0.0, 20)
                .unwrap()
                .0
        };
        for frac in [0.15, 0.25, 0.35] {
            let b = 0.05e-3 + frac * 0.43e-3;
            let h = 1e-5 * 1e-3;
            let fd = ((f01_at(b + h) - f01_at(b - h)) / (2.0 * h)).abs();
            let s = sensitivity(&squid, &relation, b).map_err(|e| e.to_string())?;
            let rel = (s - fd).abs() / fd;
            ensure!(rel < 1e-3, "at {frac} period: analytic {s} vs FD {fd} ({rel:.2e})");
        }
        Ok(())
    });
}

#[test]
fn acceptance_12_dressed_state_correction() {
    criterion(12, "bare-vs-dressed E_J correction near the cavity", || {
        let relation = EcEjRelation { slope: 0.002, intercept_ghz: 0.18 };
        let law = CouplingLaw::MEASURED;
        let f_c = 8.107;
        // far-detuned partner qutrit, fixed
        let partner = BareTransitions { f01_ghz: 4.0, f02_ghz: 7.75 };

        let mut last_corr = f64::INFINITY;
        for f01_target in [7.1, 6.8, 6.4, 6.0, 5.5, 5.0] {
            let ej_bare = ej_from_f01(f01_target, &relation, 20).map_err(|e| e.to_string())?;
            let ec_bare = relation.ec_ghz(ej_bare);
            let (f01_b, f02h_b) =
                tmfield::cpb::transitions_unchecked(ej_bare, ec_bare, 0.0, 20)
                    .map_err(|e| e.to_string())?;
            let bare = BareTransitions { f01_ghz: f01_b, f02_ghz: 2.0 * f02h_b };
            let cav = CavityParams::new(f_c, 5800.0, law.g_ghz(f01_b), law.g_ghz(partner.f01_ghz))
                .map_err(|e| e.to_string())?;
            let dressed = build_and_solve_jc(&bare, &partner, &cav).map_err(|e| e.to_string())?;

            // naive extraction treats the dressed pair as bare
            let (ej_naive, _, _) =
                fit_ej_ec_from_pair(dressed.q1_f01_ghz, dressed.q1_f02_half_ghz, 20)
                    .map_err(|e| e.to_string())?;
            let corr = (ej_naive - ej_bare) / ej_naive;
            ensure!(corr > 0.0, "correction at f01 = {f01_target} not downward: {corr}");
            ensure!(
                corr <= 0.03,
                "correction {corr:.4} > 3% at f01 = {f01_target} GHz"
            );
            ensure!(
                corr < last_corr,
                "correction not decreasing with detuning at f01 = {f01_target}"
            );
            last_corr = corr;
        }
        Ok(())
    });
}
