//! `fit-arch`: one SQUID flux-arch fit per in-plane field point, with the
//! E_C-E_J relation tying the charging energy. Plain transitions enter as
//! frequencies; parity-split points are first reduced to per-point E_J
//! envelope estimates and enter in energy space. Emits the per-sweep arch
//! parameters and the E_J sum/|difference| curves for `fit-field`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use tmfield::cpb::{transitions_unchecked, DEFAULT_TRUNCATION};
use tmfield::dataset::{serialize_ej_curves, EjCurveRecord, SpectroscopyDataset, Transition};
use tmfield::fit::{
    fit_parity_split, fit_squid_arch, ArchEnergyPoint, ArchFit, ArchPoint, EcEjRelation,
};

use super::fit_spectrum::RelationArtifact;
use super::{read_json, read_to_string, write_file, CliError};
use crate::manifest::{DirLock, RunManifest};
use crate::ToleranceProfile;

struct SweepData {
    sweep_id: u32,
    b_par_t: f64,
    points: Vec<ArchPoint>,
    energy_points: Vec<ArchEnergyPoint>,
}

/// Propagate a frequency uncertainty onto an envelope E_J estimate via the
/// lower-branch slope d f01(n_g = 0.5)/d E_J.
fn parity_sigma_ej(ej: f64, relation: &EcEjRelation, sigma_f: f64) -> Option<f64> {
    let h = 1e-4 * ej;
    let lower = |e: f64| -> Option<f64> {
        let ec = relation.ec_ghz(e);
        if ec <= 0.0 {
            return None;
        }
        Some(transitions_unchecked(e, ec, 0.5, DEFAULT_TRUNCATION).ok()?.0)
    };
    let slope = (lower(ej + h)? - lower(ej - h)?) / (2.0 * h);
    if slope.abs() < 1e-12 {
        return None;
    }
    Some(sigma_f / slope.abs())
}

fn collect_sweeps(ds: &SpectroscopyDataset, relation: &EcEjRelation) -> Vec<SweepData> {
    // per (sweep, b_perp): plain f01/f02_half and parity branch peaks
    type PointAgg = (f64, Option<(f64, Option<f64>)>, Option<f64>, Vec<f64>, Option<f64>);
    let mut by_point: BTreeMap<(u32, u64), PointAgg> = BTreeMap::new();
    for r in &ds.records {
        let entry = by_point
            .entry((r.sweep_id, r.b_perp_t.to_bits()))
            .or_insert((r.b_par_t, None, None, Vec::new(), None));
        match r.transition {
            Transition::F01 => entry.1 = Some((r.freq_ghz, r.sigma_ghz)),
            Transition::F02Half => entry.2 = Some(r.freq_ghz),
            Transition::F01Even | Transition::F01Odd => {
                entry.3.push(r.freq_ghz);
                entry.4 = r.sigma_ghz;
            }
            Transition::Cavity => {}
        }
    }

    let mut sweeps: BTreeMap<u32, SweepData> = BTreeMap::new();
    for ((sweep_id, b_perp_bits), (b_par, f01, f02h, parity_peaks, parity_sigma)) in by_point {
        let b_perp = f64::from_bits(b_perp_bits);
        let sweep = sweeps.entry(sweep_id).or_insert_with(|| SweepData {
            sweep_id,
            b_par_t: b_par,
            points: Vec::new(),
            energy_points: Vec::new(),
        });
        if let Some((f01, sigma)) = f01 {
            sweep.points.push(ArchPoint {
                b_perp_t: b_perp,
                f01_ghz: f01,
                f02_half_ghz: f02h,
                sigma_ghz: sigma,
            });
        } else if !parity_peaks.is_empty() {
            if let Ok(fit) = fit_parity_split(&parity_peaks, relation) {
                let sigma_ej =
                    parity_sigma.and_then(|s| parity_sigma_ej(fit.ej_ghz, relation, s));
                sweep.energy_points.push(ArchEnergyPoint {
                    b_perp_t: b_perp,
                    ej_ghz: fit.ej_ghz,
                    sigma_ghz: sigma_ej,
                });
            }
        }
    }
    sweeps.into_values().filter(|s| s.points.len() + s.energy_points.len() >= 5).collect()
}

pub fn run(
    dataset_path: &Path,
    relation_path: &Path,
    out_dir: &Path,
    jobs: usize,
    profile: ToleranceProfile,
) -> Result<(), CliError> {
    let _lock = DirLock::acquire(out_dir)?;
    let ds = SpectroscopyDataset::parse(&read_to_string(dataset_path)?)?;
    if ds.records.is_empty() {
        return Err(CliError::Input(format!(
            "{}: dataset has no records",
            dataset_path.display()
        )));
    }
    let relation_artifact: RelationArtifact = read_json(relation_path)?;
    let relation = relation_artifact.relation;

    let mut manifest = RunManifest::new(
        "fit-arch",
        serde_json::json!({
            "dataset": dataset_path.display().to_string(),
            "relation": relation_path.display().to_string(),
            "out_dir": out_dir.display().to_string(),
            "jobs": jobs,
        }),
    );
    manifest.tolerance_profile = Some(profile.name().to_string());
    manifest.add_input(dataset_path)?;
    manifest.add_input(relation_path)?;

    let work = collect_sweeps(&ds, &relation);
    if work.is_empty() {
        return Err(CliError::Input("no sweep has >= 5 usable arch points".into()));
    }

    // independent fits, parallel across sweeps
    let opts = profile.fit_options();
    let jobs = jobs.max(1).min(work.len());
    let fit_one = |s: &SweepData| {
        (
            s.sweep_id,
            s.b_par_t,
            fit_squid_arch(&s.points, &s.energy_points, &relation, &opts),
        )
    };
    let mut results: Vec<(u32, f64, Result<ArchFit, tmfield::fit::FitError>)> = if jobs == 1 {
        work.iter().map(fit_one).collect()
    } else {
        let mut results = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = work
                .chunks(work.len().div_ceil(jobs))
                .map(|chunk| scope.spawn(move || chunk.iter().map(fit_one).collect::<Vec<_>>()))
                .collect();
            for h in handles {
                results.extend(h.join().expect("arch fit worker panicked"));
            }
        });
        results
    };
    results.sort_by_key(|r| r.0);

    let mut arches_out = String::from(
        "# tmfield arches v1\n# columns = sweep_id b_par_t ej_sum_ghz alpha ej1_ghz ej2_ghz \
         period_t offset_t rms_ghz converged\n",
    );
    let mut curves: Vec<EjCurveRecord> = Vec::new();
    let mut n_failed = 0usize;
    for (sweep_id, b_par, result) in &results {
        match result {
            Ok(fit) => {
                let (e1, e2) = fit.junction_energies_ghz;
                let _ = writeln!(
                    arches_out,
                    "{sweep_id}\t{b_par}\t{}\t{}\t{e1}\t{e2}\t{}\t{}\t{}\t{}",
                    fit.params.ej_sum_ghz,
                    fit.params.asymmetry_alpha,
                    fit.params.b_phi0_squid_t,
                    fit.params.b_perp_offset_t,
                    fit.fit.residual_rms,
                    fit.fit.converged()
                );
                curves.push(EjCurveRecord {
                    junction: "squid_sum".into(),
                    b_par_t: *b_par,
                    ej_ghz: fit.params.ej_sum_ghz,
                    sigma_ghz: Some(fit.fit.uncertainties[0]).filter(|s| s.is_finite()),
                });
                curves.push(EjCurveRecord {
                    junction: "squid_diff".into(),
                    b_par_t: *b_par,
                    ej_ghz: e1 - e2,
                    sigma_ghz: None,
                });
            }
            Err(e) => {
                let _ = writeln!(arches_out, "# sweep {sweep_id} at {b_par} T failed: {e}");
                n_failed += 1;
            }
        }
    }

    let arches_path = out_dir.join("arches.tsv");
    write_file(&arches_path, &arches_out)?;
    manifest.record_output(&arches_path);

    let curves_path = out_dir.join("squid_curves.tsv");
    write_file(&curves_path, &serialize_ej_curves(&curves))?;
    manifest.record_output(&curves_path);
    manifest.write(out_dir)?;

    if n_failed > 0 && curves.is_empty() {
        return Err(CliError::Convergence(format!("all {n_failed} arch fits failed")));
    }
    if n_failed > 0 {
        eprintln!("tmfield: warning: {n_failed} arch fits failed; partial curves written");
    }
    Ok(())
}
