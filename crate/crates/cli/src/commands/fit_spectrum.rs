//! `fit-spectrum`: per-point (E_J, E_C) pair fits, the robust E_C-E_J
//! relation, and charge-parity envelope fits where branches are present.
//! Single-JJ datasets additionally produce an E_J(B_par) curve.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use tmfield::dataset::{serialize_ej_curves, EjCurveRecord, SpectroscopyDataset, Transition};
use tmfield::fit::{fit_ec_ej_correlation, fit_ej_ec_from_pair, fit_parity_split, EcEjRelation};

use super::{read_to_string, write_file, write_json, CliError};
use crate::manifest::{DirLock, RunManifest};
use crate::ToleranceProfile;

/// relation.json payload.
#[derive(Debug, Serialize, serde::Deserialize)]
pub struct RelationArtifact {
    pub relation: EcEjRelation,
    pub inlier_fraction: f64,
    pub n_pairs: usize,
    pub unreliable: bool,
}

/// A point group key: one (sweep, B_par, B_perp) spectroscopy setting.
/// Fields are compared through their bit patterns, which is exact for
/// grid-generated data and merely over-splits for noisy duplicates.
type GroupKey = (u32, u64, u64);

fn group_key(sweep: u32, b_par: f64, b_perp: f64) -> GroupKey {
    (sweep, b_par.to_bits(), b_perp.to_bits())
}

pub fn run(
    dataset_path: &Path,
    out_dir: &Path,
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

    let mut manifest = RunManifest::new(
        "fit-spectrum",
        serde_json::json!({
            "dataset": dataset_path.display().to_string(),
            "out_dir": out_dir.display().to_string(),
        }),
    );
    manifest.tolerance_profile = Some(profile.name().to_string());
    manifest.add_input(dataset_path)?;

    // group records per field point
    let mut groups: BTreeMap<GroupKey, Vec<&tmfield::dataset::SpectroscopyRecord>> =
        BTreeMap::new();
    for r in &ds.records {
        groups.entry(group_key(r.sweep_id, r.b_par_t, r.b_perp_t)).or_default().push(r);
    }

    // pass 1: plain ``pair`` groups -> (ej, ec)
    let k = tmfield::cpb::DEFAULT_TRUNCATION;
    let mut pairs_out = String::from(
        "# tmfield pairs v1\n# columns = sweep_id b_par_t b_perp_t method ej_ghz ec_ghz rms_ghz converged\n",
    );
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut pair_rows: Vec<(u32, f64, f64, f64)> = Vec::new(); // sweep, b_par, (ej, ec)... ej only needed with b_par
    let mut n_failed = 0usize;

    for (&(sweep, b_par_bits, b_perp_bits), recs) in &groups {
        let f01 = recs.iter().find(|r| r.transition == Transition::F01).map(|r| r.freq_ghz);
        let f02h =
            recs.iter().find(|r| r.transition == Transition::F02Half).map(|r| r.freq_ghz);
        let (Some(f01), Some(f02h)) = (f01, f02h) else { continue };
        let b_par = f64::from_bits(b_par_bits);
        let b_perp = f64::from_bits(b_perp_bits);
        match fit_ej_ec_from_pair(f01, f02h, k) {
            Ok((ej, ec, fit)) => {
                let _ = writeln!(
                    pairs_out,
                    "{sweep}\t{b_par}\t{b_perp}\tpair\t{ej}\t{ec}\t{}\t{}",
                    fit.residual_rms,
                    fit.converged()
                );
                pairs.push((ej, ec));
                pair_rows.push((sweep, b_par, ej, ec));
            }
            Err(_) => n_failed += 1,
        }
    }

    if pairs.len() < 5 {
        // not enough pair groups anywhere: nothing downstream can work
        let path = out_dir.join("pairs.tsv");
        write_file(&path, &pairs_out)?;
        manifest.record_output(&path);
        manifest.write(out_dir)?;
        return Err(CliError::Convergence(format!(
            "only {} usable transition pairs ({} failed fits)",
            pairs.len(),
            n_failed
        )));
    }

    let correlation = fit_ec_ej_correlation(&pairs).map_err(|e| {
        CliError::Convergence(format!("E_C-E_J correlation failed: {e}"))
    })?;
    let relation = correlation.relation;

    // pass 2: parity-split groups bounded through the relation
    let mut parity_rows: Vec<(u32, f64, f64)> = Vec::new(); // sweep, b_par, ej
    for (&(sweep, b_par_bits, _), recs) in &groups {
        let peaks: Vec<f64> = recs
            .iter()
            .filter(|r| matches!(r.transition, Transition::F01Even | Transition::F01Odd))
            .map(|r| r.freq_ghz)
            .collect();
        if peaks.is_empty() {
            continue;
        }
        let b_par = f64::from_bits(b_par_bits);
        if let Ok(fit) = fit_parity_split(&peaks, &relation) {
            let b_perp = f64::from_bits(recs[0].b_perp_t.to_bits());
            let _ = writeln!(
                pairs_out,
                "{sweep}\t{b_par}\t{b_perp}\tparity\t{}\t{}\t0\t{}",
                fit.ej_ghz,
                fit.ec_ghz,
                !fit.under_constrained
            );
            parity_rows.push((sweep, b_par, fit.ej_ghz));
        } else {
            n_failed += 1;
        }
    }

    if n_failed > 0 {
        eprintln!("tmfield: warning: {n_failed} point fits failed; continuing without them");
    }

    let pairs_path = out_dir.join("pairs.tsv");
    write_file(&pairs_path, &pairs_out)?;
    manifest.record_output(&pairs_path);

    let relation_path = out_dir.join("relation.json");
    write_json(
        &relation_path,
        &RelationArtifact {
            relation,
            inlier_fraction: correlation.inlier_fraction,
            n_pairs: pairs.len(),
            unreliable: correlation.unreliable,
        },
    )?;
    manifest.record_output(&relation_path);

    // single-JJ curve: E_J is B_perp-independent, so a per-B_par median of
    // the pair and parity estimates is the curve sample
    if ds.header.device != "squid" {
        let mut by_bpar: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for &(_, b_par, ej, _) in &pair_rows {
            by_bpar.entry(b_par.to_bits()).or_default().push(ej);
        }
        for &(_, b_par, ej) in &parity_rows {
            by_bpar.entry(b_par.to_bits()).or_default().push(ej);
        }
        let curve: Vec<EjCurveRecord> = by_bpar
            .into_iter()
            .map(|(bits, mut ejs)| {
                ejs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = ejs[ejs.len() / 2];
                EjCurveRecord {
                    junction: "single".into(),
                    b_par_t: f64::from_bits(bits),
                    ej_ghz: median,
                    sigma_ghz: None,
                }
            })
            .collect();
        let curve_path = out_dir.join("single_curve.tsv");
        write_file(&curve_path, &serialize_ej_curves(&curve))?;
        manifest.record_output(&curve_path);
    }

    manifest.write(out_dir)?;
    if correlation.unreliable {
        return Err(CliError::Convergence(format!(
            "E_C-E_J relation unreliable: only {:.0}% of pairs within the 10 MHz band",
            100.0 * correlation.inlier_fraction
        )));
    }
    Ok(())
}
